"""Tiny expression language for initial conditions on the command line.

Grammar (whitespace ignored):

    expr   := term (('+' | '-') term)*
    term   := unary ('*' unary)*
    unary  := '-' unary | atom
    atom   := NUMBER | 'x' | 'sin' '(' expr ')' | 'cos' '(' expr ')'
            | '(' expr ')'

Evaluation is vectorized over a numpy array of sample points.  Errors
carry the character position and what was expected there.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .spectral import FloatArray

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[+\-*()]))")

_FUNCTIONS = {"sin": np.sin, "cos": np.cos}


class InitExpressionError(ValueError):
    """Parse failure, with the offending character position attached."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


@dataclass(frozen=True)
class _Token:
    kind: str  # "number" | "ident" | "op" | "end"
    text: str
    position: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.lastgroup is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            bad_pos = pos + (len(text[pos:]) - len(stripped))
            raise InitExpressionError(
                f"unexpected character {text[bad_pos]!r}", bad_pos)
        kind = match.lastgroup
        tokens.append(_Token(kind, match.group(kind),
                             match.start(kind)))
        pos = match.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


@dataclass(frozen=True)
class InitialExpression:
    """Compiled expression; call with the grid nodes to get samples."""

    source: str
    _fn: Callable[[FloatArray], FloatArray]

    def __call__(self, x: FloatArray) -> FloatArray:
        return np.broadcast_to(np.asarray(self._fn(x), dtype=np.float64),
                               np.shape(x)).copy()


def parse_initial_expression(text: str) -> InitialExpression:
    tokens = _tokenize(text)
    index = 0

    def peek() -> _Token:
        return tokens[index]

    def advance() -> _Token:
        nonlocal index
        tok = tokens[index]
        index += 1
        return tok

    def expect_op(op: str) -> None:
        tok = peek()
        if tok.kind == "op" and tok.text == op:
            advance()
            return
        raise InitExpressionError(
            f"expected {op!r}, found {tok.text!r}" if tok.kind != "end"
            else f"expected {op!r}, found end of input", tok.position)

    def parse_expr():
        fn = parse_term()
        while peek().kind == "op" and peek().text in "+-":
            op = advance().text
            rhs = parse_term()
            fn = (lambda a, b: lambda x: a(x) + b(x))(fn, rhs) if op == "+" \
                else (lambda a, b: lambda x: a(x) - b(x))(fn, rhs)
        return fn

    def parse_term():
        fn = parse_unary()
        while peek().kind == "op" and peek().text == "*":
            advance()
            rhs = parse_unary()
            fn = (lambda a, b: lambda x: a(x) * b(x))(fn, rhs)
        return fn

    def parse_unary():
        tok = peek()
        if tok.kind == "op" and tok.text == "-":
            advance()
            inner = parse_unary()
            return lambda x: -inner(x)
        return parse_atom()

    def parse_atom():
        tok = peek()
        if tok.kind == "number":
            advance()
            value = float(tok.text)
            return lambda x: np.full_like(np.asarray(x, dtype=np.float64), value)
        if tok.kind == "ident":
            advance()
            if tok.text == "x":
                return lambda x: np.asarray(x, dtype=np.float64)
            if tok.text in _FUNCTIONS:
                fn = _FUNCTIONS[tok.text]
                expect_op("(")
                inner = parse_expr()
                expect_op(")")
                return (lambda f, a: lambda x: f(a(x)))(fn, inner)
            raise InitExpressionError(
                f"unknown identifier {tok.text!r}", tok.position)
        if tok.kind == "op" and tok.text == "(":
            advance()
            inner = parse_expr()
            expect_op(")")
            return inner
        what = f"found {tok.text!r}" if tok.kind != "end" else "found end of input"
        raise InitExpressionError(
            f"expected a number, 'x', 'sin', 'cos', '-' or '(', {what}",
            tok.position)

    fn = parse_expr()
    trailing = peek()
    if trailing.kind != "end":
        raise InitExpressionError(
            f"unexpected trailing input {trailing.text!r}", trailing.position)
    return InitialExpression(source=text, _fn=fn)
