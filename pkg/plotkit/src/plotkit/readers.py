"""Parsers for the simulator's on-disk formats.

Everything here reads the documented external interfaces only: the
meta.json echo, the tagged CSV schemas, and the snapshots.bin layout
(magic "GMDL", little-endian u32 format version / n_points /
n_snapshots header, then per snapshot a float64 time followed by
n_points float64 samples).  No physics is recomputed.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SNAPSHOT_MAGIC = b"GMDL"
SNAPSHOT_FORMAT_VERSION = 1
DIAGNOSTICS_TAG = "gmodel-diagnostics-v1"
BRANCH_TAG = "gmodel-branch-v1"


class SchemaError(ValueError):
    """Input does not match the documented format.

    The message always carries the offending file, and the line number
    when one makes sense.
    """

    def __init__(self, path: Path, message: str, line: int | None = None):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = Path(path)
        self.line = line


def _read_tagged_csv(path: Path, tag: str) -> tuple[list[str], np.ndarray]:
    if not path.exists():
        raise SchemaError(path, "file not found")
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise SchemaError(path, f"missing schema tag {tag!r}", line=1)
    if tag not in lines[0]:
        raise SchemaError(path, f"schema tag {lines[0][1:].strip()!r} "
                          f"does not match {tag!r}", line=1)
    if len(lines) < 2:
        raise SchemaError(path, "missing column header", line=2)
    header = lines[1].split(",")
    rows = []
    for lineno, text in enumerate(lines[2:], start=3):
        if not text:
            continue
        cells = text.split(",")
        if len(cells) != len(header):
            raise SchemaError(path, f"expected {len(header)} columns, "
                              f"found {len(cells)}", line=lineno)
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise SchemaError(path, str(exc), line=lineno) from None
    data = np.array(rows) if rows else np.zeros((0, len(header)))
    return header, data


@dataclass(frozen=True)
class RunData:
    meta: dict
    times: np.ndarray          # (n_snapshots,)
    fields: np.ndarray         # (n_snapshots, n_points)
    diagnostics_header: list[str]
    diagnostics: np.ndarray    # (n_rows, len(header))


def read_run(directory: str | Path) -> RunData:
    directory = Path(directory)
    meta_path = directory / "meta.json"
    if not meta_path.exists():
        raise SchemaError(meta_path, "file not found")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(meta_path, exc.msg, line=exc.lineno) from None

    bin_path = directory / "snapshots.bin"
    if not bin_path.exists():
        raise SchemaError(bin_path, "file not found")
    blob = bin_path.read_bytes()
    if len(blob) < 16:
        raise SchemaError(bin_path, "truncated header")
    magic, version, n_points, n_snapshots = struct.unpack_from("<4sIII", blob)
    if magic != SNAPSHOT_MAGIC:
        raise SchemaError(bin_path, f"bad magic {magic!r}")
    if version != SNAPSHOT_FORMAT_VERSION:
        raise SchemaError(bin_path, f"unsupported format version {version}")
    record = 8 * (1 + n_points)
    expect = 16 + n_snapshots * record
    if len(blob) != expect:
        raise SchemaError(bin_path, f"expected {expect} bytes for "
                          f"{n_snapshots} snapshots, found {len(blob)}")
    payload = np.frombuffer(blob, dtype="<f8", offset=16)
    payload = payload.reshape(n_snapshots, 1 + n_points)
    times = payload[:, 0].copy()
    fields = payload[:, 1:].copy()

    header, diagnostics = _read_tagged_csv(
        directory / "diagnostics.csv", DIAGNOSTICS_TAG)
    if header[0] != "t":
        raise SchemaError(directory / "diagnostics.csv",
                          "first column must be t", line=2)
    return RunData(meta=meta, times=times, fields=fields,
                   diagnostics_header=header, diagnostics=diagnostics)


@dataclass(frozen=True)
class BranchData:
    meta: dict
    s: np.ndarray
    c: np.ndarray
    residual_sup: np.ndarray
    coeffs: np.ndarray  # (n_points_on_branch, K)


def read_branch(path: str | Path) -> BranchData:
    """Accept the branch directory or the branch.csv path itself."""
    path = Path(path)
    csv_path = path / "branch.csv" if path.is_dir() else path
    meta_path = csv_path.parent / "meta.json"
    meta = {}
    if meta_path.exists():
        try:
            meta = json.loads(meta_path.read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError(meta_path, exc.msg, line=exc.lineno) from None
    header, data = _read_tagged_csv(csv_path, BRANCH_TAG)
    if header[:4] != ["s", "c", "residual_sup", "newton_iters"]:
        raise SchemaError(csv_path, "unexpected leading columns "
                          f"{header[:4]}", line=2)
    return BranchData(meta=meta,
                      s=data[:, 0] if data.size else np.zeros(0),
                      c=data[:, 1] if data.size else np.zeros(0),
                      residual_sup=data[:, 2] if data.size else np.zeros(0),
                      coeffs=data[:, 4:] if data.size else np.zeros((0, 0)))
