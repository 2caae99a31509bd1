"""Command-line front end.

Exit codes: 0 on success (including runs that stop on suspected
blow-up, which is a finding, not a failure), 2 for configuration
errors, 3 for solver failures (divergent implicit solves, Newton
failures, step underflow); partial outputs are still written.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import __version__
from .integrate import BlowupPolicy, TerminationKind, integrate
from .io import (
    ConfigError,
    RunConfig,
    output_lock,
    serialize_branch,
    serialize_trajectory,
)
from .spectral import PeriodicGrid
from .validation import (
    StudyConfig,
    asymptotic_order_study,
    integrator_convergence_study,
    operator_selftest,
)
from .waves import ContinuationConfig, continue_branch

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

_FAILURE_TERMINATIONS = (TerminationKind.PICARD_DIVERGED,
                         TerminationKind.STEP_UNDERFLOW)


def _add_simulate_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", required=True,
                        choices=["gmodel", "conduit", "magma", "eps-full", "cascade"])
    parser.add_argument("--n-points", type=int, default=256)
    parser.add_argument("--init", required=True,
                        help="initial profile, e.g. 'sin(x)' or '1 + 0.1*cos(x)'")
    parser.add_argument("--t-end", type=float, required=True)
    parser.add_argument("--scheme", choices=["rk4", "rk45"], default="rk45")
    parser.add_argument("--dt", type=float, default=1e-3,
                        help="fixed step for rk4, initial step for rk45")
    parser.add_argument("--abs-tol", type=float, default=1e-10)
    parser.add_argument("--rel-tol", type=float, default=1e-8)
    parser.add_argument("--snapshot-stride", type=float, default=None)
    parser.add_argument("--epsilon", type=float, default=None)
    parser.add_argument("--magma-n", type=float, default=2.0)
    parser.add_argument("--magma-m", type=float, default=1.0)
    parser.add_argument("--picard-tol", type=float, default=1e-12)


def _run_config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        model=args.model, n_points=args.n_points, init=args.init,
        t_end=args.t_end, scheme=args.scheme, dt=args.dt,
        abs_tol=args.abs_tol, rel_tol=args.rel_tol,
        snapshot_stride=args.snapshot_stride, epsilon=args.epsilon,
        magma_n=args.magma_n, magma_m=args.magma_m,
        picard_tol=args.picard_tol)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gmodel",
        description="Pseudospectral conduit-family solver on [0, 2*pi)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="evolve a model and write a run directory")
    _add_simulate_flags(p_sim)
    p_sim.add_argument("--out", required=True)

    p_waves = sub.add_parser("waves", help="continue a traveling-wave branch in amplitude")
    p_waves.add_argument("--m-fold", type=int, required=True)
    p_waves.add_argument("--K", type=int, default=64)
    p_waves.add_argument("--s-max", type=float, required=True)
    p_waves.add_argument("--ds", type=float, default=1e-3)
    p_waves.add_argument("--newton-tol", type=float, default=1e-12)
    p_waves.add_argument("--out", required=True)

    p_val = sub.add_parser("validate", help="cross-model and operator checks")
    val_sub = p_val.add_subparsers(dest="check", required=True)

    p_order = val_sub.add_parser("order-study",
                                 help="conduit vs reduced model at shrinking amplitude")
    p_order.add_argument("--init", default="cos(x)")
    p_order.add_argument("--epsilons", default="0.1,0.05,0.025",
                         help="comma-separated, strictly decreasing")
    p_order.add_argument("--t-end", type=float, default=1.0)
    p_order.add_argument("--n-points", type=int, default=128)
    p_order.add_argument("--against", choices=["gmodel", "cascade"],
                         default="gmodel")
    p_order.add_argument("--out", default=None)

    p_rk = val_sub.add_parser("rk-convergence", help="fixed-step self-convergence")
    p_rk.add_argument("--init", default="sin(x)")
    p_rk.add_argument("--dts", default="0.04,0.02,0.01,0.005",
                      help="comma-separated halving sequence")
    p_rk.add_argument("--t-end", type=float, default=0.5)
    p_rk.add_argument("--n-points", type=int, default=128)
    p_rk.add_argument("--out", default=None)

    p_self = val_sub.add_parser("selftest", help="spectral operator identities")
    p_self.add_argument("--n-points", type=int, default=256)
    p_self.add_argument("--seed", type=int, default=0)
    p_self.add_argument("--out", default=None)

    sub.add_parser("version", help="print the package version")

    p_dump = sub.add_parser("config-dump",
                            help="print the fully resolved run config as JSON")
    _add_simulate_flags(p_dump)

    return parser


def _parse_float_list(text: str, what: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad {what} list {text!r}: {exc}") from exc
    if not values:
        raise ConfigError(f"{what} list is empty")
    return values


def _init_field(expression: str, n_points: int):
    cfg = RunConfig(model="gmodel", n_points=n_points, init=expression, t_end=1.0)
    return cfg.initial_state()


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _run_config_from_args(args)
    spec = cfg.model_spec()
    initial = cfg.initial_state()
    integ = cfg.integrator_config()
    with output_lock(args.out) as outdir:
        traj = integrate(spec, initial, cfg.t_end, integ,
                         BlowupPolicy.for_grid(cfg.grid(), spec.kind))
        serialize_trajectory(traj, outdir, cfg)
    kind = traj.termination.kind
    print(f"termination: {kind.value}"
          + (f" ({traj.termination.detail})" if traj.termination.detail else ""))
    print(f"recorded {len(traj.times)} snapshots, final t = {traj.times[-1]:.6g}")
    print(f"wrote {outdir}")
    return EXIT_SOLVER if kind in _FAILURE_TERMINATIONS else EXIT_OK


def _cmd_waves(args: argparse.Namespace) -> int:
    if args.m_fold < 1:
        raise ConfigError("--m-fold must be >= 1")
    try:
        cfg = ContinuationConfig(
            m_fold=args.m_fold, s_max=args.s_max, ds=args.ds, K=args.K,
            newton_tol=args.newton_tol)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    with output_lock(args.out) as outdir:
        branch = continue_branch(cfg)
        serialize_branch(branch, outdir)
    print(f"branch: {len(branch.points)} points, termination: {branch.termination}")
    if branch.points:
        last = branch.points[-1]
        print(f"last point s = {last.s:.6g}, c = {last.c:.12g}")
    print(f"wrote {outdir}")
    return EXIT_OK if branch.termination == "reached_s_max" else EXIT_SOLVER


def _write_report(report_dict: dict, out: str | None, csv_name: str | None = None,
                  csv_text: str | None = None) -> None:
    print(json.dumps(report_dict, indent=2, sort_keys=True))
    if out:
        with output_lock(out) as outdir:
            (outdir / "report.json").write_text(
                json.dumps(report_dict, indent=2, sort_keys=True) + "\n")
            if csv_name and csv_text is not None:
                (outdir / csv_name).write_text(csv_text)


def _cmd_order_study(args: argparse.Namespace) -> int:
    epsilons = _parse_float_list(args.epsilons, "epsilons")
    g0 = _init_field(args.init, args.n_points)
    try:
        report = asymptotic_order_study(
            g0, epsilons, args.t_end, StudyConfig(against=args.against))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    payload = dataclasses.asdict(report)
    lines = ["# gmodel-order-study-v1", "epsilon,error"]
    lines += [f"{e!r},{err!r}" for e, err in zip(report.epsilons, report.errors)]
    _write_report(payload, args.out, "errors.csv", "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_rk_convergence(args: argparse.Namespace) -> int:
    from .equations import ModelKind, ModelSpec
    dts = _parse_float_list(args.dts, "dts")
    g0 = _init_field(args.init, args.n_points)
    try:
        report = integrator_convergence_study(
            ModelSpec(ModelKind.GMODEL), g0, args.t_end, dts)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    payload = dataclasses.asdict(report)
    lines = ["# gmodel-rk-convergence-v1", "dt,error"]
    lines += [f"{dt!r},{err!r}" for dt, err in zip(report.dt_list, report.errors)]
    _write_report(payload, args.out, "errors.csv", "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_selftest(args: argparse.Namespace) -> int:
    try:
        PeriodicGrid(args.n_points)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    report = operator_selftest(n_points=args.n_points, seed=args.seed)
    payload = dataclasses.asdict(report)
    for check in report.checks:
        status = "pass" if check.passed else "FAIL"
        print(f"[{status}] {check.name}: worst error {check.worst_error:.3e} "
              f"(tolerance {check.tolerance:.1e})")
    _write_report(payload, args.out)
    return EXIT_OK if report.passed else EXIT_SOLVER


def _cmd_config_dump(args: argparse.Namespace) -> int:
    cfg = _run_config_from_args(args)
    cfg.model_spec()
    cfg.integrator_config()
    cfg.initial_state()  # validates the expression too
    print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "waves":
            return _cmd_waves(args)
        if args.command == "validate":
            if args.check == "order-study":
                return _cmd_order_study(args)
            if args.check == "rk-convergence":
                return _cmd_rk_convergence(args)
            return _cmd_selftest(args)
        if args.command == "version":
            print(__version__)
            return EXIT_OK
        if args.command == "config-dump":
            return _cmd_config_dump(args)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
