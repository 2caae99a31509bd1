"""Command-line entry: one figure per invocation."""

from __future__ import annotations

import argparse
import sys

from .figures import (
    render_branch,
    render_heatmap,
    render_norms,
    render_spectrum,
)
from .readers import SchemaError

EXIT_OK = 0
EXIT_CONFIG = 2


def _parse_indices(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description="Render figures from simulator run directories "
                    "and branch CSVs.")
    sub = parser.add_subparsers(dest="kind", required=True)

    heat = sub.add_parser("heatmap", help="space-time field diagram")
    heat.add_argument("run_dir")
    heat.add_argument("--out", required=True)

    norms = sub.add_parser("norms", help="diagnostic columns vs time")
    norms.add_argument("run_dir")
    norms.add_argument("--out", required=True)
    norms.add_argument("--log", action="store_true",
                       help="log scale on the value axis")

    spec = sub.add_parser("spectrum", help="snapshot spectra with decay fit")
    spec.add_argument("run_dir")
    spec.add_argument("--out", required=True)
    spec.add_argument("--snapshots", type=_parse_indices, default=(0, -1),
                      help="comma-separated snapshot indices (default 0,-1)")

    branch = sub.add_parser("branch", help="speed and amplitude along a branch")
    branch.add_argument("branch_path",
                        help="branch directory or branch.csv path")
    branch.add_argument("--out", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.kind == "heatmap":
            render_heatmap(args.run_dir, args.out)
        elif args.kind == "norms":
            render_norms(args.run_dir, args.out, log_scale=args.log)
        elif args.kind == "spectrum":
            render_spectrum(args.run_dir, args.out,
                            snapshot_indices=args.snapshots)
        else:
            render_branch(args.branch_path, args.out)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
