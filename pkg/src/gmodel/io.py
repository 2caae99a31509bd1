"""On-disk formats for runs and branches.

A completed (or partially completed) run directory contains:

* ``meta.json``: full config echo, termination, library versions.
* ``diagnostics.csv``: one row per snapshot; schema tag on line one.
* ``snapshots.bin``: magic ``GMDL``, format version, then per snapshot
  the time and the samples, all little-endian 64-bit floats.
* ``snapshots_index.csv``: snapshot index, time, byte offset.

Traveling-wave branches serialize to ``branch.csv`` plus ``meta.json``.
Float round trips through the binary format are bit-exact; CSV floats
are written with shortest-round-trip repr.
"""

from __future__ import annotations

import dataclasses
import json
import os
import struct
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .equations import CascadeState, ModelKind, ModelSpec, reconstruct_g
from .integrate import (
    BlowupPolicy,
    DiagnosticsRecord,
    IntegratorConfig,
    Scheme,
    Trajectory,
)
from .spectral import PeriodicGrid, RealField
from .waves import Branch

SNAPSHOT_MAGIC = b"GMDL"
SNAPSHOT_FORMAT_VERSION = 1
DIAGNOSTICS_SCHEMA = "gmodel-diagnostics-v1"
BRANCH_SCHEMA = "gmodel-branch-v1"
META_SCHEMA = "gmodel-meta-v1"
LOCK_NAME = ".gmodel-lock"

_GRID_RANGE = (2 ** 5, 2 ** 16)


class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 2)."""


class TrajectoryFormatError(RuntimeError):
    """A run directory's files are malformed or truncated."""


class OutputDirLockedError(ConfigError):
    """Another run owns the output directory."""


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a simulate run."""

    model: str
    n_points: int
    init: str
    t_end: float
    scheme: str = "rk45"
    dt: float = 1e-3
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    snapshot_stride: float | None = None
    epsilon: float | None = None
    magma_n: float = 2.0
    magma_m: float = 1.0
    picard_tol: float = 1e-12
    picard_max_iter: int = 200

    def __post_init__(self) -> None:
        kinds = {k.value for k in ModelKind}
        if self.model not in kinds:
            raise ConfigError(f"unknown model {self.model!r}; "
                              f"choose from {sorted(kinds)}")
        n = self.n_points
        lo, hi = _GRID_RANGE
        if n < lo or n > hi or n & (n - 1) != 0:
            raise ConfigError(
                f"n_points must be a power of two in [{lo}, {hi}], got {n}")
        if self.t_end <= 0.0:
            raise ConfigError("t_end must be positive")
        if self.scheme not in ("rk4", "rk45"):
            raise ConfigError(f"scheme must be 'rk4' or 'rk45', got {self.scheme!r}")
        if self.model in ("eps-full", "cascade") and self.epsilon is None:
            raise ConfigError(f"model {self.model!r} requires --epsilon")

    def model_spec(self) -> ModelSpec:
        try:
            return ModelSpec(
                kind=ModelKind(self.model), epsilon=self.epsilon,
                magma_n=self.magma_n, magma_m=self.magma_m,
                picard_tol=self.picard_tol,
                picard_max_iter=self.picard_max_iter)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def integrator_config(self) -> IntegratorConfig:
        try:
            return IntegratorConfig(
                scheme=Scheme.RK4 if self.scheme == "rk4" else Scheme.ADAPTIVE_RK45,
                dt=self.dt, abs_tol=self.abs_tol, rel_tol=self.rel_tol,
                snapshot_stride=self.snapshot_stride)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def grid(self) -> PeriodicGrid:
        return PeriodicGrid(self.n_points)

    def initial_state(self):
        from .initexpr import InitExpressionError, parse_initial_expression
        grid = self.grid()
        try:
            expr = parse_initial_expression(self.init)
        except InitExpressionError as exc:
            raise ConfigError(f"bad --init expression: {exc}") from exc
        f = grid.field(expr(grid.nodes))
        if self.model == "cascade":
            return CascadeState(f, grid.zeros())
        return f

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**data)


# locking --------------------------------------------------------------


class output_lock:
    """Exclusive ownership of an output directory for one run."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.path = self.directory / LOCK_NAME

    def __enter__(self) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise OutputDirLockedError(
                f"output directory {self.directory} is locked by another run "
                f"(stale? remove {self.path})") from None
        with os.fdopen(fd, "w") as fh:
            fh.write(f"pid={os.getpid()}\n")
        # The lock file guards against concurrent writers; a finished run
        # releases it.  Leftover files mean a previous run already lives
        # here, and overwriting it silently would destroy results.
        leftovers = sorted(p.name for p in self.directory.iterdir()
                           if p.name != LOCK_NAME)
        if leftovers:
            self.path.unlink()
            raise OutputDirLockedError(
                f"output directory {self.directory} already contains "
                f"{leftovers[0]!r}; choose a fresh directory")
        return self.directory

    def __exit__(self, *exc_info) -> None:
        try:
            self.path.unlink()
        except FileNotFoundError:
            pass


# formatting helpers ---------------------------------------------------


def _fmt(value: float) -> str:
    return repr(float(value))


def _versions() -> dict:
    return {
        "gmodel": __version__,
        "numpy": np.__version__,
        "python": sys.version.split()[0],
    }


# trajectory serialization --------------------------------------------


def _observable_values(traj: Trajectory, state) -> np.ndarray:
    if isinstance(state, CascadeState):
        return reconstruct_g(state, traj.spec.epsilon).values
    return state.values


def serialize_trajectory(
    traj: Trajectory,
    directory: str | Path,
    run_config: RunConfig | None = None,
) -> None:
    """Write meta.json, diagnostics.csv, snapshots.bin, snapshots_index.csv.

    Cascade states are stored through their reconstruction g = h0 +
    eps*h1, so the snapshot format always holds one field per time.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    n = traj.grid.n_points
    times = traj.times
    n_snapshots = len(times)

    meta = {
        "schema": META_SCHEMA,
        "versions": _versions(),
        "config": run_config.to_dict() if run_config is not None else None,
        "termination": {
            "kind": traj.termination.kind.value,
            "detail": traj.termination.detail,
        },
        "counts": {
            "accepted_steps": traj.accepted_steps,
            "rejected_steps": traj.rejected_steps,
            "n_snapshots": n_snapshots,
        },
        "n_points": n,
        "model": traj.spec.kind.value,
    }
    (directory / "meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n")

    header = struct.pack("<4sIII", SNAPSHOT_MAGIC, SNAPSHOT_FORMAT_VERSION,
                         n, n_snapshots)
    with open(directory / "snapshots.bin", "wb") as fh:
        fh.write(header)
        for t, state in zip(times, traj.snapshots):
            fh.write(struct.pack("<d", t))
            fh.write(_observable_values(traj, state).astype("<f8").tobytes())

    record_bytes = 8 * (1 + n)
    with open(directory / "snapshots_index.csv", "w") as fh:
        fh.write(f"# {DIAGNOSTICS_SCHEMA.replace('diagnostics', 'snapshot-index')}\n")
        fh.write("index,t,byte_offset\n")
        for i, t in enumerate(times):
            fh.write(f"{i},{_fmt(t)},{len(header) + i * record_bytes}\n")

    with open(directory / "diagnostics.csv", "w") as fh:
        fh.write(f"# {DIAGNOSTICS_SCHEMA}\n")
        fh.write("t," + ",".join(DiagnosticsRecord.FIELDS) + "\n")
        for t, rec in zip(times, traj.diagnostics):
            row = [_fmt(t)] + [_fmt(v) for v in rec.as_tuple()]
            fh.write(",".join(row) + "\n")


@dataclass
class LoadedRun:
    meta: dict
    times: np.ndarray
    fields: np.ndarray  # (n_snapshots, n_points)
    diagnostics: list[dict]


def _read_csv_rows(path: Path, schema: str) -> tuple[list[str], list[list[str]]]:
    if not path.exists():
        raise TrajectoryFormatError(f"missing {path.name}")
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("#") or schema not in lines[0]:
        raise TrajectoryFormatError(
            f"{path.name} lacks the expected schema tag {schema!r}")
    header = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:] if line]
    return header, rows


def load_trajectory(directory: str | Path) -> LoadedRun:
    """Read a run directory back; binary payloads round-trip bit-exactly."""
    directory = Path(directory)
    meta_path = directory / "meta.json"
    if not meta_path.exists():
        raise TrajectoryFormatError("missing meta.json")
    meta = json.loads(meta_path.read_text())
    if meta.get("schema") != META_SCHEMA:
        raise TrajectoryFormatError(
            f"unexpected meta schema {meta.get('schema')!r}")

    blob = (directory / "snapshots.bin").read_bytes() \
        if (directory / "snapshots.bin").exists() else None
    if blob is None:
        raise TrajectoryFormatError("missing snapshots.bin")
    if len(blob) < 16:
        raise TrajectoryFormatError("snapshots.bin shorter than its header")
    magic, version, n, n_snapshots = struct.unpack("<4sIII", blob[:16])
    if magic != SNAPSHOT_MAGIC:
        raise TrajectoryFormatError(f"bad magic {magic!r} in snapshots.bin")
    if version != SNAPSHOT_FORMAT_VERSION:
        raise TrajectoryFormatError(
            f"unsupported snapshot format version {version}")
    record_bytes = 8 * (1 + n)
    expected = 16 + n_snapshots * record_bytes
    if len(blob) != expected:
        raise TrajectoryFormatError(
            f"snapshots.bin has {len(blob)} bytes, expected {expected} "
            f"({n_snapshots} snapshots of {n} points)")
    times = np.empty(n_snapshots)
    fields = np.empty((n_snapshots, n))
    for i in range(n_snapshots):
        off = 16 + i * record_bytes
        times[i] = struct.unpack("<d", blob[off : off + 8])[0]
        fields[i] = np.frombuffer(blob, dtype="<f8", count=n, offset=off + 8)

    header, rows = _read_csv_rows(directory / "diagnostics.csv",
                                  DIAGNOSTICS_SCHEMA)
    diagnostics = [
        {name: float(cell) for name, cell in zip(header, row)} for row in rows
    ]
    if len(diagnostics) != n_snapshots:
        raise TrajectoryFormatError(
            f"{len(diagnostics)} diagnostics rows for {n_snapshots} snapshots")
    return LoadedRun(meta=meta, times=times, fields=fields,
                     diagnostics=diagnostics)


# branch serialization -------------------------------------------------


def serialize_branch(branch: Branch, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    K = branch.config.K
    meta = {
        "schema": META_SCHEMA,
        "versions": _versions(),
        "config": dataclasses.asdict(branch.config),
        "termination": branch.termination,
        "counts": {"n_points_on_branch": len(branch.points)},
    }
    (directory / "meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n")
    with open(directory / "branch.csv", "w") as fh:
        fh.write(f"# {BRANCH_SCHEMA}\n")
        coeff_names = ",".join(f"f_{k}" for k in range(1, K + 1))
        fh.write(f"s,c,residual_sup,newton_iters,{coeff_names}\n")
        for p in branch.points:
            coeffs = ",".join(_fmt(v) for v in p.series.coeffs)
            fh.write(f"{_fmt(p.s)},{_fmt(p.c)},{_fmt(p.residual_sup)},"
                     f"{p.newton_iters},{coeffs}\n")


@dataclass
class LoadedBranch:
    meta: dict
    s: np.ndarray
    c: np.ndarray
    residual_sup: np.ndarray
    newton_iters: np.ndarray
    coeffs: np.ndarray  # (n_points_on_branch, K)


def load_branch(directory: str | Path) -> LoadedBranch:
    directory = Path(directory)
    meta_path = directory / "meta.json"
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    header, rows = _read_csv_rows(directory / "branch.csv", BRANCH_SCHEMA)
    if header[:4] != ["s", "c", "residual_sup", "newton_iters"]:
        raise TrajectoryFormatError("branch.csv columns are not as expected")
    data = np.array([[float(cell) for cell in row] for row in rows]) \
        if rows else np.zeros((0, len(header)))
    return LoadedBranch(
        meta=meta,
        s=data[:, 0] if rows else np.zeros(0),
        c=data[:, 1] if rows else np.zeros(0),
        residual_sup=data[:, 2] if rows else np.zeros(0),
        newton_iters=data[:, 3].astype(int) if rows else np.zeros(0, dtype=int),
        coeffs=data[:, 4:] if rows else np.zeros((0, 0)),
    )
