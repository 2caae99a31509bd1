import json
import struct

import numpy as np
import pytest

DIAG_COLUMNS = ("t", "sup_norm", "h1_norm", "h2_norm", "mean", "min_u",
                "analyticity_radius", "spectral_tail_fraction")


def write_run(directory, times, fields, diagnostics=None, model="gmodel"):
    """Materialize a run directory in the documented layout."""
    directory.mkdir(parents=True, exist_ok=True)
    times = np.asarray(times, dtype=np.float64)
    fields = np.asarray(fields, dtype=np.float64)
    n_snapshots, n_points = fields.shape

    meta = {
        "schema": "gmodel-meta-v1",
        "model": model,
        "n_points": n_points,
        "counts": {"n_snapshots": n_snapshots},
        "termination": {"kind": "reached_t_end", "detail": ""},
    }
    (directory / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")

    with open(directory / "snapshots.bin", "wb") as fh:
        fh.write(struct.pack("<4sIII", b"GMDL", 1, n_points, n_snapshots))
        for t, row in zip(times, fields):
            fh.write(struct.pack("<d", t))
            fh.write(row.astype("<f8").tobytes())

    if diagnostics is None:
        diagnostics = np.zeros((n_snapshots, len(DIAG_COLUMNS)))
        diagnostics[:, 0] = times
        diagnostics[:, 1] = np.max(np.abs(fields), axis=1)
    with open(directory / "diagnostics.csv", "w") as fh:
        fh.write("# gmodel-diagnostics-v1\n")
        fh.write(",".join(DIAG_COLUMNS) + "\n")
        for row in diagnostics:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    return directory


def write_branch(directory, s, c, coeffs):
    directory.mkdir(parents=True, exist_ok=True)
    coeffs = np.asarray(coeffs, dtype=np.float64)
    K = coeffs.shape[1]
    meta = {"schema": "gmodel-meta-v1", "termination": "reached_s_max",
            "config": {"m_fold": 1, "K": K}}
    (directory / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    with open(directory / "branch.csv", "w") as fh:
        fh.write("# gmodel-branch-v1\n")
        fh.write("s,c,residual_sup,newton_iters,"
                 + ",".join(f"f_{k}" for k in range(1, K + 1)) + "\n")
        for si, ci, row in zip(s, c, coeffs):
            cells = [repr(float(si)), repr(float(ci)), "1e-13", "3"]
            cells += [repr(float(v)) for v in row]
            fh.write(",".join(cells) + "\n")
    return directory


@pytest.fixture
def sample_run(tmp_path):
    n_points, n_snapshots = 64, 5
    z = 2.0 * np.pi * np.arange(n_points) / n_points
    times = np.linspace(0.0, 1.0, n_snapshots)
    fields = np.array([np.sin(z - t) for t in times])
    return write_run(tmp_path / "run", times, fields)


@pytest.fixture
def sample_branch(tmp_path):
    s = np.array([0.005, 0.01, 0.015, 0.02])
    c = 1.0 - 0.3 * s ** 2
    coeffs = np.zeros((s.size, 8))
    coeffs[:, 0] = s
    coeffs[:, 1] = 0.1 * s ** 2
    return write_branch(tmp_path / "branch", s, c, coeffs)


def snapshot_tree(directory):
    """Byte-level fingerprint of every file under a directory."""
    return {p.name: p.read_bytes()
            for p in sorted(directory.iterdir()) if p.is_file()}
