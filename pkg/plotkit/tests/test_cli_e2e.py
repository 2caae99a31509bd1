"""Command-line surface, plus rendering from real simulator output."""

import subprocess
import sys

import pytest

from conftest import snapshot_tree


def run_plotkit(*args):
    return subprocess.run([sys.executable, "-m", "plotkit.cli", *args],
                          capture_output=True, text=True)


def test_cli_renders_each_kind(sample_run, sample_branch, tmp_path):
    jobs = [
        ("heatmap", str(sample_run)),
        ("norms", str(sample_run)),
        ("spectrum", str(sample_run)),
        ("branch", str(sample_branch)),
    ]
    for i, (kind, source) in enumerate(jobs):
        out = tmp_path / f"fig{i}.png"
        proc = run_plotkit(kind, source, "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        assert out.exists() and out.stat().st_size > 0


def test_cli_norms_log_flag(sample_run, tmp_path):
    out = tmp_path / "norms.png"
    proc = run_plotkit("norms", str(sample_run), "--log", "--out", str(out))
    assert proc.returncode == 0
    assert out.exists()


def test_cli_schema_error_exits_2(tmp_path):
    (tmp_path / "meta.json").write_text("{}")
    proc = run_plotkit("heatmap", str(tmp_path), "--out",
                       str(tmp_path / "x.png"))
    assert proc.returncode == 2
    assert "schema error" in proc.stderr
    assert "snapshots.bin" in proc.stderr


def test_cli_bad_snapshot_list_exits_2(sample_run, tmp_path):
    proc = run_plotkit("spectrum", str(sample_run), "--snapshots", "a,b",
                       "--out", str(tmp_path / "x.png"))
    assert proc.returncode == 2


def test_cli_unknown_kind_exits_2():
    proc = run_plotkit("piechart", "somewhere", "--out", "x.png")
    assert proc.returncode == 2


# against the real simulator -------------------------------------------

pytestmark_sim = pytest.mark.skipif(
    subprocess.run([sys.executable, "-c", "import gmodel"],
                   capture_output=True).returncode != 0,
    reason="simulator package not installed")


@pytestmark_sim
def test_renders_from_real_simulator_output(tmp_path):
    from plotkit.figures import (
        render_branch,
        render_heatmap,
        render_norms,
        render_spectrum,
    )

    run_dir = tmp_path / "run"
    proc = subprocess.run(
        [sys.executable, "-m", "gmodel.cli", "simulate", "--model", "gmodel",
         "--n-points", "128", "--init", "sin(x)", "--t-end", "0.2",
         "--snapshot-stride", "0.05", "--out", str(run_dir)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr

    branch_dir = tmp_path / "branch"
    proc = subprocess.run(
        [sys.executable, "-m", "gmodel.cli", "waves", "--m-fold", "1",
         "--s-max", "0.02", "--ds", "5e-3", "--K", "16",
         "--out", str(branch_dir)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr

    before_run = snapshot_tree(run_dir)
    before_branch = snapshot_tree(branch_dir)

    heat = render_heatmap(run_dir, tmp_path / "heat.png")
    assert heat["field"].shape == (5, 128)
    norms = render_norms(run_dir, tmp_path / "norms.png", log_scale=True)
    assert norms["t"].shape == (5,)
    spec = render_spectrum(run_dir, tmp_path / "spec.png")
    assert spec["k"].shape == (64,)
    branch = render_branch(branch_dir, tmp_path / "branch.png")
    assert abs(branch["c"][0] - 1.0) < 1e-4

    assert snapshot_tree(run_dir) == before_run
    assert snapshot_tree(branch_dir) == before_branch
