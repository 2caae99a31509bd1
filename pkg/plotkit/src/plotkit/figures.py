"""The four figure kinds over run directories and branch CSVs.

Each renderer writes an image and returns the exact arrays it plotted,
so tests can assert on data rather than pixels.  Rendering never
writes into the input directory.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .readers import BranchData, RunData, read_branch, read_run  # noqa: E402

_LOG_FLOOR = 1e-18


def _finish(fig, out_path: str | Path) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out_path


def render_heatmap(run_dir: str | Path, out_path: str | Path,
                   run: RunData | None = None) -> dict:
    """Space-time diagram: z horizontal, t vertical, field as color."""
    run = run or read_run(run_dir)
    n_points = run.fields.shape[1]
    z = 2.0 * np.pi * np.arange(n_points) / n_points
    fig, ax = plt.subplots(figsize=(7, 4.5))
    mesh = ax.pcolormesh(z, run.times, run.fields, shading="nearest",
                         cmap="RdBu_r")
    fig.colorbar(mesh, ax=ax, label="field value")
    ax.set_xlabel("z")
    ax.set_ylabel("t")
    ax.set_title(f"{run.meta.get('model', 'run')} space-time")
    _finish(fig, out_path)
    return {"z": z, "t": run.times, "field": run.fields}


def render_norms(run_dir: str | Path, out_path: str | Path,
                 log_scale: bool = False,
                 run: RunData | None = None) -> dict:
    """Every diagnostics column against time on one set of axes."""
    run = run or read_run(run_dir)
    t = run.diagnostics[:, 0]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    series = {}
    for j, name in enumerate(run.diagnostics_header[1:], start=1):
        values = run.diagnostics[:, j]
        series[name] = values
        plotted = np.maximum(np.abs(values), _LOG_FLOOR) if log_scale \
            else values
        ax.plot(t, plotted, label=name, linewidth=1.2)
    if log_scale:
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("|value|" if log_scale else "value")
    ax.legend(fontsize=7, ncol=2)
    ax.set_title("diagnostics")
    _finish(fig, out_path)
    return {"t": t, "series": series}


def _decay_fit(k: np.ndarray, log_amp: np.ndarray) -> tuple[float, float]:
    # straight-line fit on the usable part of the displayed spectrum
    usable = log_amp > np.log(_LOG_FLOOR)
    if np.count_nonzero(usable) < 2:
        return 0.0, float(log_amp[0]) if log_amp.size else 0.0
    slope, intercept = np.polyfit(k[usable], log_amp[usable], 1)
    return float(slope), float(intercept)


def render_spectrum(run_dir: str | Path, out_path: str | Path,
                    snapshot_indices: tuple[int, ...] = (0, -1),
                    run: RunData | None = None) -> dict:
    """log |f_k| against k for chosen snapshots, with the fitted
    exponential-decay slope of the last one overlaid."""
    run = run or read_run(run_dir)
    n_snapshots, n_points = run.fields.shape
    indices = [i % n_snapshots for i in snapshot_indices]
    k = np.arange(1, n_points // 2 + 1)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    spectra = {}
    for i in indices:
        coeffs = np.fft.rfft(run.fields[i]) / n_points
        amp = np.maximum(np.abs(coeffs[1:]), _LOG_FLOOR)
        spectra[i] = amp
        ax.semilogy(k, amp, linewidth=1.0,
                    label=f"t = {run.times[i]:.4g}")
    slope, intercept = _decay_fit(k, np.log(spectra[indices[-1]]))
    ax.semilogy(k, np.exp(intercept + slope * k), "k--", linewidth=0.8,
                label=f"fit decay rate {-slope:.3g}")
    ax.set_xlabel("mode k")
    ax.set_ylabel("|f_k|")
    ax.legend(fontsize=8)
    ax.set_title("snapshot spectra")
    _finish(fig, out_path)
    return {"k": k, "spectra": spectra, "fit_slope": slope,
            "fit_intercept": intercept}


def _profile_sup(coeffs: np.ndarray) -> float:
    # sup over one period of sum_k f_k cos(k eta); the m-fold scaling
    # of the argument does not change the extremum
    eta = np.linspace(0.0, 2.0 * np.pi, 4096, endpoint=False)
    k = np.arange(1, coeffs.size + 1)
    profile = coeffs @ np.cos(np.outer(k, eta))
    return float(np.max(np.abs(profile)))


def render_branch(branch_path: str | Path, out_path: str | Path,
                  branch: BranchData | None = None) -> dict:
    """Speed and profile amplitude along the continuation branch."""
    branch = branch or read_branch(branch_path)
    sup = np.array([_profile_sup(c) for c in branch.coeffs])
    fig, (ax_c, ax_a) = plt.subplots(1, 2, figsize=(9, 4))
    ax_c.plot(branch.s, branch.c, "o-", markersize=3)
    ax_c.set_xlabel("amplitude s")
    ax_c.set_ylabel("speed c")
    ax_a.plot(branch.s, sup, "o-", markersize=3)
    ax_a.set_xlabel("amplitude s")
    ax_a.set_ylabel("sup |profile|")
    fig.suptitle("traveling-wave branch")
    _finish(fig, out_path)
    return {"s": branch.s, "c": branch.c, "sup": sup}
