"""Figure renderers for the four gnmlab CSV kinds.

Rendering is pure with respect to the CSV: fixed style, fixed dpi, no
timestamps or version stamps in the image, so identical input bytes yield
identical image bytes.  Nothing is written until a figure has been fully
assembled, so a bad input never leaves a partial file behind.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import CompareTable, CrnTable, SweepTable, TraceTable

# Mean convergence time of the reference tempotron, drawn on heatmap
# colorbars so performance cells can be compared against it at a glance.
MST_REFERENCE = 377.0

_DPI = 120
# strip the savefig metadata that would otherwise embed a library version
_PNG_METADATA = {"Software": None}


def _save(fig, out_path) -> None:
    fig.savefig(out_path, dpi=_DPI, metadata=_PNG_METADATA)
    plt.close(fig)


def render_heatmap(table: SweepTable, out_path, cap: int | None = None) -> None:
    """Seed-mean performance over the (alpha, eta) grid, max cell marked."""
    cap = table.cap if cap is None else cap
    if np.all(np.isnan(table.matrix)):
        raise ValueError("sweep grid contains no finite performance values")
    fig, ax = plt.subplots(figsize=(6.4, 5.2))
    im = ax.imshow(
        table.matrix,
        origin="lower",
        aspect="auto",
        vmin=0.0,
        vmax=cap,
        cmap="viridis",
    )
    ax.set_xticks(range(len(table.etas)), [f"{e:g}" for e in table.etas])
    ax.set_yticks(range(len(table.alphas)), [f"{a:g}" for a in table.alphas])
    ax.set_xlabel("eta")
    ax.set_ylabel("alpha")
    ax.set_title("noisy performance (seed mean)")
    i, j = np.unravel_index(np.nanargmax(table.matrix), table.matrix.shape)
    ax.scatter([j], [i], marker="x", s=140, linewidths=3.0, color="red")
    cbar = fig.colorbar(im, ax=ax, label="timebins survived")
    if MST_REFERENCE <= cap:
        cbar.ax.axhline(MST_REFERENCE, color="red", linewidth=1.2)
        cbar.ax.text(1.3, MST_REFERENCE, "MST", color="red", fontsize=8,
                     va="center", transform=cbar.ax.get_yaxis_transform())
    _save(fig, out_path)


def render_trace(table: TraceTable, out_path) -> None:
    """Membrane potential with the readout threshold; R and D below."""
    fig, (ax_v, ax_aux) = plt.subplots(
        2, 1, figsize=(8.0, 5.0), sharex=True,
        gridspec_kw={"height_ratios": [2.2, 1.0]},
    )
    ax_v.plot(table.t, table.v, color="#1f4e9c", linewidth=0.9, label="V")
    ax_v.axhline(table.theta_r, color="red", linestyle="--", linewidth=1.0,
                 label="theta_r")
    ax_v.set_ylabel("membrane potential")
    ax_v.legend(loc="upper right", fontsize=8)
    ax_aux.plot(table.t, table.r, color="#2a8f5c", linewidth=0.8, label="R")
    ax_aux.plot(table.t, table.d, color="#b3771e", linewidth=0.8, label="D")
    ax_aux.set_xlabel("time (bins)")
    ax_aux.set_ylabel("reset / decay")
    ax_aux.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    _save(fig, out_path)


def render_crn_overlay(table: CrnTable, out_path) -> None:
    """Individual SSA runs in light gray under the mean-field reference."""
    fig, ax = plt.subplots(figsize=(7.0, 4.6))
    for k, run in enumerate(table.runs):
        ax.plot(table.times, run, color="0.65", linewidth=0.7,
                label="SSA runs" if k == 0 else None)
    ax.plot(table.times, table.ode_v, color="#c22525", linewidth=1.8,
            label="mean field")
    ax.set_xlabel("time")
    ax.set_ylabel("V / n_mol")
    n_mol = table.metadata.get("n_mol")
    ax.set_title(f"copy-number noise, n_mol={n_mol}" if n_mol else "copy-number noise")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    _save(fig, out_path)


def render_comparison(table: CompareTable, out_path) -> None:
    """Mean noisy performance per model, per-seed scores overplotted."""
    fig, ax = plt.subplots(figsize=(6.4, 4.6))
    xs = np.arange(len(table.models))
    means = [float(np.mean([p for _, p in table.scores[m]])) for m in table.models]
    ax.bar(xs, means, width=0.6, color="#7da7d9", edgecolor="#1f4e9c")
    for x, model in zip(xs, table.models):
        seeds_perf = table.scores[model]
        jitter = np.linspace(-0.18, 0.18, len(seeds_perf))
        ax.scatter(x + jitter, [p for _, p in seeds_perf], s=16, color="#203050",
                   zorder=3)
    ax.set_xticks(xs, table.models)
    ax.set_ylabel("noisy performance")
    ax.set_title("model comparison (bars: seed means)")
    fig.tight_layout()
    _save(fig, out_path)
