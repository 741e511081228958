"""Figure rendering for the CLI report paths.

Figures are written next to the delimited output files; the CSVs stay the
primary artifact and remain consumable by external tools.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save_rate_figure", "save_beampattern_figure", "save_convergence_figure"]


def save_rate_figure(summary_rows: list[dict], path: str | Path) -> Path:
    """Sum spectral efficiency vs SNR, one curve per (scheme, second-stage)."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 5))
    curves: dict[tuple, list[tuple[float, float]]] = {}
    for row in summary_rows:
        key = (row["scheme"], row["second_stage"])
        curves.setdefault(key, []).append((row["snr_db"], row["mean_sum_rate"]))
    for (scheme, second_stage), points in sorted(curves.items()):
        points.sort()
        snrs, means = zip(*points)
        label = scheme if second_stage else f"{scheme} (no ZF stage)"
        style = "-o" if second_stage else "--s"
        ax.plot(snrs, means, style, label=label, markersize=4)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("Spectral efficiency (bits/s/Hz)")
    ax.grid(True, alpha=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_beampattern_figure(
    angles_deg: np.ndarray, gains_per_receiver: list[np.ndarray], path: str | Path,
    title: str = "",
) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 5))
    for user, gains in enumerate(gains_per_receiver):
        ax.plot(angles_deg, 20.0 * np.log10(np.maximum(gains, 1e-8)),
                label=f"receiver {user + 1}")
    ax.set_xlabel("Angle (deg)")
    ax.set_ylabel("Array gain (dB)")
    ax.set_ylim(bottom=-60)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_convergence_figure(traces: dict, path: str | Path) -> Path:
    path = Path(path)
    named = [(k, v) for k, v in traces.items() if isinstance(v, (list, tuple)) and v]
    fig, axes = plt.subplots(1, max(len(named), 1), figsize=(5 * max(len(named), 1), 4))
    if len(named) <= 1:
        axes = [axes]
    for ax, (name, values) in zip(axes, named):
        ax.semilogy(range(len(values)), values, "-o", markersize=3)
        ax.set_xlabel("Iteration")
        ax.set_ylabel(name.replace("_", " "))
        ax.grid(True, alpha=0.4)
    fig.suptitle(str(traces.get("scheme", "")))
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
