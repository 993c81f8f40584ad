"""Figure rendering for benchmark reports and scalar fields.

Figures are written next to the delimited report output. The Agg
backend keeps rendering headless and reproducible.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .retrieval import STRENGTHS, EvalReport

_SAVEFIG = dict(dpi=150, metadata={"Software": None})


def render_report_figures(report: EvalReport, fig_dir) -> list[Path]:
    """Write precision-recall and mAP-by-strength figures; returns the paths."""
    fig_dir = Path(fig_dir)
    fig_dir.mkdir(parents=True, exist_ok=True)
    written = []

    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    for cls in report.classes:
        curve = report.pr_curves[cls]
        ax.plot(curve["recall"], curve["precision"], marker=".", label=cls)
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    ax.set_xlim(0.0, 1.02)
    ax.set_ylim(0.0, 1.05)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8, loc="lower left")
    ax.set_title("precision-recall by transformation class")
    fig.tight_layout()
    path = fig_dir / "pr_curves.png"
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    xs = np.asarray(STRENGTHS)
    for cls in report.classes:
        ys = [report.cells[cls][s] for s in STRENGTHS]
        mask = [y is not None for y in ys]
        ax.plot(xs[mask], [y for y in ys if y is not None], marker="o", label=cls)
    ax.set_xlabel("strength cutoff ($\\leq s$)")
    ax.set_ylabel("mAP (%)")
    ax.set_xticks(list(STRENGTHS))
    ax.set_ylim(0.0, 105.0)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8, loc="lower left")
    ax.set_title("mAP by cumulative transformation strength")
    fig.tight_layout()
    path = fig_dir / "map_by_strength.png"
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)
    written.append(path)
    return written


def scalar_to_colors(values: np.ndarray, cmap: str = "viridis") -> np.ndarray:
    """Map a scalar field to RGB in [0,1] for colored-mesh export."""
    v = np.asarray(values, dtype=np.float64)
    lo, hi = float(v.min()), float(v.max())
    norm = np.zeros_like(v) if hi <= lo else (v - lo) / (hi - lo)
    return matplotlib.colormaps[cmap](norm)[:, :3]
