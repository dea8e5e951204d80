"""Figure rendering for evaluation reports.

Figures are written next to the delimited report file so that a run
directory is self-describing: the numbers and their pictures live
side by side.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .ranking import P_AT_KS, EvalReport


def save_precision_figure(report: EvalReport, path) -> Path:
    """Bar chart of P@k with MAP and R-Precision reference lines."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    xs = np.arange(len(P_AT_KS))
    ax.bar(xs, [report.p_at[k] for k in P_AT_KS], color="#487880", width=0.6)
    ax.axhline(report.map_, color="#b1402f", lw=1.2, label=f"MAP = {report.map_:.4f}")
    ax.axhline(report.r_precision, color="#7a6aa0", lw=1.2, ls="--",
               label=f"R-Pr = {report.r_precision:.4f}")
    ax.set_xticks(xs, [f"P@{k}" for k in P_AT_KS])
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("precision")
    ax.legend(loc="lower left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_score_distribution_figure(scores: dict, gold: dict, path) -> Path:
    """Overlaid score histograms for check-worthy vs other tweets."""
    path = Path(path)
    pos = [s for tid, s in scores.items() if gold.get(tid) == 1]
    neg = [s for tid, s in scores.items() if gold.get(tid) == 0]
    lo = min(min(pos, default=0.0), min(neg, default=0.0))
    hi = max(max(pos, default=1.0), max(neg, default=1.0))
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    bins = np.linspace(lo, hi, 25)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.hist(neg, bins=bins, alpha=0.6, label="not check-worthy", color="#8a8a8a")
    ax.hist(pos, bins=bins, alpha=0.6, label="check-worthy", color="#b1402f")
    ax.set_xlabel("score")
    ax.set_ylabel("tweets")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
