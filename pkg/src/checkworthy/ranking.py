"""Ranking metrics: AP, P@k, R-Precision, macro-F1, and the full report.

The task is a single ranked list per topic, so MAP equals AP here; the
field keeps the conventional name. Ties everywhere are broken by
descending score then ascending tweet_id, making every ranking a total
order and every output byte-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import ranked_items
from .errors import DataError

P_AT_KS = (1, 3, 5, 10, 20, 30)

PROBABILITY = "probability"
MARGIN = "margin"
_THRESHOLDS = {PROBABILITY: 0.5, MARGIN: 0.0}


@dataclass
class EvalReport:
    map_: float
    r_precision: float
    p_at: dict[int, float]
    macro_f1: float | None


def average_precision(ranked_labels) -> float:
    """Mean of P@k over the positions k holding relevant items."""
    labels = np.asarray(ranked_labels, dtype=np.float64)
    total = labels.sum()
    if total == 0:
        raise DataError("average precision undefined: no positive labels")
    cum = np.cumsum(labels)
    ranks = np.arange(1, len(labels) + 1)
    return float(np.sum((cum / ranks) * labels) / total)


def precision_at_k(ranked_labels, k: int) -> float:
    """Positives within the top k, over k; short lists are penalized."""
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    labels = np.asarray(ranked_labels, dtype=np.float64)
    return float(labels[:k].sum() / k)


def r_precision(ranked_labels) -> float:
    """P@R where R is the number of relevant items."""
    labels = np.asarray(ranked_labels, dtype=np.float64)
    total = int(labels.sum())
    if total == 0:
        raise DataError("R-Precision undefined: no positive labels")
    return precision_at_k(labels, total)


def _f1(tp, fp, fn) -> float:
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom > 0 else 0.0


def macro_f1(scores, gold, score_kind: str = PROBABILITY) -> float:
    """Unweighted mean of the per-class F1 scores.

    Predictions threshold at 0.5 for probability scores and at 0 for
    margin scores. A class with neither predictions nor actuals
    contributes F1 = 0.
    """
    if score_kind not in _THRESHOLDS:
        raise DataError(f"score_kind must be one of {tuple(_THRESHOLDS)}")
    scores = np.asarray(scores, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.int64)
    if set(np.unique(gold)) != {0, 1}:
        raise DataError("macro-F1 needs both classes in the gold labels")
    pred = (scores >= _THRESHOLDS[score_kind]).astype(np.int64)
    f1_pos = _f1(np.sum((pred == 1) & (gold == 1)), np.sum((pred == 1) & (gold == 0)), np.sum((pred == 0) & (gold == 1)))
    f1_neg = _f1(np.sum((pred == 0) & (gold == 0)), np.sum((pred == 0) & (gold == 1)), np.sum((pred == 1) & (gold == 0)))
    return float((f1_pos + f1_neg) / 2.0)


def evaluate(scores: dict, gold: dict, score_kind: str = PROBABILITY) -> EvalReport:
    """All official measures for one scored list against gold labels."""
    missing = sorted(set(gold) - set(scores))
    extra = sorted(set(scores) - set(gold))
    if missing or extra:
        raise DataError(
            f"scored ids do not match gold ids (missing: {missing[:5]}, extra: {extra[:5]})"
        )
    order = [tid for tid, _ in ranked_items(scores)]
    labels = np.array([gold[tid] for tid in order], dtype=np.float64)
    if labels.sum() == 0:
        raise DataError("evaluation needs at least one positive gold label")
    both_classes = 0 < labels.sum() < len(labels)
    mf1 = None
    if both_classes:
        aligned_scores = np.array([scores[tid] for tid in order])
        mf1 = macro_f1(aligned_scores, labels.astype(int), score_kind)
    return EvalReport(
        map_=average_precision(labels),
        r_precision=r_precision(labels),
        p_at={k: precision_at_k(labels, k) for k in P_AT_KS},
        macro_f1=mf1,
    )


def report_columns(report: EvalReport) -> list[str]:
    """Column values in official order, 4 decimals; macro-F1 appended when defined."""
    cols = [f"{report.map_:.4f}", f"{report.r_precision:.4f}"]
    cols += [f"{report.p_at[k]:.4f}" for k in P_AT_KS]
    if report.macro_f1 is not None:
        cols.append(f"{report.macro_f1:.4f}")
    return cols


def report_header(report: EvalReport) -> list[str]:
    names = ["MAP", "R-Pr"] + [f"P@{k}" for k in P_AT_KS]
    if report.macro_f1 is not None:
        names.append("macro-F1")
    return names
