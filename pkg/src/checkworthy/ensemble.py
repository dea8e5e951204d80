"""Run ensembling: score averaging and the stacked meta-classifier.

Upstream scores (for example the predictions of externally trained
encoders) arrive as run files; this module never computes them. The
stacker concatenates one column per upstream file with the metadata
features and trains a fresh convex model on top.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Dataset, FactualityTable, FoldAssignment, read_run_file
from .errors import DataError
from .features import (
    BOOLEAN_METADATA_COLUMNS,
    METADATA_COLUMNS,
    FeatureMatrix,
    concat_features,
    extract_metadata,
)
from .search import fit_config, score_model


@dataclass
class ScoreFile:
    """Named tweet_id -> score map, read from or written as a run file."""

    name: str
    scores: dict[str, float]

    @classmethod
    def from_run_file(cls, path) -> "ScoreFile":
        _, run_id, rows = read_run_file(path)
        return cls(name=str(run_id), scores=dict(rows))


@dataclass
class StackedDesign:
    """Column layout of the stacking matrix: upstream scores then metadata."""

    upstream_columns: list[str]
    metadata_columns: tuple = METADATA_COLUMNS

    def __post_init__(self):
        if not self.upstream_columns:
            raise DataError("a stacked design needs at least one upstream column")
        bad = [c for c in self.metadata_columns if c not in METADATA_COLUMNS]
        if bad:
            raise DataError(f"unknown metadata columns: {bad}")

    @property
    def width(self) -> int:
        return len(self.upstream_columns) + len(self.metadata_columns)


def booleans_only() -> tuple:
    """The nine boolean metadata columns, for the reduced design."""
    return BOOLEAN_METADATA_COLUMNS


def average_runs(files) -> ScoreFile:
    """Arithmetic mean of scores per tweet over runs with identical id sets."""
    files = list(files)
    if not files:
        raise DataError("nothing to average")
    base = set(files[0].scores)
    for f in files[1:]:
        diff = sorted(base.symmetric_difference(f.scores))
        if diff:
            raise DataError(f"id sets differ between runs (e.g. {diff[:5]})")
    # fsum is exactly rounded, so the mean is permutation-invariant bitwise
    scores = {
        tid: math.fsum(f.scores[tid] for f in files) / len(files) for tid in base
    }
    return ScoreFile(name="mean(" + ",".join(f.name for f in files) + ")", scores=scores)


def oof_scores(config, features: FeatureMatrix, labels: dict, folds: FoldAssignment,
               name: str | None = None) -> ScoreFile:
    """One out-of-fold score per tweet: each row is scored by the model
    trained on the complement of its fold, so stacking on these scores
    cannot leak labels."""
    y = np.array([labels[tid] for tid in features.row_ids], dtype=np.float64)
    assign = np.array([folds.fold_of[tid] for tid in features.row_ids])
    scores: dict[str, float] = {}
    for fold in range(folds.k):
        train = assign != fold
        test = ~train
        if not np.any(test):
            continue
        model = fit_config(config, features.values[train], y[train])
        fold_scores = score_model(model, features.values[test])
        for tid, s in zip(np.array(features.row_ids)[test], fold_scores):
            scores[str(tid)] = float(s)
    return ScoreFile(name=name or "oof", scores=scores)


def _stack_matrix(design: StackedDesign, upstream, tweets_by_id, ids, fact, collection_date) -> FeatureMatrix:
    by_name = {f.name: f for f in upstream}
    missing_files = [n for n in design.upstream_columns if n not in by_name]
    if missing_files:
        raise DataError(f"missing upstream score files: {missing_files}")
    cols = []
    for n in design.upstream_columns:
        f = by_name[n]
        gaps = [tid for tid in ids if tid not in f.scores]
        if gaps:
            raise DataError(f"upstream {n!r} does not cover ids {gaps[:5]}")
        cols.append(
            FeatureMatrix(
                row_ids=list(ids),
                values=np.array([[f.scores[tid]] for tid in ids]),
                column_names=[n],
            )
        )
    if design.metadata_columns:
        keep = [METADATA_COLUMNS.index(c) for c in design.metadata_columns]
        rows = []
        for tid in ids:
            tweet = tweets_by_id.get(tid)
            if tweet is None:
                raise DataError(f"no tweet record for scored id {tid}")
            rows.append(extract_metadata(tweet, fact, collection_date)[keep])
        cols.append(
            FeatureMatrix(
                row_ids=list(ids),
                values=np.array(rows),
                column_names=list(design.metadata_columns),
            )
        )
    return concat_features(cols)


def _collection_date(tweets: Dataset, collection_date):
    date = collection_date or tweets.collection_date
    if date is None:
        raise DataError("stacking with metadata needs a collection date")
    return date


def fit_stacker(design: StackedDesign, upstream, tweets: Dataset, fact: FactualityTable | None,
                stacker_config, collection_date=None):
    """Train the meta-classifier on upstream scores plus metadata.

    Fits on the labeled tweets; every one of them must appear in every
    upstream file.
    """
    labeled = tweets.labeled()
    if not labeled:
        raise DataError("no labeled tweets to fit the stacker on")
    ids = [t.tweet_id for t in labeled]
    date = _collection_date(tweets, collection_date) if design.metadata_columns else None
    matrix = _stack_matrix(design, upstream, tweets.by_id(), ids, fact, date)
    y = np.array([t.label for t in labeled], dtype=np.float64)
    return fit_config(stacker_config, matrix.values, y)


def predict_stacked(model, design: StackedDesign, upstream, tweets: Dataset,
                    fact: FactualityTable | None, collection_date=None) -> ScoreFile:
    """Score every id present in all upstream files with the fitted stacker."""
    id_sets = [set(f.scores) for f in upstream]
    ids = sorted(set.intersection(*id_sets)) if id_sets else []
    if not ids:
        raise DataError("no ids shared by all upstream files")
    date = _collection_date(tweets, collection_date) if design.metadata_columns else None
    matrix = _stack_matrix(design, upstream, tweets.by_id(), ids, fact, date)
    dim = model.w.shape[0] if hasattr(model, "w") else model.support_vectors.shape[1]
    if matrix.values.shape[1] != dim:
        raise DataError(
            f"design width {matrix.values.shape[1]} does not match model dimension {dim}"
        )
    scores = score_model(model, matrix.values)
    return ScoreFile(name="stacked", scores={tid: float(s) for tid, s in zip(ids, scores)})
