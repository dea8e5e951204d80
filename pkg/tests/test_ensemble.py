"""Run averaging, out-of-fold scoring, and the stacked meta-classifier."""

from datetime import datetime, timezone

import numpy as np
import pytest

from checkworthy.corpus import (
    Dataset,
    FactualityTable,
    Tweet,
    stratified_kfold,
    write_run_file,
)
from checkworthy.ensemble import (
    ScoreFile,
    StackedDesign,
    average_runs,
    booleans_only,
    fit_stacker,
    oof_scores,
    predict_stacked,
)
from checkworthy.errors import DataError
from checkworthy.features import FeatureMatrix
from checkworthy.models import LogRegConfig, SvmConfig
from checkworthy.ranking import evaluate

COLLECTION = datetime(2020, 5, 1, tzinfo=timezone.utc)


class TestAverageRuns:
    def test_mean(self):
        a = ScoreFile(name="a", scores={"t1": 0.2})
        b = ScoreFile(name="b", scores={"t1": 0.8})
        assert average_runs([a, b]).scores["t1"] == pytest.approx(0.5)

    def test_single_file_identity(self):
        a = ScoreFile(name="a", scores={"t1": 0.3, "t2": 0.7})
        assert average_runs([a]).scores == a.scores

    def test_mismatched_ids_listed(self):
        a = ScoreFile(name="a", scores={"t1": 0.1, "t2": 0.2})
        b = ScoreFile(name="b", scores={"t1": 0.1, "t3": 0.2})
        with pytest.raises(DataError, match="t2.*t3"):
            average_runs([a, b])

    def test_permutation_invariant_and_idempotent(self):
        rng = np.random.default_rng(0)
        files = [
            ScoreFile(name=f"f{i}", scores={f"t{j}": float(rng.random()) for j in range(10)})
            for i in range(4)
        ]
        forward = average_runs(files).scores
        backward = average_runs(files[::-1]).scores
        assert forward == backward
        twice = average_runs([files[0], files[0]]).scores
        assert twice == pytest.approx(files[0].scores)

    def test_round_trip_through_run_file(self, tmp_path):
        path = tmp_path / "r.tsv"
        write_run_file(path, "rid", {"t1": 0.125, "t2": 0.5}, topic_id="1")
        sf = ScoreFile.from_run_file(path)
        assert sf.name == "rid"
        assert sf.scores == {"t1": 0.125, "t2": 0.5}


def _separable(n=40, d=4, seed=3):
    rng = np.random.default_rng(seed)
    direction = np.ones(d) / np.sqrt(d)
    labels = np.array([i % 2 for i in range(n)])
    signs = np.where(labels == 1, 1.0, -1.0)
    X = rng.normal(size=(n, d)) * 0.05 + np.outer(signs, direction)
    ids = [f"t{i:02d}" for i in range(n)]
    features = FeatureMatrix(row_ids=ids, values=X, column_names=[f"x{j}" for j in range(d)])
    return features, {tid: int(l) for tid, l in zip(ids, labels)}


def _tweets_for(labels):
    tweets = [
        Tweet(
            tweet_id=tid,
            topic_id="1",
            text="x",
            label=lab,
            created_at=datetime(2015, 1, 1, tzinfo=timezone.utc),
        )
        for tid, lab in labels.items()
    ]
    return Dataset(tweets=tweets, collection_date=COLLECTION)


class TestOofScores:
    def test_every_row_scored_once(self):
        features, labels = _separable()
        folds = stratified_kfold(_tweets_for(labels), 5, seed=1)
        sf = oof_scores(LogRegConfig(C=1.0), features, labels, folds)
        assert set(sf.scores) == set(features.row_ids)

    def test_separable_data_ranks_positives_first(self):
        features, labels = _separable()
        folds = stratified_kfold(_tweets_for(labels), 5, seed=1)
        sf = oof_scores(SvmConfig(kernel="linear", C=10.0), features, labels, folds)
        assert evaluate(sf.scores, labels, score_kind="margin").map_ == pytest.approx(1.0)

    def test_deterministic(self):
        features, labels = _separable()
        folds = stratified_kfold(_tweets_for(labels), 4, seed=2)
        a = oof_scores(LogRegConfig(C=2.0), features, labels, folds)
        b = oof_scores(LogRegConfig(C=2.0), features, labels, folds)
        assert a.scores == b.scores

    def test_label_poisoning_leaves_heldout_scores_bitwise_identical(self):
        features, labels = _separable()
        folds = stratified_kfold(_tweets_for(labels), 5, seed=1)
        config = LogRegConfig(C=1.0, solver="newton")
        base = oof_scores(config, features, labels, folds)
        for fold in range(folds.k):
            poisoned = dict(labels)
            for tid in folds.members(fold):
                poisoned[tid] = 1 - poisoned[tid]
            redone = oof_scores(config, features, poisoned, folds)
            for tid in folds.members(fold):
                assert redone.scores[tid] == base.scores[tid]  # bitwise


class TestStacker:
    def _upstream(self, labels, noise=0.0, seed=0):
        rng = np.random.default_rng(seed)
        return ScoreFile(
            name="up",
            scores={tid: lab + noise * float(rng.normal()) for tid, lab in labels.items()},
        )

    def test_column_budget_twelve_plus_one(self):
        _, labels = _separable(n=20)
        dataset = _tweets_for(labels)
        up = self._upstream(labels, noise=0.05)
        design = StackedDesign(upstream_columns=["up"])
        assert design.width == 13
        model = fit_stacker(design, [up], dataset, None, LogRegConfig(C=1.0))
        assert model.w.shape[0] == 13

    def test_boolean_only_design_is_ten_columns(self):
        design = StackedDesign(upstream_columns=["up"], metadata_columns=booleans_only())
        assert design.width == 10

    def test_perfect_upstream_with_flat_metadata_preserves_ranking(self):
        _, labels = _separable(n=30)
        dataset = _tweets_for(labels)
        up = self._upstream(labels, noise=0.01, seed=4)
        design = StackedDesign(upstream_columns=["up"])
        model = fit_stacker(design, [up], dataset, None, LogRegConfig(C=5.0))
        scored = predict_stacked(model, design, [up], dataset, None)
        assert evaluate(scored.scores, labels).map_ == pytest.approx(1.0)

    def test_upstream_coverage_gap_rejected(self):
        _, labels = _separable(n=20)
        dataset = _tweets_for(labels)
        up = self._upstream(labels)
        del up.scores["t05"]
        design = StackedDesign(upstream_columns=["up"])
        with pytest.raises(DataError, match="t05"):
            fit_stacker(design, [up], dataset, None, LogRegConfig())

    def test_design_mismatch_rejected(self):
        _, labels = _separable(n=20)
        dataset = _tweets_for(labels)
        up = self._upstream(labels, noise=0.05)
        design = StackedDesign(upstream_columns=["up"])
        model = fit_stacker(design, [up], dataset, None, LogRegConfig())
        narrower = StackedDesign(upstream_columns=["up"], metadata_columns=booleans_only())
        with pytest.raises(DataError, match="does not match"):
            predict_stacked(model, narrower, [up], dataset, None)

    def test_missing_collection_date_rejected(self):
        _, labels = _separable(n=20)
        dataset = _tweets_for(labels)
        dataset.collection_date = None
        up = self._upstream(labels)
        with pytest.raises(DataError, match="collection date"):
            fit_stacker(StackedDesign(upstream_columns=["up"]), [up], dataset, None, LogRegConfig())

    def test_svm_stacker_supported(self):
        _, labels = _separable(n=24)
        dataset = _tweets_for(labels)
        up = self._upstream(labels, noise=0.05, seed=5)
        design = StackedDesign(upstream_columns=["up"], metadata_columns=())
        model = fit_stacker(design, [up], dataset, None, SvmConfig(kernel="linear", C=5.0))
        scored = predict_stacked(model, design, [up], dataset, None)
        assert evaluate(scored.scores, labels, score_kind="margin").map_ == pytest.approx(1.0)

    def test_metadata_contributes_when_upstream_is_uninformative(self):
        """Stacking can learn from metadata alone: verified flag equals label."""
        labels = {f"t{i:02d}": i % 2 for i in range(30)}
        tweets = [
            Tweet(
                tweet_id=tid,
                topic_id="1",
                text="x",
                label=lab,
                verified=bool(lab),
                created_at=datetime(2015, 1, 1, tzinfo=timezone.utc),
            )
            for tid, lab in labels.items()
        ]
        dataset = Dataset(tweets=tweets, collection_date=COLLECTION)
        up = ScoreFile(name="up", scores={tid: 0.5 for tid in labels})
        design = StackedDesign(upstream_columns=["up"])
        model = fit_stacker(design, [up], dataset, None, LogRegConfig(C=10.0))
        scored = predict_stacked(model, design, [up], dataset, None)
        assert evaluate(scored.scores, labels).map_ == pytest.approx(1.0)

    def test_factuality_columns_fed_from_urls(self):
        labels = {"a": 1, "b": 0}
        tweets = [
            Tweet(tweet_id="a", topic_id="1", text="x", label=1,
                  urls=("http://infowars.com/p",),
                  created_at=datetime(2015, 1, 1, tzinfo=timezone.utc)),
            Tweet(tweet_id="b", topic_id="1", text="x", label=0,
                  created_at=datetime(2015, 1, 1, tzinfo=timezone.utc)),
        ]
        dataset = Dataset(tweets=tweets, collection_date=COLLECTION)
        fact = FactualityTable(entries={"infowars.com": "conspiracy"})
        up = ScoreFile(name="up", scores={"a": 0.6, "b": 0.4})
        design = StackedDesign(upstream_columns=["up"])
        from checkworthy.ensemble import _stack_matrix

        matrix = _stack_matrix(design, [up], dataset.by_id(), ["a", "b"], fact, COLLECTION)
        col = matrix.column_names.index("fact_conspiracy")
        assert matrix.values[0, col] == 1.0
        assert matrix.values[1, col] == 0.0
