"""Sampling distributions, cross-validation, and search determinism."""

import numpy as np
import pytest

from checkworthy.corpus import Dataset, Tweet, stratified_kfold
from checkworthy.errors import ConvergenceError, DataError
from checkworthy.features import FeatureMatrix
from checkworthy.models import LogRegConfig, SvmConfig
from checkworthy.search import (
    SearchSpace,
    cross_validate,
    random_search,
    sample_config,
    sample_gamma,
    write_trial_log,
)


class TestGammaSampler:
    def test_moments(self):
        """Gamma(2, 1): mean 2, variance 2, strictly positive support."""
        rng = np.random.default_rng(123)
        draws = np.array([sample_gamma(rng) for _ in range(100_000)])
        assert draws.mean() == pytest.approx(2.0, abs=0.03)
        assert draws.var() == pytest.approx(2.0, abs=0.06)
        assert np.all(draws > 0)

    def test_rate_parameterization(self):
        """Gamma(2, 4) has mean alpha/beta = 0.5."""
        rng = np.random.default_rng(5)
        draws = np.array([sample_gamma(rng, 2.0, 4.0) for _ in range(50_000)])
        assert draws.mean() == pytest.approx(0.5, abs=0.02)

    def test_bad_parameters(self):
        rng = np.random.default_rng(0)
        with pytest.raises(DataError):
            sample_gamma(rng, shape=-1.0)


class TestSampleConfig:
    def test_kernel_frequencies_uniform(self):
        rng = np.random.default_rng(7)
        space = SearchSpace(model_kind="svm")
        kernels = [sample_config(rng, space).kernel for _ in range(10_000)]
        for kernel in ("linear", "poly", "rbf"):
            assert kernels.count(kernel) / 10_000 == pytest.approx(1 / 3, abs=0.02)

    def test_degree_frequencies_uniform_over_poly_draws(self):
        rng = np.random.default_rng(8)
        space = SearchSpace(model_kind="svm")
        degrees = []
        while len(degrees) < 10_000:
            cfg = sample_config(rng, space)
            if cfg.kernel == "poly":
                degrees.append(cfg.degree)
        for degree in (2, 3, 4, 5):
            assert degrees.count(degree) / len(degrees) == pytest.approx(0.25, abs=0.02)

    def test_c_and_gamma_strictly_positive(self):
        rng = np.random.default_rng(9)
        space = SearchSpace(model_kind="svm")
        for _ in range(500):
            cfg = sample_config(rng, space)
            assert cfg.C > 0
            if cfg.kernel != "linear":
                assert cfg.gamma > 0

    def test_same_seed_same_sequence(self):
        space = SearchSpace(model_kind="logreg")
        a = [sample_config(np.random.default_rng([3, i]), space) for i in range(20)]
        b = [sample_config(np.random.default_rng([3, i]), space) for i in range(20)]
        assert a == b

    def test_default_iteration_counts(self):
        assert SearchSpace(model_kind="svm").iterations() == 1000
        assert SearchSpace(model_kind="logreg").iterations() == 1250
        assert SearchSpace(model_kind="svm", n_iter=20).iterations() == 20


def _toy_problem(n=24, d=3, seed=0):
    rng = np.random.default_rng(seed)
    direction = np.ones(d) / np.sqrt(d)
    labels = np.array([i % 2 for i in range(n)])
    signs = np.where(labels == 1, 1.0, -1.0)
    X = rng.normal(size=(n, d)) * 0.1 + np.outer(signs, direction)
    ids = [f"t{i:02d}" for i in range(n)]
    features = FeatureMatrix(row_ids=ids, values=X, column_names=[f"x{j}" for j in range(d)])
    label_map = {tid: int(l) for tid, l in zip(ids, labels)}
    tweets = [Tweet(tweet_id=tid, topic_id="1", text="x", label=label_map[tid]) for tid in ids]
    folds = stratified_kfold(Dataset(tweets=tweets), 4, seed=1)
    return features, label_map, folds


class TestCrossValidate:
    def test_perfect_classifier_reaches_map_one(self):
        features, labels, folds = _toy_problem()
        trial = cross_validate(SvmConfig(kernel="linear", C=10.0), features, labels, folds)
        assert not trial.failed
        assert trial.mean_map == pytest.approx(1.0)
        assert len(trial.per_fold_map) == folds.k
        assert trial.mean_map == pytest.approx(np.mean(trial.per_fold_map))

    def test_training_failure_marks_trial_failed(self):
        features, labels, folds = _toy_problem()
        # an absurdly small update budget forces a ConvergenceError inside
        import checkworthy.search as search_mod

        original = search_mod.train_svm_smo

        def crippled(X, y, config, max_updates=None):
            return original(X, y, config, max_updates=1)

        search_mod.train_svm_smo = crippled
        try:
            trial = cross_validate(SvmConfig(kernel="linear", C=1.0), features, labels, folds)
        finally:
            search_mod.train_svm_smo = original
        assert trial.failed
        assert trial.error

    def test_heldout_labels_never_read_during_training(self):
        """Poisoning a fold's labels must not change that fold's scores."""
        features, labels, folds = _toy_problem()
        config = LogRegConfig(C=1.0, solver="newton")
        base = cross_validate(config, features, labels, folds)
        poisoned_fold = 0
        poisoned = dict(labels)
        for tid in folds.members(poisoned_fold):
            poisoned[tid] = 1 - poisoned[tid]
        # metric values change (labels changed) but the underlying scores of
        # the held-out fold come from an identical model; verify via oof
        from checkworthy.ensemble import oof_scores

        a = oof_scores(config, features, labels, folds)
        b = oof_scores(config, features, poisoned, folds)
        for tid in folds.members(poisoned_fold):
            assert a.scores[tid] == b.scores[tid]
        assert not base.failed


class TestRandomSearch:
    def test_single_trial(self):
        features, labels, folds = _toy_problem()
        space = SearchSpace(model_kind="svm", n_iter=1)
        best, trials = random_search(space, features, labels, folds, seed=4)
        assert len(trials) == 1 and best is trials[0]

    def test_best_dominates_all_trials(self):
        features, labels, folds = _toy_problem()
        space = SearchSpace(model_kind="logreg", n_iter=8)
        best, trials = random_search(space, features, labels, folds, seed=5)
        for t in trials:
            if not t.failed:
                assert best.mean_map >= t.mean_map

    def test_deterministic_across_thread_counts(self):
        features, labels, folds = _toy_problem()
        space = SearchSpace(model_kind="svm", n_iter=6)
        best1, trials1 = random_search(space, features, labels, folds, seed=6, threads=1)
        best2, trials2 = random_search(space, features, labels, folds, seed=6, threads=4)
        assert [t.to_record() for t in trials1] == [t.to_record() for t in trials2]
        assert best1.index == best2.index

    def test_trial_log_round_trips_as_json(self, tmp_path):
        import json

        features, labels, folds = _toy_problem()
        space = SearchSpace(model_kind="svm", n_iter=3)
        _, trials = random_search(space, features, labels, folds, seed=7)
        log = tmp_path / "trials.jsonl"
        write_trial_log(trials, log)
        lines = log.read_text().splitlines()
        assert len(lines) == 3
        for line, trial in zip(lines, trials):
            record = json.loads(line)
            assert record["index"] == trial.index
            assert record["config"]["model"] == "svm"

    def test_all_failed_raises(self):
        features, labels, folds = _toy_problem()
        import checkworthy.search as search_mod

        original = search_mod.train_svm_smo

        def crippled(X, y, config, max_updates=None):
            return original(X, y, config, max_updates=1)

        search_mod.train_svm_smo = crippled
        try:
            with pytest.raises(ConvergenceError, match="all .* failed"):
                random_search(
                    SearchSpace(model_kind="svm", n_iter=2), features, labels, folds, seed=8
                )
        finally:
            search_mod.train_svm_smo = original
