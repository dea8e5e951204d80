"""Randomized hyperparameter search scored by cross-validated MAP.

Regularization C and kernel coefficient gamma are drawn from Gamma(2, 1)
in shape-rate form (mode 1, mean 2), kernels and polynomial degrees
uniformly. Each trial owns a sub-seed derived from (master seed, trial
index), so results are identical however trials are scheduled.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import FoldAssignment, ranked_items
from .errors import ConvergenceError, DataError
from .features import FeatureMatrix
from .models import (
    KERNELS,
    SOLVERS,
    LogRegConfig,
    SvmConfig,
    config_to_dict,
    predict_logreg,
    predict_svm,
    train_logreg,
    train_svm_smo,
)
from .ranking import MARGIN, PROBABILITY, average_precision, macro_f1

MODEL_KINDS = ("svm", "logreg")
DEFAULT_ITERS = {"svm": 1000, "logreg": 1250}


@dataclass
class SearchSpace:
    model_kind: str
    gamma_shape: float = 2.0
    gamma_rate: float = 1.0
    kernel_choices: tuple = KERNELS
    degree_range: tuple = (2, 5)
    solver_choices: tuple = SOLVERS
    n_iter: int | None = None

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise DataError(f"model_kind must be one of {MODEL_KINDS}")
        if self.gamma_shape <= 0 or self.gamma_rate <= 0:
            raise DataError("Gamma parameters must be positive")
        if self.n_iter is not None and self.n_iter < 1:
            raise DataError("n_iter must be >= 1")

    def iterations(self) -> int:
        return self.n_iter if self.n_iter is not None else DEFAULT_ITERS[self.model_kind]


@dataclass
class Trial:
    index: int
    config: SvmConfig | LogRegConfig
    per_fold_map: list[float]
    mean_map: float
    mean_macro_f1: float
    seed: int
    failed: bool = False
    error: str | None = None

    def to_record(self) -> dict:
        return {
            "index": self.index,
            "config": config_to_dict(self.config),
            "per_fold_map": self.per_fold_map,
            "mean_map": None if self.failed else self.mean_map,
            "mean_macro_f1": None if self.failed else self.mean_macro_f1,
            "seed": self.seed,
            "failed": self.failed,
            "error": self.error,
        }


def sample_gamma(rng: np.random.Generator, shape: float = 2.0, rate: float = 1.0) -> float:
    """One Gamma(shape, rate) draw; density proportional to x^(a-1) e^(-bx)."""
    if shape <= 0 or rate <= 0:
        raise DataError("Gamma parameters must be positive")
    return float(rng.gamma(shape, 1.0 / rate))


def sample_config(rng: np.random.Generator, space: SearchSpace):
    """Draw one model configuration; draw order is fixed for determinism."""
    if space.model_kind == "svm":
        kernel = space.kernel_choices[int(rng.integers(len(space.kernel_choices)))]
        C = sample_gamma(rng, space.gamma_shape, space.gamma_rate)
        gamma = sample_gamma(rng, space.gamma_shape, space.gamma_rate)
        lo, hi = space.degree_range
        degree = int(rng.integers(lo, hi + 1))
        return SvmConfig(
            kernel=kernel,
            C=C,
            gamma=None if kernel == "linear" else gamma,
            degree=degree if kernel == "poly" else 3,
        )
    C = sample_gamma(rng, space.gamma_shape, space.gamma_rate)
    solver = space.solver_choices[int(rng.integers(len(space.solver_choices)))]
    return LogRegConfig(C=C, solver=solver)


def _fold_arrays(features: FeatureMatrix, labels: dict, folds: FoldAssignment):
    missing = [tid for tid in features.row_ids if tid not in folds.fold_of]
    if missing:
        raise DataError(f"rows without fold assignment: {missing[:5]}")
    unlabeled = [tid for tid in features.row_ids if labels.get(tid) is None]
    if unlabeled:
        raise DataError(f"rows without labels: {unlabeled[:5]}")
    y = np.array([labels[tid] for tid in features.row_ids], dtype=np.float64)
    assign = np.array([folds.fold_of[tid] for tid in features.row_ids])
    return y, assign


def fit_config(config, X, y):
    if isinstance(config, SvmConfig):
        return train_svm_smo(X, y, config)
    return train_logreg(X, y, config)


def score_model(model, X) -> np.ndarray:
    if hasattr(model, "support_vectors"):
        return predict_svm(model, X)
    return predict_logreg(model, X)


def score_kind_for(config) -> str:
    return MARGIN if isinstance(config, SvmConfig) else PROBABILITY


def _fold_metrics(config, features, y, assign, fold, row_ids):
    train = assign != fold
    test = ~train
    model = fit_config(config, features.values[train], y[train])
    scores = score_model(model, features.values[test])
    test_ids = [tid for tid, t in zip(row_ids, test) if t]
    ranked = ranked_items(dict(zip(test_ids, scores)))
    by_id = dict(zip(test_ids, y[test]))
    ranked_labels = [by_id[tid] for tid, _ in ranked]
    ap = average_precision(ranked_labels)
    f1 = macro_f1(scores, y[test].astype(int), score_kind_for(config))
    return ap, f1


def cross_validate(config, features: FeatureMatrix, labels: dict, folds: FoldAssignment,
                   index: int = 0, seed: int = 0) -> Trial:
    """Evaluate one configuration by k-fold cross-validation.

    Training reads only the complement of each held-out fold. A failure
    on any fold marks the whole trial failed instead of raising.
    """
    y, assign = _fold_arrays(features, labels, folds)
    per_fold_ap, per_fold_f1 = [], []
    try:
        for fold in range(folds.k):
            ap, f1 = _fold_metrics(config, features, y, assign, fold, features.row_ids)
            per_fold_ap.append(ap)
            per_fold_f1.append(f1)
    except (ConvergenceError, DataError, np.linalg.LinAlgError) as exc:
        return Trial(
            index=index, config=config, per_fold_map=per_fold_ap, mean_map=float("nan"),
            mean_macro_f1=float("nan"), seed=seed, failed=True, error=str(exc),
        )
    return Trial(
        index=index,
        config=config,
        per_fold_map=per_fold_ap,
        mean_map=float(np.mean(per_fold_ap)),
        mean_macro_f1=float(np.mean(per_fold_f1)),
        seed=seed,
        failed=False,
    )


def _trial_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])


def run_trial(space: SearchSpace, features, labels, folds, master_seed: int, index: int) -> Trial:
    rng = np.random.default_rng([master_seed, index])
    config = sample_config(rng, space)
    return cross_validate(config, features, labels, folds,
                          index=index, seed=_trial_seed(master_seed, index))


def random_search(space: SearchSpace, features: FeatureMatrix, labels: dict,
                  folds: FoldAssignment, seed: int, threads: int = 1):
    """Run the sampled trials; best = highest mean MAP, ties by macro-F1 then index."""
    n = space.iterations()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trials = list(
                pool.map(lambda i: run_trial(space, features, labels, folds, seed, i), range(n))
            )
    else:
        trials = [run_trial(space, features, labels, folds, seed, i) for i in range(n)]
    ok = [t for t in trials if not t.failed]
    if not ok:
        raise ConvergenceError(f"all {n} search trials failed; first error: {trials[0].error}")
    best = max(ok, key=lambda t: (t.mean_map, t.mean_macro_f1, -t.index))
    return best, trials


def write_trial_log(trials, path):
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for t in trials:
            fh.write(json.dumps(t.to_record(), sort_keys=True) + "\n")
