"""Convex classifiers trained from scratch.

Two model families share one regularization axis:

* L2-regularized logistic regression, minimizing
  J(w, b) = 0.5 ||w||^2 + C * sum_i ln(1 + exp(-y_i (w.x_i + b))),
  solved by batch gradient descent with backtracking or by damped Newton.
  The bias is unregularized.
* Soft-margin kernel SVM, solving the dual
  max sum a_i - 0.5 sum_ij a_i a_j y_i y_j K(x_i, x_j)
  subject to 0 <= a_i <= C and sum a_i y_i = 0,
  by SMO pair updates on the maximal-violation pair until every point
  satisfies the KKT conditions within tolerance.

Labels may be given as {0, 1} or {-1, +1}; they are mapped to signs
internally.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.special import expit

from .errors import ConvergenceError, DataError

KERNELS = ("linear", "poly", "rbf")
SOLVERS = ("gradient_descent", "newton")


@dataclass
class LogRegConfig:
    C: float = 1.0
    solver: str = "newton"
    max_iter: int = 5000
    tol: float = 1e-8

    def __post_init__(self):
        if self.C <= 0:
            raise DataError(f"C must be positive, got {self.C}")
        if self.tol <= 0:
            raise DataError(f"tol must be positive, got {self.tol}")
        if self.solver not in SOLVERS:
            raise DataError(f"unknown solver {self.solver!r}; expected one of {SOLVERS}")


@dataclass
class SvmConfig:
    kernel: str = "rbf"
    C: float = 1.0
    gamma: float | None = None  # None resolves to 1/d at training time
    degree: int = 3
    coef0: float = 0.0
    tol: float = 1e-3

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise DataError(f"unknown kernel {self.kernel!r}; expected one of {KERNELS}")
        if self.C <= 0:
            raise DataError(f"C must be positive, got {self.C}")
        if self.tol <= 0:
            raise DataError(f"tol must be positive, got {self.tol}")
        if self.gamma is not None and self.gamma <= 0:
            raise DataError(f"gamma must be positive, got {self.gamma}")
        if self.kernel == "poly" and not 2 <= self.degree <= 5:
            raise DataError(f"degree must be in [2, 5], got {self.degree}")


@dataclass
class TrainedLogReg:
    w: np.ndarray
    b: float
    converged: bool = True


@dataclass
class TrainedSvm:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i for each support vector
    b: float
    config: SvmConfig
    converged: bool = True


def _signs(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    out = np.where(y > 0, 1.0, -1.0)
    if np.all(out == out[0]):
        raise DataError("training labels contain a single class")
    return out


def kernel_eval(config: SvmConfig, x, z) -> float:
    """Kernel value for one vector pair."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape:
        raise DataError(f"kernel arguments differ in length: {x.shape} vs {z.shape}")
    return float(kernel_matrix(config, x[None, :], z[None, :])[0, 0])


def kernel_matrix(config: SvmConfig, X, Z) -> np.ndarray:
    """Pairwise kernel values, rows of X against rows of Z."""
    X = np.asarray(X, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    if X.shape[1] != Z.shape[1]:
        raise DataError(f"feature dimension mismatch: {X.shape[1]} vs {Z.shape[1]}")
    gamma = config.gamma if config.gamma is not None else 1.0 / X.shape[1]
    if config.kernel == "linear":
        return X @ Z.T
    if config.kernel == "poly":
        return (gamma * (X @ Z.T) + config.coef0) ** config.degree
    sq = np.sum(X * X, axis=1)[:, None] + np.sum(Z * Z, axis=1)[None, :] - 2.0 * (X @ Z.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


def logreg_objective_grad(w, b, X, y, C):
    """Objective value and exact analytic gradients (overflow-safe)."""
    w = np.asarray(w, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    margins = y * (X @ w + b)
    obj = 0.5 * float(w @ w) + C * float(np.sum(np.logaddexp(0.0, -margins)))
    slack = expit(-margins)  # derivative of ln(1 + e^{-m}) is -sigmoid(-m)
    grad_w = w - C * (X.T @ (y * slack))
    grad_b = -C * float(np.sum(y * slack))
    return obj, grad_w, grad_b


def _backtrack(X, y, C, w, b, obj, grad_w, grad_b, dir_w, dir_b):
    """Armijo backtracking line search along (dir_w, dir_b)."""
    slope = float(grad_w @ dir_w) + grad_b * dir_b
    step = 1.0
    for _ in range(60):
        new_w = w + step * dir_w
        new_b = b + step * dir_b
        new_obj, new_gw, new_gb = logreg_objective_grad(new_w, new_b, X, y, C)
        if new_obj <= obj + 1e-4 * step * slope:
            return new_w, new_b, new_obj, new_gw, new_gb
        step *= 0.5
    return w, b, obj, grad_w, grad_b


def train_logreg(X, y, config: LogRegConfig) -> TrainedLogReg:
    """Minimize the regularized logistic objective to gradient sup-norm <= tol.

    Returns the best iterate with ``converged=False`` if the iteration
    budget runs out first; strict convexity makes the optimum unique, so
    both solvers land on the same weights.
    """
    X = np.asarray(X, dtype=np.float64)
    y = _signs(y)
    if X.shape[0] != y.shape[0]:
        raise DataError(f"{X.shape[0]} rows but {y.shape[0]} labels")
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    obj, grad_w, grad_b = logreg_objective_grad(w, b, X, y, config.C)
    for _ in range(config.max_iter):
        if max(np.max(np.abs(grad_w)), abs(grad_b)) <= config.tol:
            return TrainedLogReg(w=w, b=b, converged=True)
        if config.solver == "newton":
            mu = expit(y * (X @ w + b))
            weight = config.C * mu * (1.0 - mu)  # strictly positive
            Xa = np.hstack([X, np.ones((n, 1))])
            H = Xa.T @ (weight[:, None] * Xa)
            H[:d, :d] += np.eye(d)
            g = np.append(grad_w, grad_b)
            try:
                step = np.linalg.solve(H, -g)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(H, -g, rcond=None)[0]
            dir_w, dir_b = step[:d], step[d]
            if float(grad_w @ dir_w) + grad_b * dir_b >= 0:
                dir_w, dir_b = -grad_w, -grad_b  # fall back to steepest descent
        else:
            dir_w, dir_b = -grad_w, -grad_b
        w, b, obj, grad_w, grad_b = _backtrack(
            X, y, config.C, w, b, obj, grad_w, grad_b, dir_w, dir_b
        )
    converged = max(np.max(np.abs(grad_w)), abs(grad_b)) <= config.tol
    return TrainedLogReg(w=w, b=b, converged=converged)


def train_svm_smo(X, y, config: SvmConfig, max_updates: int | None = None) -> TrainedSvm:
    """Solve the SVM dual by SMO on the maximal-KKT-violation pair.

    Stops when the maximal violation gap drops below ``config.tol``.
    Raises ConvergenceError if 10n consecutive pair updates make no
    objective progress or the update budget is exhausted.
    """
    X = np.asarray(X, dtype=np.float64)
    y = _signs(y)
    n = X.shape[0]
    if config.gamma is None:
        config = replace(config, gamma=1.0 / X.shape[1])
    C = config.C
    K = kernel_matrix(config, X, X)
    Q = (y[:, None] * y[None, :]) * K
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 0.5 a'Qa - e'a at a = 0
    if max_updates is None:
        max_updates = 100_000 + 100 * n
    stall_budget = 10 * n
    best_obj = 0.0
    stalled = 0

    def dual_value():
        # 0.5 a'Qa - e'a, using a'Qa = a'(grad + e)
        return 0.5 * float(alpha @ (grad - np.ones(n)))

    for _ in range(max_updates):
        viol = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        i = int(np.argmax(np.where(up, viol, -np.inf)))
        j = int(np.argmin(np.where(low, viol, np.inf)))
        gap = viol[i] - viol[j]
        if gap <= config.tol:
            return _finish_svm(X, y, alpha, grad, viol, up, low, config)
        eta = max(K[i, i] + K[j, j] - 2.0 * K[i, j], 1e-12)
        delta = gap / eta
        delta = min(delta, C - alpha[i] if y[i] > 0 else alpha[i])
        delta = min(delta, alpha[j] if y[j] > 0 else C - alpha[j])
        d_i = y[i] * delta
        d_j = -y[j] * delta
        alpha[i] = min(max(alpha[i] + d_i, 0.0), C)
        alpha[j] = min(max(alpha[j] + d_j, 0.0), C)
        grad += d_i * Q[:, i] + d_j * Q[:, j]
        obj = dual_value()
        if obj < best_obj - 1e-12:
            best_obj = obj
            stalled = 0
        else:
            stalled += 1
            if stalled > stall_budget:
                raise ConvergenceError(
                    f"SMO stalled after {stall_budget} updates without progress; "
                    f"best dual objective {-best_obj:.12g}"
                )
    raise ConvergenceError(
        f"SMO exhausted {max_updates} pair updates; best dual objective {-best_obj:.12g}"
    )


def _finish_svm(X, y, alpha, grad, viol, up, low, config) -> TrainedSvm:
    unbound = (alpha > 1e-8 * config.C) & (alpha < config.C * (1.0 - 1e-8))
    if np.any(unbound):
        b = float(np.mean(viol[unbound]))
    else:
        hi = np.max(np.where(up, viol, -np.inf))
        lo = np.min(np.where(low, viol, np.inf))
        b = float((hi + lo) / 2.0)
    keep = alpha > 1e-12 * config.C
    if not np.any(keep):
        keep = np.ones_like(keep)
    return TrainedSvm(
        support_vectors=X[keep].copy(),
        dual_coef=(alpha * y)[keep].copy(),
        b=b,
        config=config,
        converged=True,
    )


def predict_logreg(model: TrainedLogReg, X) -> np.ndarray:
    """Probability scores sigma(w.x + b) in (0, 1)."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != model.w.shape[0]:
        raise DataError(f"feature dimension mismatch: {X.shape[1]} vs {model.w.shape[0]}")
    return expit(X @ model.w + model.b)


def predict_svm(model: TrainedSvm, X) -> np.ndarray:
    """Raw decision values sum_i dual_coef_i K(s_i, x) + b."""
    X = np.asarray(X, dtype=np.float64)
    K = kernel_matrix(model.config, X, model.support_vectors)
    return K @ model.dual_coef + model.b


def svm_dual_objective(model: TrainedSvm) -> float:
    """Dual objective (max form) reconstructed from the support set.

    Off-support multipliers are exactly zero, so the support rows carry
    the whole objective.
    """
    Ksv = kernel_matrix(model.config, model.support_vectors, model.support_vectors)
    quad = float(model.dual_coef @ (Ksv @ model.dual_coef))
    return float(np.sum(np.abs(model.dual_coef))) - 0.5 * quad


MODEL_KIND_LOGREG = "logreg"
MODEL_KIND_SVM = "svm"


def config_to_dict(config) -> dict:
    if isinstance(config, LogRegConfig):
        return {
            "model": MODEL_KIND_LOGREG,
            "C": config.C,
            "solver": config.solver,
            "max_iter": config.max_iter,
            "tol": config.tol,
        }
    if isinstance(config, SvmConfig):
        return {
            "model": MODEL_KIND_SVM,
            "kernel": config.kernel,
            "C": config.C,
            "gamma": config.gamma,
            "degree": config.degree,
            "coef0": config.coef0,
            "tol": config.tol,
        }
    raise DataError(f"not a model config: {config!r}")


def config_from_dict(data: dict):
    kind = data.get("model")
    fields_ = dict(data)
    fields_.pop("model", None)
    if kind == MODEL_KIND_LOGREG:
        return LogRegConfig(**fields_)
    if kind == MODEL_KIND_SVM:
        return SvmConfig(**fields_)
    raise DataError(f"unknown model kind {kind!r}")


def save_model(model, path):
    """Plain-text model file; 17 significant digits round-trip binary64."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        if isinstance(model, TrainedLogReg):
            fh.write(f"logreg dim={model.w.shape[0]} b={model.b:.17g}\n")
            fh.write(" ".join(f"{v:.17g}" for v in model.w) + "\n")
        elif isinstance(model, TrainedSvm):
            cfg = model.config
            fh.write(
                f"svm n_sv={model.support_vectors.shape[0]} dim={model.support_vectors.shape[1]} "
                f"kernel={cfg.kernel} C={cfg.C:.17g} gamma={cfg.gamma:.17g} "
                f"degree={cfg.degree} coef0={cfg.coef0:.17g} tol={cfg.tol:.17g} b={model.b:.17g}\n"
            )
            for coef, sv in zip(model.dual_coef, model.support_vectors):
                fh.write(f"{coef:.17g} " + " ".join(f"{v:.17g}" for v in sv) + "\n")
        else:
            raise DataError(f"not a trained model: {model!r}")


def load_model(path):
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().split()
        if not header:
            raise DataError(f"{path}: empty model file")
        kind = header[0]
        meta = dict(part.split("=", 1) for part in header[1:])
        if kind == "logreg":
            w = np.array([float(v) for v in fh.readline().split()])
            if w.shape[0] != int(meta["dim"]):
                raise DataError(f"{path}: weight count does not match header dim")
            return TrainedLogReg(w=w, b=float(meta["b"]))
        if kind == "svm":
            config = SvmConfig(
                kernel=meta["kernel"],
                C=float(meta["C"]),
                gamma=float(meta["gamma"]),
                degree=int(meta["degree"]),
                coef0=float(meta["coef0"]),
                tol=float(meta["tol"]),
            )
            n_sv, dim = int(meta["n_sv"]), int(meta["dim"])
            coefs, svs = [], []
            for _ in range(n_sv):
                parts = fh.readline().split()
                if len(parts) != dim + 1:
                    raise DataError(f"{path}: malformed support-vector row")
                coefs.append(float(parts[0]))
                svs.append([float(v) for v in parts[1:]])
            return TrainedSvm(
                support_vectors=np.array(svs).reshape(n_sv, dim),
                dual_coef=np.array(coefs),
                b=float(meta["b"]),
                config=config,
            )
    raise DataError(f"{path}: unknown model kind {kind!r}")
