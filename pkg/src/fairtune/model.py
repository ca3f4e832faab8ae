"""Weighted logistic regression trained by full-batch gradient descent.

Deterministic by construction: zero initialization, fixed epoch count, no
stochasticity. Serves as the baseline learner and as the predictor inside
every mitigation method.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateLabelsError,
    DimensionMismatchError,
    NonFiniteLossError,
)
from .preprocess import DesignMatrix


@dataclass(frozen=True)
class TrainSpec:
    learning_rate: float = 0.1
    epochs: int = 2000
    l2_lambda: float = 1e-4
    sample_weights: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.l2_lambda < 0:
            raise ValueError("l2_lambda must be non-negative")
        if self.sample_weights is not None:
            w = np.asarray(self.sample_weights, dtype=float)
            if not np.isfinite(w).all() or (w < 0).any():
                raise ValueError("sample weights must be finite and non-negative")
            if w.sum() == 0:
                raise ValueError("sample weights must not be all zero")


@dataclass(frozen=True, eq=False)
class LinearModel:
    weights: np.ndarray
    bias: float
    trained_on: str = ""        # recipe fingerprint
    hyper: dict = field(default_factory=dict)


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _normalized_weights(spec: TrainSpec, n: int) -> np.ndarray:
    if spec.sample_weights is None:
        return np.ones(n)
    s = np.asarray(spec.sample_weights, dtype=float)
    if len(s) != n:
        raise DimensionMismatchError(f"{len(s)} sample weights for {n} rows")
    return s * (n / s.sum())     # mean 1, so scaling all weights is a no-op


def bce_loss_grad(
    w: np.ndarray,
    b: float,
    X: np.ndarray,
    y: np.ndarray,
    s: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, float]:
    """Weighted mean binary cross-entropy + (l2/2)||w||^2 and its gradient.

    Returns (loss, grad_w, grad_b). Bias is not regularized. Uses the
    log(1+e^z) - y*z form for numerical stability.
    """
    z = X @ w + b
    p = sigmoid(z)
    per_row = np.logaddexp(0.0, z) - y * z
    loss = float((s * per_row).mean() + 0.5 * l2 * (w @ w))
    dz = s * (p - y) / len(y)
    grad_w = X.T @ dz + l2 * w
    grad_b = float(dz.sum())
    return loss, grad_w, grad_b


def train(
    dm: DesignMatrix,
    spec: TrainSpec,
    trained_on: str = "",
    init: tuple[np.ndarray, float] | None = None,
    grad_fn=None,
) -> LinearModel:
    """Minimize weighted BCE + L2 by full-batch gradient descent.

    Starts from zero parameters unless ``init`` is given. ``grad_fn`` lets
    mitigation methods substitute an augmented loss with the same signature
    as :func:`bce_loss_grad` minus the weight/l2 arguments.
    """
    n = dm.n
    if n < 2:
        raise DegenerateLabelsError("need at least 2 rows")
    y = dm.labels.astype(float)
    if len(np.unique(dm.labels)) < 2:
        raise DegenerateLabelsError("single label class in training data")
    s = _normalized_weights(spec, n)
    X = dm.features
    if init is None:
        w = np.zeros(dm.d)
        b = 0.0
    else:
        w = np.asarray(init[0], dtype=float).copy()
        b = float(init[1])
    fn = grad_fn or (lambda w_, b_: bce_loss_grad(w_, b_, X, y, s, spec.l2_lambda))
    for epoch in range(spec.epochs):
        loss, grad_w, grad_b = fn(w, b)
        if not np.isfinite(loss):
            raise NonFiniteLossError(epoch)
        w = w - spec.learning_rate * grad_w
        b = b - spec.learning_rate * grad_b
    if not (np.isfinite(w).all() and np.isfinite(b)):
        raise NonFiniteLossError(spec.epochs)
    return LinearModel(
        weights=w,
        bias=b,
        trained_on=trained_on,
        hyper={
            "learning_rate": spec.learning_rate,
            "epochs": spec.epochs,
            "l2_lambda": spec.l2_lambda,
            "seed": spec.seed,
        },
    )


def predict_proba(m: LinearModel, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=float)
    if features.shape[1] != len(m.weights):
        raise DimensionMismatchError(
            f"model has {len(m.weights)} weights, matrix has "
            f"{features.shape[1]} columns"
        )
    return sigmoid(features @ m.weights + m.bias)


def grad_check(loss, point: np.ndarray, h: float = 1e-5) -> float:
    """Max relative error between the analytic gradient and central finite
    differences at ``point``.

    ``loss(p)`` must return (value, gradient). The error is scaled by
    max(1, |analytic|, |numeric|) per coordinate.
    """
    point = np.asarray(point, dtype=float)
    _, analytic = loss(point)
    analytic = np.asarray(analytic, dtype=float)
    worst = 0.0
    for i in range(len(point)):
        bumped = point.copy()
        bumped[i] = point[i] + h
        up, _ = loss(bumped)
        bumped[i] = point[i] - h
        down, _ = loss(bumped)
        numeric = (up - down) / (2 * h)
        scale = max(1.0, abs(analytic[i]), abs(numeric))
        worst = max(worst, abs(analytic[i] - numeric) / scale)
    return worst


def model_to_dict(m: LinearModel) -> dict:
    return {
        "weights": [float(v) for v in m.weights],
        "bias": float(m.bias),
        "trained_on": m.trained_on,
        "hyper": dict(m.hyper),
    }


def model_from_dict(d: dict) -> LinearModel:
    return LinearModel(
        weights=np.array(d["weights"], dtype=float),
        bias=float(d["bias"]),
        trained_on=d.get("trained_on", ""),
        hyper=dict(d.get("hyper", {})),
    )
