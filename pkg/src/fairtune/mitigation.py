"""Bias mitigation methods, each exposing one scalar strength parameter.

Four families:

* reweigh: pre-processing sample weights that make the sensitive attribute
  and the label statistically independent under the weighted distribution
  (strength is ignored; the scheme has no knob).
* penalized: in-processing squared group-gap penalty on mean predicted
  probabilities, weighted by lambda.
* adversarial: in-processing alternating optimization against an adversary
  that tries to recover the group from the prediction, weighted by alpha.
* reject: post-processing that flips predictions inside an uncertainty band
  of half-width theta around the decision threshold in favor of the
  unprivileged group.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLabelsError, NonFiniteLossError, SingleGroupError
from .fairness import DP, EO, METRICS, EvalResult, evaluate_predictions
from .model import LinearModel, TrainSpec, bce_loss_grad, predict_proba, sigmoid, train
from .preprocess import DesignMatrix

REWEIGH = "reweigh"
PENALIZED = "penalized"
ADVERSARIAL = "adversarial"
REJECT = "reject"
METHODS = (REWEIGH, PENALIZED, ADVERSARIAL, REJECT)

# Alternating schedule for adversarial training.
ADV_ROUNDS = 50
ADV_STEPS = 20
PRED_STEPS = 20


@dataclass(frozen=True)
class MitigationConfig:
    method: str
    metric: str = DP
    strength: float = 0.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown mitigation method {self.method!r}")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.strength < 0:
            raise ValueError("strength must be non-negative")
        if self.method == REJECT and self.strength > 0.5:
            raise ValueError("reject-option band half-width must be in [0, 0.5]")


@dataclass(frozen=True)
class RejectRule:
    theta: float
    favored_group: int = 0    # unprivileged


@dataclass(frozen=True, eq=False)
class FairModel:
    predictor: LinearModel
    method: str
    metric: str
    strength: float
    post_rule: RejectRule | None = None


def reweigh_weights(labels: np.ndarray, groups: np.ndarray) -> np.ndarray:
    """Per-row weight n_a * n_y / (n * n_ay) for the row's (group, label)
    cell; the weighted data has group independent of label."""
    labels = np.asarray(labels)
    groups = np.asarray(groups)
    if len(np.unique(groups)) < 2:
        raise SingleGroupError("both groups must be present")
    if len(np.unique(labels)) < 2:
        raise DegenerateLabelsError("both label values must be present")
    n = len(labels)
    weights = np.empty(n, dtype=float)
    for a in (0, 1):
        for y in (0, 1):
            cell = (groups == a) & (labels == y)
            n_cell = int(cell.sum())
            if n_cell == 0:
                continue
            n_a = int((groups == a).sum())
            n_y = int((labels == y).sum())
            weights[cell] = (n_a * n_y) / (n * n_cell)
    return weights


# --- penalized learning -------------------------------------------------------


def _gap_terms(
    groups: np.ndarray, labels: np.ndarray, metric: str
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Strata mask pairs (group-1 rows, group-0 rows) contributing one
    squared-gap term each; EO strata with an empty side are dropped."""
    g1 = groups == 1
    g0 = groups == 0
    if metric == DP:
        return [(g1, g0)]
    terms = []
    for y in (0, 1):
        m1 = g1 & (labels == y)
        m0 = g0 & (labels == y)
        if m1.any() and m0.any():
            terms.append((m1, m0))
    return terms


def penalized_loss_grad(
    w: np.ndarray,
    b: float,
    X: np.ndarray,
    y: np.ndarray,
    groups: np.ndarray,
    s: np.ndarray,
    l2: float,
    lam: float,
    metric: str,
) -> tuple[float, np.ndarray, float]:
    """BCE + L2 + lambda * sum of squared mean-probability group gaps.

    The gap gradient flows through the sigmoid: d gap^2 / dz_i =
    2 * gap * (+-1/n_stratum) * p_i (1 - p_i) for rows in the stratum.
    """
    loss, grad_w, grad_b = bce_loss_grad(w, b, X, y, s, l2)
    if lam == 0:
        return loss, grad_w, grad_b
    z = X @ w + b
    p = sigmoid(z)
    dz = np.zeros(len(y))
    penalty = 0.0
    for m1, m0 in _gap_terms(groups, y.astype(int), metric):
        gap = p[m1].mean() - p[m0].mean()
        penalty += gap * gap
        dgap = np.zeros(len(y))
        dgap[m1] = 1.0 / m1.sum()
        dgap[m0] = -1.0 / m0.sum()
        dz += 2.0 * gap * dgap * p * (1.0 - p)
    loss = loss + lam * penalty
    grad_w = grad_w + lam * (X.T @ dz)
    grad_b = grad_b + lam * float(dz.sum())
    return loss, grad_w, grad_b


def train_penalized(
    dm: DesignMatrix, spec: TrainSpec, metric: str, lam: float
) -> LinearModel:
    """Fairness-penalized logistic regression; lam=0 reproduces plain
    training exactly."""
    y = dm.labels.astype(float)
    groups = dm.groups
    from .model import _normalized_weights

    s = _normalized_weights(spec, dm.n)

    def fn(w, b):
        return penalized_loss_grad(
            w, b, dm.features, y, groups, s, spec.l2_lambda, lam, metric
        )

    m = train(dm, spec, grad_fn=fn)
    return LinearModel(
        m.weights, m.bias, m.trained_on, {**m.hyper, "penalty": lam, "metric": metric}
    )


# --- adversarial debiasing ------------------------------------------------------


def _adversary_inputs(p: np.ndarray, y: np.ndarray, metric: str) -> np.ndarray:
    if metric == EO:
        return np.column_stack([p, y])
    return p.reshape(-1, 1)


def train_adversarial(
    dm: DesignMatrix,
    spec: TrainSpec,
    metric: str,
    alpha: float,
    rounds: int = ADV_ROUNDS,
    adv_steps: int = ADV_STEPS,
    pred_steps: int = PRED_STEPS,
) -> LinearModel:
    """Alternating optimization of predictor vs. group adversary.

    The adversary is a logistic regression predicting the group from the
    predictor's probability (plus the label when mitigating equalized odds).
    Each round takes ``adv_steps`` full-batch steps on the adversary's BCE,
    then ``pred_steps`` steps on the predictor minimizing its own BCE minus
    alpha times the adversary's BCE, the fairness signal flowing through the
    probability into the adversary input. Zero initialization everywhere;
    deterministic given the schedule.
    """
    n = dm.n
    if n < 2 or len(np.unique(dm.labels)) < 2:
        raise DegenerateLabelsError("need both label classes")
    if len(np.unique(dm.groups)) < 2:
        raise SingleGroupError("both groups must be present")
    X = dm.features
    y = dm.labels.astype(float)
    a = dm.groups.astype(float)
    from .model import _normalized_weights

    s = _normalized_weights(spec, n)
    lr = spec.learning_rate
    w = np.zeros(dm.d)
    b = 0.0
    adv_dim = 2 if metric == EO else 1
    cw = np.zeros(adv_dim)
    cb = 0.0

    for rnd in range(rounds):
        p = sigmoid(X @ w + b)
        u = _adversary_inputs(p, y, metric)
        for _ in range(adv_steps):
            q = sigmoid(u @ cw + cb)
            dq = (q - a) / n
            cw = cw - lr * (u.T @ dq)
            cb = cb - lr * float(dq.sum())
        for _ in range(pred_steps):
            z = X @ w + b
            p = sigmoid(z)
            dz = s * (p - y) / n
            if alpha != 0:
                u = _adversary_inputs(p, y, metric)
                q = sigmoid(u @ cw + cb)
                # d(-alpha * BCE_adv)/dz_i through u[:, 0] = p
                dz = dz - alpha * (q - a) * cw[0] / n * p * (1.0 - p)
            grad_w = X.T @ dz + spec.l2_lambda * w
            grad_b = float(dz.sum())
            w = w - lr * grad_w
            b = b - lr * grad_b
        if not (np.isfinite(w).all() and np.isfinite(b) and np.isfinite(cw).all()):
            raise NonFiniteLossError(rnd, where="round")
    return LinearModel(
        w,
        b,
        "",
        {
            "learning_rate": lr,
            "epochs": rounds * pred_steps,
            "l2_lambda": spec.l2_lambda,
            "seed": spec.seed,
            "adversary_strength": alpha,
            "metric": metric,
        },
    )


def adversary_accuracy(
    m: LinearModel, dm: DesignMatrix, metric: str = DP, spec: TrainSpec | None = None
) -> float:
    """Accuracy of a freshly trained adversary recovering the group from the
    model's predictions; near 0.5 means the predictions leak little."""
    spec = spec or TrainSpec()
    p = predict_proba(m, dm.features)
    u = _adversary_inputs(p, dm.labels.astype(float), metric)
    a = dm.groups.astype(float)
    cw = np.zeros(u.shape[1])
    cb = 0.0
    for _ in range(spec.epochs):
        q = sigmoid(u @ cw + cb)
        dq = (q - a) / len(a)
        cw = cw - spec.learning_rate * (u.T @ dq)
        cb = cb - spec.learning_rate * float(dq.sum())
    preds = (sigmoid(u @ cw + cb) >= 0.5).astype(int)
    return float((preds == dm.groups).mean())


# --- reject option classification ----------------------------------------------


def apply_reject_option(
    scores: np.ndarray, groups: np.ndarray, theta: float
) -> np.ndarray:
    """Threshold at 0.5 outside the band [0.5-theta, 0.5+theta]; inside it,
    predict 1 for the unprivileged group and 0 for the privileged group.

    theta=0 is plain thresholding (empty band); theta=0.5 puts every score
    in the band.
    """
    if not 0 <= theta <= 0.5:
        raise ValueError("theta must be in [0, 0.5]")
    scores = np.asarray(scores, dtype=float)
    groups = np.asarray(groups)
    base = (scores >= 0.5).astype(np.int64)
    if theta == 0:
        return base
    in_band = (scores >= 0.5 - theta) & (scores <= 0.5 + theta)
    return np.where(in_band, (groups == 0).astype(np.int64), base)


# --- dispatch -------------------------------------------------------------------


def fair_predict(fm: FairModel, features: np.ndarray, groups: np.ndarray) -> np.ndarray:
    scores = predict_proba(fm.predictor, features)
    if fm.post_rule is not None:
        return apply_reject_option(scores, groups, fm.post_rule.theta)
    return (scores >= 0.5).astype(np.int64)


def build_fair_model(
    train_dm: DesignMatrix,
    val_dm: DesignMatrix,
    cfg: MitigationConfig,
    spec: TrainSpec,
) -> tuple[FairModel, EvalResult]:
    """Train with the configured mitigation and evaluate on validation."""
    post_rule = None
    if cfg.method == REWEIGH:
        weights = reweigh_weights(train_dm.labels, train_dm.groups)
        if spec.sample_weights is not None:
            weights = weights * np.asarray(spec.sample_weights, dtype=float)
        reweighted = TrainSpec(
            spec.learning_rate, spec.epochs, spec.l2_lambda, weights, spec.seed
        )
        predictor = train(train_dm, reweighted)
    elif cfg.method == PENALIZED:
        predictor = train_penalized(train_dm, spec, cfg.metric, cfg.strength)
    elif cfg.method == ADVERSARIAL:
        predictor = train_adversarial(train_dm, spec, cfg.metric, cfg.strength)
    else:
        predictor = train(train_dm, spec)
        post_rule = RejectRule(theta=cfg.strength)
    fm = FairModel(predictor, cfg.method, cfg.metric, cfg.strength, post_rule)
    preds = fair_predict(fm, val_dm.features, val_dm.groups)
    val_eval = evaluate_predictions(preds, val_dm.labels, val_dm.groups)
    return fm, val_eval


def fair_model_to_dict(fm: FairModel) -> dict:
    from .model import model_to_dict

    return {
        "predictor": model_to_dict(fm.predictor),
        "method": fm.method,
        "metric": fm.metric,
        "strength": float(fm.strength),
        "post_rule": (
            None
            if fm.post_rule is None
            else {"theta": fm.post_rule.theta, "favored_group": fm.post_rule.favored_group}
        ),
    }


def fair_model_from_dict(d: dict) -> FairModel:
    from .model import model_from_dict

    return FairModel(
        predictor=model_from_dict(d["predictor"]),
        method=d["method"],
        metric=d["metric"],
        strength=d["strength"],
        post_rule=(
            None
            if d["post_rule"] is None
            else RejectRule(d["post_rule"]["theta"], d["post_rule"]["favored_group"])
        ),
    )
