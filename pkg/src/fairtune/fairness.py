"""Group fairness metrics: demographic parity and equalized odds.

All functions take binary group membership (1 = privileged) and binary
labels/predictions as integer arrays. Empirical rates only; no smoothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingleGroupError

DP = "dp"
EO = "eo"
METRICS = (DP, EO)

DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class GroupRates:
    positive_rate: float
    tpr: float
    fpr: float
    support: int


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    dp_diff: float
    eo_diff: float
    group_rates: dict[int, GroupRates]
    warnings: tuple[str, ...] = ()
    split_fingerprint: str | None = None

    def metric(self, name: str) -> float:
        if name == DP:
            return self.dp_diff
        if name == EO:
            return self.eo_diff
        raise ValueError(f"unknown metric {name!r}")


def _check_groups(groups: np.ndarray) -> None:
    if len(np.unique(groups)) < 2:
        raise SingleGroupError("both groups must be present")


def demographic_parity_diff(preds: np.ndarray, groups: np.ndarray) -> float:
    """|P(pred=1 | group=1) - P(pred=1 | group=0)|."""
    preds = np.asarray(preds)
    groups = np.asarray(groups)
    _check_groups(groups)
    rate1 = float(preds[groups == 1].mean())
    rate0 = float(preds[groups == 0].mean())
    return abs(rate1 - rate0)


def _stratum_rate(
    preds: np.ndarray, labels: np.ndarray, groups: np.ndarray, g: int, y: int
) -> float | None:
    sel = (groups == g) & (labels == y)
    if not sel.any():
        return None
    return float(preds[sel].mean())


def _eo_branches(
    preds: np.ndarray, labels: np.ndarray, groups: np.ndarray
) -> tuple[float, float, list[str]]:
    """(TPR gap, FPR gap, degenerate-stratum warnings).

    A group missing one label value contributes 0 to that branch.
    """
    warnings = []
    gaps = []
    for y, branch in ((1, "tpr"), (0, "fpr")):
        r1 = _stratum_rate(preds, labels, groups, 1, y)
        r0 = _stratum_rate(preds, labels, groups, 0, y)
        if r1 is None or r0 is None:
            missing = [str(g) for g, r in ((1, r1), (0, r0)) if r is None]
            warnings.append(
                f"degenerate stratum: group(s) {','.join(missing)} have no "
                f"label={y} rows; {branch} gap treated as 0"
            )
            gaps.append(0.0)
        else:
            gaps.append(abs(r1 - r0))
    return gaps[0], gaps[1], warnings


def equalized_odds_diff(
    preds: np.ndarray, labels: np.ndarray, groups: np.ndarray
) -> float:
    """max(|TPR_1 - TPR_0|, |FPR_1 - FPR_0|)."""
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    groups = np.asarray(groups)
    _check_groups(groups)
    tpr_gap, fpr_gap, _ = _eo_branches(preds, labels, groups)
    return max(tpr_gap, fpr_gap)


def evaluate_predictions(
    preds: np.ndarray,
    labels: np.ndarray,
    groups: np.ndarray,
    split_fingerprint: str | None = None,
) -> EvalResult:
    """Full evaluation from already-binarized predictions."""
    preds = np.asarray(preds).astype(np.int64)
    labels = np.asarray(labels).astype(np.int64)
    groups = np.asarray(groups).astype(np.int64)
    _check_groups(groups)
    accuracy = float((preds == labels).mean())
    dp = demographic_parity_diff(preds, groups)
    tpr_gap, fpr_gap, warnings = _eo_branches(preds, labels, groups)
    rates = {}
    for g in (0, 1):
        sel = groups == g
        tpr = _stratum_rate(preds, labels, groups, g, 1)
        fpr = _stratum_rate(preds, labels, groups, g, 0)
        rates[g] = GroupRates(
            positive_rate=float(preds[sel].mean()),
            tpr=tpr if tpr is not None else 0.0,
            fpr=fpr if fpr is not None else 0.0,
            support=int(sel.sum()),
        )
    return EvalResult(
        accuracy=accuracy,
        dp_diff=dp,
        eo_diff=max(tpr_gap, fpr_gap),
        group_rates=rates,
        warnings=tuple(warnings),
        split_fingerprint=split_fingerprint,
    )


def evaluate(
    scores: np.ndarray,
    threshold: float,
    labels: np.ndarray,
    groups: np.ndarray,
    split_fingerprint: str | None = None,
) -> EvalResult:
    """Threshold scores at ``threshold`` (score >= threshold predicts 1) and
    evaluate accuracy plus both fairness metrics."""
    scores = np.asarray(scores, dtype=float)
    if scores.min() < 0 or scores.max() > 1:
        raise ValueError("scores must lie in [0, 1]")
    preds = (scores >= threshold).astype(np.int64)
    return evaluate_predictions(preds, labels, groups, split_fingerprint)


def eval_to_dict(e: EvalResult) -> dict:
    return {
        "accuracy": e.accuracy,
        "dp_diff": e.dp_diff,
        "eo_diff": e.eo_diff,
        "group_rates": {
            str(g): {
                "positive_rate": r.positive_rate,
                "tpr": r.tpr,
                "fpr": r.fpr,
                "support": r.support,
            }
            for g, r in sorted(e.group_rates.items())
        },
        "warnings": list(e.warnings),
        "split_fingerprint": e.split_fingerprint,
    }


def eval_from_dict(d: dict) -> EvalResult:
    return EvalResult(
        accuracy=d["accuracy"],
        dp_diff=d["dp_diff"],
        eo_diff=d["eo_diff"],
        group_rates={
            int(g): GroupRates(
                r["positive_rate"], r["tpr"], r["fpr"], r["support"]
            )
            for g, r in d["group_rates"].items()
        },
        warnings=tuple(d.get("warnings", ())),
        split_fingerprint=d.get("split_fingerprint"),
    )
