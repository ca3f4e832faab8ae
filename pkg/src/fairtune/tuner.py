"""Search the mitigation strength so validation fairness lands in the band
|metric - threshold| <= tolerance while keeping accuracy as high as possible.

Phase 1 evaluates a coarse strength grid to bracket the threshold; phase 2
bisects the best bracketing interval. Among all in-band evaluations the one
with maximum validation accuracy wins. The full trajectory is recorded.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .errors import BuilderFailureError, FairtuneError
from .fairness import EvalResult
from .mitigation import REJECT

CONVERGED = "converged"
BUDGET_EXHAUSTED = "budget_exhausted"
INFEASIBLE = "infeasible"

DEFAULT_BUDGET = 30

#: Coarse strength grid for penalty/adversary weights (decades around 1).
GEOMETRIC_GRID = (0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)

#: Reject-option band half-widths live in [0, 0.5]; linear 7-point grid.
REJECT_GRID = tuple(float(x) for x in np.linspace(0.0, 0.5, 7))

# Bisection stops once the interval is effectively a point.
_MIN_INTERVAL = 1e-12


@dataclass(frozen=True)
class FairnessTarget:
    metric: str
    threshold: float
    tolerance: float

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must be in (0, 1)")
        if not 0 < self.tolerance < self.threshold:
            raise ValueError("tolerance must be in (0, threshold)")

    def in_band(self, metric_value: float) -> bool:
        return abs(metric_value - self.threshold) <= self.tolerance


@dataclass(frozen=True)
class Evaluation:
    strength: float
    val_metric: float
    val_accuracy: float


@dataclass(frozen=True)
class TuningTrace:
    evaluations: tuple[Evaluation, ...]
    selected: int
    budget_used: int
    status: str


Builder = Callable[[float], tuple[Any, EvalResult]]


def grid_for_method(method: str) -> tuple[float, ...]:
    return REJECT_GRID if method == REJECT else GEOMETRIC_GRID


def tune(
    builder: Builder,
    target: FairnessTarget,
    budget: int = DEFAULT_BUDGET,
    grid: Sequence[float] | None = None,
    on_evaluation: Callable[[Evaluation], None] | None = None,
) -> tuple[Any, TuningTrace]:
    """Run the two-phase strength search.

    ``builder`` maps a strength to (model, validation EvalResult) and must be
    deterministic. Returns the selected model and the trace. Status is
    ``converged`` when some evaluation lies in the target band,
    ``infeasible`` when even the largest grid strength leaves the metric
    above threshold + tolerance, and ``budget_exhausted`` otherwise.
    """
    if budget < 5:
        raise ValueError("budget must be at least 5")
    strengths = list(grid) if grid is not None else list(GEOMETRIC_GRID)
    evals: list[Evaluation] = []
    models: list[Any] = []

    def run(s: float) -> Evaluation:
        try:
            model, res = builder(s)
        except FairtuneError as e:
            raise BuilderFailureError(s, e) from e
        ev = Evaluation(s, res.metric(target.metric), res.accuracy)
        evals.append(ev)
        models.append(model)
        if on_evaluation is not None:
            on_evaluation(ev)
        return ev

    for s in strengths[:budget]:
        run(s)

    def any_in_band() -> bool:
        return any(target.in_band(e.val_metric) for e in evals)

    if not any_in_band() and len(evals) > 1:
        # Bracket the threshold between adjacent grid points; with several
        # crossings (non-monotone responders) take the pair closest to it.
        deltas = [e.val_metric - target.threshold for e in evals]
        brackets = [
            i
            for i in range(len(strengths[: len(evals)]) - 1)
            if deltas[i] * deltas[i + 1] < 0
        ]
        if brackets:
            best = min(
                brackets, key=lambda i: min(abs(deltas[i]), abs(deltas[i + 1]))
            )
            lo, hi = evals[best].strength, evals[best + 1].strength
            lo_delta = deltas[best]
            while len(evals) < budget and hi - lo > _MIN_INTERVAL:
                mid = 0.5 * (lo + hi)
                ev = run(mid)
                if target.in_band(ev.val_metric):
                    break
                if (ev.val_metric - target.threshold) * lo_delta > 0:
                    lo = mid
                    lo_delta = ev.val_metric - target.threshold
                else:
                    hi = mid

    in_band = [
        (i, e) for i, e in enumerate(evals) if target.in_band(e.val_metric)
    ]
    if in_band:
        status = CONVERGED
        selected = max(
            in_band, key=lambda ie: (ie[1].val_accuracy, -ie[1].strength, -ie[0])
        )[0]
    else:
        largest = max(evals, key=lambda e: e.strength)
        if largest.val_metric > target.threshold + target.tolerance:
            status = INFEASIBLE
        else:
            status = BUDGET_EXHAUSTED
        selected = min(
            enumerate(evals),
            key=lambda ie: (
                abs(ie[1].val_metric - target.threshold),
                -ie[1].val_accuracy,
                ie[1].strength,
                ie[0],
            ),
        )[0]
    trace = TuningTrace(
        evaluations=tuple(evals),
        selected=selected,
        budget_used=len(evals),
        status=status,
    )
    return models[selected], trace


@dataclass(frozen=True)
class SweepRow:
    threshold: float
    achieved_metric: float
    accuracy: float
    deviation: float
    status: str


def sweep(
    builder: Builder,
    test_eval: Callable[[Any], EvalResult],
    metric: str,
    thresholds: Sequence[float],
    tolerance: float,
    budget: int = DEFAULT_BUDGET,
    grid: Sequence[float] | None = None,
) -> list[SweepRow]:
    """Tune once per threshold and report held-out test metrics.

    Deviation is (achieved test metric - threshold). Thresholds must be
    strictly increasing.
    """
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly increasing")
    rows = []
    for tau in thresholds:
        model, trace = tune(
            builder, FairnessTarget(metric, tau, tolerance), budget, grid
        )
        res = test_eval(model)
        achieved = res.metric(metric)
        rows.append(
            SweepRow(tau, achieved, res.accuracy, achieved - tau, trace.status)
        )
    return rows


def sweep_rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["threshold", "achieved_metric", "accuracy", "deviation", "status"])
    for r in rows:
        writer.writerow(
            [
                f"{r.threshold:.6f}",
                f"{r.achieved_metric:.6f}",
                f"{r.accuracy:.6f}",
                f"{r.deviation:.6f}",
                r.status,
            ]
        )
    return buf.getvalue()


def trace_to_dict(t: TuningTrace) -> dict:
    return {
        "evaluations": [
            {
                "strength": e.strength,
                "val_metric": e.val_metric,
                "val_accuracy": e.val_accuracy,
            }
            for e in t.evaluations
        ],
        "selected": t.selected,
        "budget_used": t.budget_used,
        "status": t.status,
    }


def trace_from_dict(d: dict) -> TuningTrace:
    return TuningTrace(
        evaluations=tuple(
            Evaluation(e["strength"], e["val_metric"], e["val_accuracy"])
            for e in d["evaluations"]
        ),
        selected=d["selected"],
        budget_used=d["budget_used"],
        status=d["status"],
    )
