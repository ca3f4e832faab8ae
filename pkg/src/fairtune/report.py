"""Comparative baseline-vs-fair report with full reproducibility metadata."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import SplitMismatchError
from .fairness import EvalResult, eval_from_dict, eval_to_dict
from .jsonio import dump_canonical, load
from .tuner import TuningTrace, trace_from_dict, trace_to_dict


@dataclass(frozen=True)
class Provenance:
    seed: int
    recipe_fingerprint: str
    advisor_provider: str
    software_version: str

    def __post_init__(self):
        if not self.recipe_fingerprint or not self.advisor_provider \
                or not self.software_version:
            raise ValueError("provenance fields must be non-empty")


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    dataset_fingerprint: str
    split: dict
    task: dict
    baseline: EvalResult
    fair: EvalResult
    deltas: dict
    trace: TuningTrace
    provenance: Provenance


def build_report(
    baseline_eval: EvalResult,
    fair_eval: EvalResult,
    trace: TuningTrace,
    config: dict,
    provenance: Provenance,
    dataset_fingerprint: str,
    split: dict,
) -> ComparisonReport:
    """Assemble the comparison document.

    ``metric_change`` is baseline minus fair for the configured metric, so a
    positive value means bias was reduced; ``accuracy_change`` is fair minus
    baseline. Both evaluations must come from the same test split.
    """
    if (
        baseline_eval.split_fingerprint is not None
        and fair_eval.split_fingerprint is not None
        and baseline_eval.split_fingerprint != fair_eval.split_fingerprint
    ):
        raise SplitMismatchError(
            f"baseline evaluated on {baseline_eval.split_fingerprint[:12]}, "
            f"fair on {fair_eval.split_fingerprint[:12]}"
        )
    metric = config["metric"]
    deltas = {
        "accuracy_change": fair_eval.accuracy - baseline_eval.accuracy,
        "metric_change": baseline_eval.metric(metric) - fair_eval.metric(metric),
    }
    return ComparisonReport(
        dataset_fingerprint=dataset_fingerprint,
        split=dict(split),
        task=dict(config),
        baseline=baseline_eval,
        fair=fair_eval,
        deltas=deltas,
        trace=trace,
        provenance=provenance,
    )


def report_to_dict(r: ComparisonReport) -> dict:
    return {
        "dataset_fingerprint": r.dataset_fingerprint,
        "split": dict(r.split),
        "task": dict(r.task),
        "baseline": eval_to_dict(r.baseline),
        "fair": eval_to_dict(r.fair),
        "deltas": dict(r.deltas),
        "trace": trace_to_dict(r.trace),
        "provenance": {
            "seed": r.provenance.seed,
            "recipe_fingerprint": r.provenance.recipe_fingerprint,
            "advisor_provider": r.provenance.advisor_provider,
            "software_version": r.provenance.software_version,
        },
    }


def report_from_dict(d: dict) -> ComparisonReport:
    return ComparisonReport(
        dataset_fingerprint=d["dataset_fingerprint"],
        split=dict(d["split"]),
        task=dict(d["task"]),
        baseline=eval_from_dict(d["baseline"]),
        fair=eval_from_dict(d["fair"]),
        deltas=dict(d["deltas"]),
        trace=trace_from_dict(d["trace"]),
        provenance=Provenance(
            seed=d["provenance"]["seed"],
            recipe_fingerprint=d["provenance"]["recipe_fingerprint"],
            advisor_provider=d["provenance"]["advisor_provider"],
            software_version=d["provenance"]["software_version"],
        ),
    )


def report_to_json(r: ComparisonReport) -> str:
    return dump_canonical(report_to_dict(r))


def report_from_json(text: str) -> ComparisonReport:
    return report_from_dict(load(text))
