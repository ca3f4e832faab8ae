"""End-to-end orchestration: ingest -> split -> analyze -> recommend ->
preprocess -> baseline -> mitigate + tune -> comparison report.

Used by both the CLI and the HTTP service so that headless and interactive
runs share one code path.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable

from . import __version__
from .advisor import (
    AttributeRecommendation,
    ProviderConfig,
    heuristic_recommend,
    lexicon_candidates,
    llm_recommend,
    resolve,
)
from .analysis import AnalysisReport, analyze
from .errors import FairtuneError
from .fairness import DP, METRICS, EvalResult, evaluate_predictions
from .mitigation import (
    METHODS,
    MitigationConfig,
    REWEIGH,
    build_fair_model,
    fair_predict,
)
from .model import TrainSpec, predict_proba, train
from .preprocess import apply_recipe, fit_recipe
from .report import ComparisonReport, Provenance, build_report
from .tabular import SplitSpec, Table, split
from .tuner import (
    DEFAULT_BUDGET,
    Evaluation,
    FairnessTarget,
    TuningTrace,
    grid_for_method,
    tune,
)


@dataclass(frozen=True)
class TaskConfig:
    """Everything needed to reproduce one pipeline run."""

    sensitive: str | None = None       # None: take the advisor's recommendation
    target: str | None = None
    metric: str = DP
    threshold: float = 0.05
    tolerance: float = 0.01
    mitigation: str = "penalized"
    seed: int = 42
    split: SplitSpec | None = None     # None: 60/20/20 with the task seed
    include_sensitive_feature: bool = False
    provider: str = "heuristic"
    budget: int = DEFAULT_BUDGET
    learning_rate: float = 0.1
    epochs: int = 2000
    l2_lambda: float = 1e-4

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        if self.mitigation not in METHODS:
            raise ValueError(f"mitigation must be one of {METHODS}")
        FairnessTarget(self.metric, self.threshold, self.tolerance)  # validates

    def split_spec(self) -> SplitSpec:
        return self.split if self.split is not None else SplitSpec(seed=self.seed)

    def train_spec(self) -> TrainSpec:
        return TrainSpec(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            l2_lambda=self.l2_lambda,
            seed=self.seed,
        )


def config_to_dict(c: TaskConfig) -> dict:
    s = c.split_spec()
    return {
        "sensitive": c.sensitive,
        "target": c.target,
        "metric": c.metric,
        "threshold": c.threshold,
        "tolerance": c.tolerance,
        "mitigation": c.mitigation,
        "seed": c.seed,
        "split": {
            "train_frac": s.train_frac,
            "val_frac": s.val_frac,
            "test_frac": s.test_frac,
            "seed": s.seed,
        },
        "include_sensitive_feature": c.include_sensitive_feature,
        "provider": c.provider,
        "budget": c.budget,
        "learning_rate": c.learning_rate,
        "epochs": c.epochs,
        "l2_lambda": c.l2_lambda,
    }


def config_from_dict(d: dict) -> TaskConfig:
    split_spec = None
    if d.get("split") is not None:
        s = d["split"]
        split_spec = SplitSpec(
            s["train_frac"], s["val_frac"], s["test_frac"], s["seed"]
        )
    base = TaskConfig()
    return TaskConfig(
        sensitive=d.get("sensitive"),
        target=d.get("target"),
        metric=d.get("metric", base.metric),
        threshold=d.get("threshold", base.threshold),
        tolerance=d.get("tolerance", base.tolerance),
        mitigation=d.get("mitigation", base.mitigation),
        seed=d.get("seed", base.seed),
        split=split_spec,
        include_sensitive_feature=d.get(
            "include_sensitive_feature", base.include_sensitive_feature
        ),
        provider=d.get("provider", base.provider),
        budget=d.get("budget", base.budget),
        learning_rate=d.get("learning_rate", base.learning_rate),
        epochs=d.get("epochs", base.epochs),
        l2_lambda=d.get("l2_lambda", base.l2_lambda),
    )


@dataclass(frozen=True, eq=False)
class PipelineResult:
    report: ComparisonReport
    analysis: AnalysisReport
    recommendation: AttributeRecommendation
    baseline_model: object
    fair_model: object
    trace: TuningTrace
    recipe: object
    baseline_val: EvalResult
    baseline_test: EvalResult
    fair_test: EvalResult


def _split_fingerprint(dataset_fp: str, spec: SplitSpec, part: str) -> str:
    key = (
        f"{dataset_fp}:{spec.train_frac}:{spec.val_frac}:{spec.test_frac}:"
        f"{spec.seed}:{part}"
    )
    return hashlib.sha256(key.encode()).hexdigest()


def recommend_attributes(
    table: Table,
    analysis_report: AnalysisReport,
    provider: str = "heuristic",
    provider_cfg: ProviderConfig | None = None,
) -> AttributeRecommendation:
    if provider == "heuristic" or provider_cfg is None:
        return heuristic_recommend(analysis_report)
    return llm_recommend(analysis_report, provider_cfg)


def run_pipeline(
    table: Table,
    config: TaskConfig,
    provider_cfg: ProviderConfig | None = None,
    on_evaluation: Callable[[Evaluation], None] | None = None,
    analysis_report: AnalysisReport | None = None,
    recommendation: AttributeRecommendation | None = None,
) -> PipelineResult:
    """Run the whole pipeline on an in-memory table.

    Deterministic for a given (table, config): identical inputs produce an
    identical report document.
    """
    dataset_fp = table.fingerprint()
    split_spec = config.split_spec()
    train_t, val_t, test_t = split(table, split_spec)

    if analysis_report is None:
        analysis_report = analyze(table, lexicon_candidates(table))
    if recommendation is None:
        recommendation = recommend_attributes(
            table, analysis_report, config.provider, provider_cfg
        )
    sensitive, target = resolve(
        analysis_report,
        recommendation,
        sensitive_override=config.sensitive,
        target_override=config.target,
    )

    recipe = fit_recipe(
        train_t,
        sensitive,
        target,
        include_sensitive=config.include_sensitive_feature,
    )
    dm_train = apply_recipe(train_t, recipe)
    dm_val = apply_recipe(val_t, recipe)
    dm_test = apply_recipe(test_t, recipe)
    spec = config.train_spec()
    test_fp = _split_fingerprint(dataset_fp, split_spec, "test")

    baseline = train(dm_train, spec, trained_on=recipe.fingerprint())
    base_scores_val = predict_proba(baseline, dm_val.features)
    baseline_val = evaluate_predictions(
        (base_scores_val >= 0.5).astype(int), dm_val.labels, dm_val.groups
    )
    base_scores_test = predict_proba(baseline, dm_test.features)
    baseline_test = evaluate_predictions(
        (base_scores_test >= 0.5).astype(int),
        dm_test.labels,
        dm_test.groups,
        split_fingerprint=test_fp,
    )

    def builder(strength: float):
        cfg = MitigationConfig(config.mitigation, config.metric, strength)
        return build_fair_model(dm_train, dm_val, cfg, spec)

    target_band = FairnessTarget(config.metric, config.threshold, config.tolerance)
    # Reweighing has no strength knob: a single evaluation tells the story.
    grid = (0.0,) if config.mitigation == REWEIGH else grid_for_method(config.mitigation)
    fair_model, trace = tune(
        builder, target_band, config.budget, grid, on_evaluation
    )

    fair_preds = fair_predict(fair_model, dm_test.features, dm_test.groups)
    fair_test = evaluate_predictions(
        fair_preds, dm_test.labels, dm_test.groups, split_fingerprint=test_fp
    )

    task = config_to_dict(config)
    task["sensitive"] = sensitive
    task["target"] = target
    provenance = Provenance(
        seed=config.seed,
        recipe_fingerprint=recipe.fingerprint(),
        advisor_provider=recommendation.provider,
        software_version=__version__,
    )
    comparison = build_report(
        baseline_test,
        fair_test,
        trace,
        task,
        provenance,
        dataset_fp,
        split=task["split"],
    )
    return PipelineResult(
        report=comparison,
        analysis=analysis_report,
        recommendation=recommendation,
        baseline_model=baseline,
        fair_model=fair_model,
        trace=trace,
        recipe=recipe,
        baseline_val=baseline_val,
        baseline_test=baseline_test,
        fair_test=fair_test,
    )


def run_sweep(
    table: Table,
    config: TaskConfig,
    thresholds: list[float],
    provider_cfg: ProviderConfig | None = None,
):
    """Tune once per threshold against a shared split; report test metrics."""
    from .tuner import sweep as tuner_sweep

    split_spec = config.split_spec()
    train_t, val_t, test_t = split(table, split_spec)
    analysis_report = analyze(table, lexicon_candidates(table))
    recommendation = recommend_attributes(
        table, analysis_report, config.provider, provider_cfg
    )
    sensitive, target = resolve(
        analysis_report,
        recommendation,
        sensitive_override=config.sensitive,
        target_override=config.target,
    )
    recipe = fit_recipe(
        train_t, sensitive, target, include_sensitive=config.include_sensitive_feature
    )
    dm_train = apply_recipe(train_t, recipe)
    dm_val = apply_recipe(val_t, recipe)
    dm_test = apply_recipe(test_t, recipe)
    spec = config.train_spec()

    def builder(strength: float):
        cfg = MitigationConfig(config.mitigation, config.metric, strength)
        return build_fair_model(dm_train, dm_val, cfg, spec)

    def test_eval(fm) -> EvalResult:
        preds = fair_predict(fm, dm_test.features, dm_test.groups)
        return evaluate_predictions(preds, dm_test.labels, dm_test.groups)

    grid = (0.0,) if config.mitigation == REWEIGH else grid_for_method(config.mitigation)
    return tuner_sweep(
        builder,
        test_eval,
        config.metric,
        thresholds,
        config.tolerance,
        config.budget,
        grid,
    )
