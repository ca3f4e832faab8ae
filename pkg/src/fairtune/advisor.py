"""Sensitive/target attribute recommendation.

A deterministic name-lexicon heuristic always works offline; an optional
chat-completions provider can refine it. Provider failures of any kind fall
back to the heuristic with a warning so the pipeline is never blocked.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .analysis import AnalysisReport
from .errors import (
    NoBinaryColumnError,
    NonBinaryTargetError,
    NoSensitiveCandidateError,
    SameColumnError,
    UnknownColumnError,
)
from .tabular import Table, column_distinct

#: Name stems that mark a column as a likely sensitive attribute.
SENSITIVE_STEMS = (
    "sex",
    "gender",
    "race",
    "ethnic",
    "age",
    "disab",
    "relig",
    "nation",
    "marital",
)

#: Name stems that mark a binary column as a likely prediction target.
#: Matched as substrings, except single-letter entries which require an
#: exact name (otherwise "y" would match nearly everything).
TARGET_STEMS = (
    "income",
    "label",
    "target",
    "outcome",
    "class",
    "pass",
    "admit",
    "default",
    "y",
)

#: Sensitive recommendations require a group structure this small.
MIN_GROUPS = 2
MAX_GROUPS = 10

FALLBACK_TARGET_CONFIDENCE = 0.3
FALLBACK_SENSITIVE_CONFIDENCE = 0.1


@dataclass(frozen=True)
class RecommendedAttribute:
    column: str
    confidence: float
    rationale: str


@dataclass(frozen=True)
class AttributeRecommendation:
    sensitive: tuple[RecommendedAttribute, ...]
    target: RecommendedAttribute
    provider: str
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class ProviderConfig:
    """Connection settings for a chat-completions endpoint.

    Only the name of the environment variable holding the API key is stored,
    never the key itself. A ``mock://<path>`` base URL reads scripted replies
    from a local JSON file instead of the network.
    """

    base_url: str
    model_id: str
    api_key_env: str = "FAIRTUNE_API_KEY"
    timeout: float = 30.0
    max_retries: int = 2

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")


def _matches_stem(name: str, stems: tuple[str, ...]) -> str | None:
    low = name.lower()
    for stem in stems:
        if len(stem) == 1:
            if low == stem:
                return stem
        elif stem in low:
            return stem
    return None


def lexicon_candidates(t: Table) -> list[str]:
    """Columns whose names look like sensitive attributes and whose
    cardinality permits group analysis."""
    out = []
    for name in t.column_names:
        if _matches_stem(name, SENSITIVE_STEMS) is None:
            continue
        k = len(column_distinct(t, name))
        if MIN_GROUPS <= k <= MAX_GROUPS:
            out.append(name)
    return out


def heuristic_recommend(
    report: AnalysisReport,
    distincts: dict[str, list[tuple[str, int]]] | None = None,
) -> AttributeRecommendation:
    """Deterministic recommendation from column names and cardinalities.

    Target: first binary column whose name hits the target lexicon; if none
    hits, the last binary column at low confidence. Sensitive: every
    lexicon-named column with 2..10 distinct values; if none, the non-target
    column of lowest cardinality at low confidence.
    """
    if not report.profiles:
        raise NoBinaryColumnError("empty report")
    binary = [p.name for p in report.profiles if p.distinct_count == 2]
    if not binary:
        raise NoBinaryColumnError("no column with exactly 2 distinct values")

    target = None
    for name in binary:
        stem = _matches_stem(name, TARGET_STEMS)
        if stem is not None:
            target = RecommendedAttribute(
                name, 1.0, f"binary column name matches outcome keyword '{stem}'"
            )
            break
    if target is None:
        target = RecommendedAttribute(
            binary[-1],
            FALLBACK_TARGET_CONFIDENCE,
            "fallback: last binary column, no outcome keyword matched",
        )

    sensitive: list[RecommendedAttribute] = []
    for p in report.profiles:
        if p.name == target.column:
            continue
        stem = _matches_stem(p.name, SENSITIVE_STEMS)
        if stem is not None and MIN_GROUPS <= p.distinct_count <= MAX_GROUPS:
            sensitive.append(
                RecommendedAttribute(
                    p.name,
                    1.0,
                    f"name matches demographic keyword '{stem}' "
                    f"({p.distinct_count} groups)",
                )
            )
    if not sensitive:
        eligible = [
            p
            for p in report.profiles
            if p.name != target.column and p.distinct_count >= MIN_GROUPS
        ]
        if not eligible:
            raise NoSensitiveCandidateError(
                "no non-target column with at least 2 distinct values"
            )
        pick = min(
            eligible, key=lambda p: (p.distinct_count, report.column_order.index(p.name))
        )
        sensitive = [
            RecommendedAttribute(
                pick.name,
                FALLBACK_SENSITIVE_CONFIDENCE,
                "fallback: lowest-cardinality non-target column",
            )
        ]
    return AttributeRecommendation(
        sensitive=tuple(sensitive), target=target, provider="heuristic"
    )


# --- provider client ---------------------------------------------------------

_REPLY_SHAPE = (
    '{"sensitive": [{"column": str, "confidence": float, "rationale": str}], '
    '"target": {"column": str, "confidence": float, "rationale": str}}'
)


def build_prompt(report: AnalysisReport) -> str:
    """User message embedding a compact report summary.

    Template version: fairtune-prompt-v1 (stamped into rationales so reports
    can attribute provider output to the prompt revision that produced it).
    """
    lines = [
        "You are advising on a fairness-aware classification task.",
        f"The dataset has {report.n_rows} rows and {report.n_cols} columns:",
    ]
    for p in report.profiles:
        desc = f"- {p.name} ({p.kind}, {p.distinct_count} distinct, "
        desc += f"{p.missing_rate:.1%} missing)"
        if p.categorical_summary:
            tokens = ", ".join(tok for tok, _ in p.categorical_summary[:4])
            desc += f" values: {tokens}"
        lines.append(desc)
    if report.proxy_flags:
        pairs = "; ".join(
            f"{f.feature}~{f.candidate} ({f.score:.2f})" for f in report.proxy_flags[:5]
        )
        lines.append(f"Strongly associated pairs: {pairs}")
    lines.append(
        "Recommend sensitive attributes (demographic group columns) and one "
        "binary target attribute. Reply with STRICT JSON only, no prose, "
        f"matching: {_REPLY_SHAPE}"
    )
    return "\n".join(lines)


class _ProviderFailure(Exception):
    pass


def _read_mock_reply(path: str) -> dict:
    raw = json.loads(Path(path).read_text())
    if isinstance(raw, list):
        if not raw:
            raise _ProviderFailure("mock reply file is empty")
        raw = raw[0]
    return raw


def _call_provider(cfg: ProviderConfig, prompt: str) -> dict:
    if cfg.base_url.startswith("mock://"):
        return _read_mock_reply(cfg.base_url[len("mock://") :])
    key = os.environ.get(cfg.api_key_env, "")
    if not key:
        raise _ProviderFailure(f"API key env var {cfg.api_key_env} is empty")
    resp = httpx.post(
        cfg.base_url.rstrip("/") + "/chat/completions",
        json={
            "model": cfg.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        },
        headers={"Authorization": f"Bearer {key}"},
        timeout=cfg.timeout,
    )
    resp.raise_for_status()
    return resp.json()


def _parse_reply(body: dict, report: AnalysisReport) -> AttributeRecommendation:
    try:
        content = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise _ProviderFailure("response missing choices[0].message.content")
    try:
        payload = json.loads(content)
    except (json.JSONDecodeError, TypeError):
        raise _ProviderFailure("reply content is not valid JSON")
    if not isinstance(payload, dict):
        raise _ProviderFailure("reply JSON is not an object")

    known = set(report.column_order)
    binary = {p.name for p in report.profiles if p.distinct_count == 2}

    raw_target = payload.get("target")
    if not isinstance(raw_target, dict) or "column" not in raw_target:
        raise _ProviderFailure("reply missing target.column")
    t_col = raw_target["column"]
    if t_col not in known:
        raise _ProviderFailure(f"target names unknown column {t_col!r}")
    if t_col not in binary:
        raise _ProviderFailure(f"target column {t_col!r} is not binary")
    target = RecommendedAttribute(
        t_col,
        _clip_confidence(raw_target.get("confidence", 1.0)),
        str(raw_target.get("rationale", "")),
    )

    raw_sensitive = payload.get("sensitive")
    if not isinstance(raw_sensitive, list) or not raw_sensitive:
        raise _ProviderFailure("reply sensitive list missing or empty")
    sensitive = []
    for entry in raw_sensitive:
        if not isinstance(entry, dict) or "column" not in entry:
            raise _ProviderFailure("sensitive entry missing column")
        col = entry["column"]
        if col not in known:
            raise _ProviderFailure(f"sensitive entry names unknown column {col!r}")
        if col == t_col:
            continue
        sensitive.append(
            RecommendedAttribute(
                col,
                _clip_confidence(entry.get("confidence", 1.0)),
                str(entry.get("rationale", "")),
            )
        )
    if not sensitive:
        raise _ProviderFailure("no valid sensitive column in reply")
    sensitive.sort(key=lambda r: -r.confidence)
    return AttributeRecommendation(tuple(sensitive), target, provider="llm")


def _clip_confidence(v) -> float:
    try:
        return max(0.0, min(1.0, float(v)))
    except (TypeError, ValueError):
        return 0.0


def llm_recommend(
    report: AnalysisReport, cfg: ProviderConfig
) -> AttributeRecommendation:
    """Ask a chat-completions provider; degrade to the heuristic on failure.

    Never raises for provider problems: after ``max_retries`` additional
    attempts the heuristic result is returned with a warning describing what
    went wrong.
    """
    prompt = build_prompt(report)
    last_error = "no attempt made"
    for _ in range(cfg.max_retries + 1):
        try:
            body = _call_provider(cfg, prompt)
            rec = _parse_reply(body, report)
            return AttributeRecommendation(
                rec.sensitive, rec.target, provider=f"llm:{cfg.model_id}"
            )
        except (_ProviderFailure, httpx.HTTPError, OSError, ValueError) as e:
            last_error = f"{type(e).__name__}: {e}"
    fallback = heuristic_recommend(report)
    return AttributeRecommendation(
        fallback.sensitive,
        fallback.target,
        provider="heuristic",
        warnings=(f"provider '{cfg.model_id}' unavailable, fell back to "
                  f"heuristic ({last_error})",),
    )


def resolve(
    report: AnalysisReport,
    rec: AttributeRecommendation,
    sensitive_override: str | None = None,
    target_override: str | None = None,
) -> tuple[str, str]:
    """Final (sensitive, target) choice: user override wins, otherwise the
    top-confidence recommendation."""
    known = set(report.column_order)
    binary = {p.name for p in report.profiles if p.distinct_count == 2}

    target = target_override or rec.target.column
    if target not in known:
        raise UnknownColumnError(target)
    if target not in binary:
        raise NonBinaryTargetError(f"{target!r} does not have exactly 2 values")

    if sensitive_override is not None:
        sensitive = sensitive_override
        if sensitive not in known:
            raise UnknownColumnError(sensitive)
    else:
        ranked = sorted(
            rec.sensitive,
            key=lambda r: (-r.confidence, report.column_order.index(r.column)),
        )
        candidates = [r.column for r in ranked if r.column != target]
        if not candidates:
            raise NoSensitiveCandidateError("all recommended columns equal the target")
        sensitive = candidates[0]
    if sensitive == target:
        raise SameColumnError(f"sensitive and target are both {sensitive!r}")
    return sensitive, target


def recommendation_to_dict(rec: AttributeRecommendation) -> dict:
    return {
        "sensitive": [
            {"column": r.column, "confidence": r.confidence, "rationale": r.rationale}
            for r in rec.sensitive
        ],
        "target": {
            "column": rec.target.column,
            "confidence": rec.target.confidence,
            "rationale": rec.target.rationale,
        },
        "provider": rec.provider,
        "warnings": list(rec.warnings),
    }


def recommendation_from_dict(d: dict) -> AttributeRecommendation:
    return AttributeRecommendation(
        sensitive=tuple(
            RecommendedAttribute(e["column"], e["confidence"], e["rationale"])
            for e in d["sensitive"]
        ),
        target=RecommendedAttribute(
            d["target"]["column"], d["target"]["confidence"], d["target"]["rationale"]
        ),
        provider=d["provider"],
        warnings=tuple(d.get("warnings", ())),
    )
