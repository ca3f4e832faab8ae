"""Statistical profiling of a Table.

Produces per-column profiles, missing-value patterns broken down by
demographic subgroup, a mixed-type association matrix, and flags for
features that act as proxies for a sensitive attribute.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import EmptyTableError, TooManyGroupsError, UnknownColumnError
from .tabular import CATEGORICAL, NUMERIC, Column, Table, column_distinct

#: Associations above this are flagged as potential proxy features.
PROXY_THRESHOLD = 0.3

#: Numeric columns with at most this many distinct values may serve as groups.
MAX_GROUPS = 10

HISTOGRAM_BINS = 10
TOP_CATEGORIES = 10


@dataclass(frozen=True)
class NumericSummary:
    minimum: float
    maximum: float
    mean: float
    std: float
    histogram: tuple[int, ...]


@dataclass(frozen=True)
class ColumnProfile:
    name: str
    kind: str
    missing_rate: float
    distinct_count: int
    numeric_summary: NumericSummary | None
    categorical_summary: tuple[tuple[str, float], ...] | None


@dataclass(frozen=True)
class ProxyFlag:
    feature: str
    candidate: str
    score: float


@dataclass(frozen=True, eq=False)
class AnalysisReport:
    n_rows: int
    n_cols: int
    profiles: tuple[ColumnProfile, ...]
    subgroup_by: str | None
    subgroup_missing: dict[str, dict[str, float]]
    column_order: tuple[str, ...]
    correlation: np.ndarray
    proxy_flags: tuple[ProxyFlag, ...]
    sensitive_candidates: tuple[str, ...]

    def profile(self, name: str) -> ColumnProfile:
        for p in self.profiles:
            if p.name == name:
                return p
        raise UnknownColumnError(name)

    def association(self, a: str, b: str) -> float:
        i = self.column_order.index(a)
        j = self.column_order.index(b)
        return float(self.correlation[i, j])


def _profile_column(col: Column, n_rows: int) -> ColumnProfile:
    present = col.present_values()
    missing_rate = float(col.missing_mask.sum() / n_rows) if n_rows else 0.0
    if col.kind == NUMERIC:
        if len(present) == 0:
            summary = NumericSummary(0.0, 0.0, 0.0, 0.0, (0,) * HISTOGRAM_BINS)
            return ColumnProfile(col.name, col.kind, missing_rate, 0, summary, None)
        lo, hi = float(present.min()), float(present.max())
        if lo == hi:
            hist = (len(present),) + (0,) * (HISTOGRAM_BINS - 1)
        else:
            counts, _ = np.histogram(present, bins=HISTOGRAM_BINS, range=(lo, hi))
            hist = tuple(int(c) for c in counts)
        summary = NumericSummary(
            lo, hi, float(present.mean()), float(present.std()), hist
        )
        distinct = len(np.unique(present))
        return ColumnProfile(col.name, col.kind, missing_rate, distinct, summary, None)
    counts = Counter(present)
    total = len(present)
    top = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:TOP_CATEGORIES]
    cat_summary = tuple((tok, c / total) for tok, c in top) if total else ()
    return ColumnProfile(
        col.name, col.kind, missing_rate, len(counts), None, cat_summary
    )


def profile(t: Table) -> list[ColumnProfile]:
    """One profile per column; std is the population standard deviation."""
    if t.n_rows == 0 or not t.columns:
        raise EmptyTableError("cannot profile an empty table")
    return [_profile_column(c, t.n_rows) for c in t.columns]


def _group_tokens(col: Column) -> list[str | None]:
    return col.tokens()


def subgroup_missing(t: Table, group_col: str) -> dict[str, dict[str, float]]:
    """Missing-value rate of every other column within each subgroup.

    Returns {column: {group_value: missing_rate}}. The grouping column must
    be categorical, or numeric with at most MAX_GROUPS distinct values.
    """
    gcol = t.column(group_col)
    tokens = _group_tokens(gcol)
    distinct = {tok for tok in tokens if tok is not None}
    if len(distinct) > MAX_GROUPS:
        raise TooManyGroupsError(
            f"{group_col!r} has {len(distinct)} distinct values (max {MAX_GROUPS})"
        )
    group_rows: dict[str, np.ndarray] = {}
    tok_arr = np.array([tok if tok is not None else "" for tok in tokens], dtype=object)
    for g in sorted(distinct):
        group_rows[g] = tok_arr == g
    out: dict[str, dict[str, float]] = {}
    for col in t.columns:
        if col.name == group_col:
            continue
        per_group = {}
        for g, rows in group_rows.items():
            n = int(rows.sum())
            per_group[g] = float(col.missing_mask[rows].sum() / n) if n else 0.0
        out[col.name] = per_group
    return out


# --- association measures ----------------------------------------------------


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    sx, sy = x.std(), y.std()
    if sx == 0 or sy == 0:
        return 0.0
    r = float(((x - x.mean()) * (y - y.mean())).mean() / (sx * sy))
    return max(-1.0, min(1.0, r))


def _cramers_v(x: list[str], y: list[str]) -> float:
    """Cramer's V from the bias-uncorrected chi-squared statistic."""
    xs = sorted(set(x))
    ys = sorted(set(y))
    if len(xs) < 2 or len(ys) < 2:
        return 0.0
    xi = {v: i for i, v in enumerate(xs)}
    yi = {v: i for i, v in enumerate(ys)}
    obs = np.zeros((len(xs), len(ys)))
    for a, b in zip(x, y):
        obs[xi[a], yi[b]] += 1
    n = obs.sum()
    expected = np.outer(obs.sum(axis=1), obs.sum(axis=0)) / n
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(expected > 0, (obs - expected) ** 2 / expected, 0.0)
    chi2 = terms.sum()
    v2 = chi2 / (n * min(len(xs) - 1, len(ys) - 1))
    return float(min(1.0, np.sqrt(max(0.0, v2))))


def _correlation_ratio(groups: list[str], values: np.ndarray) -> float:
    """Eta: sqrt(between-group variance / total variance)."""
    total_var = values.var()
    if total_var == 0:
        return 0.0
    grand = values.mean()
    between = 0.0
    arr = np.array(groups, dtype=object)
    for g in set(groups):
        sub = values[arr == g]
        between += len(sub) * (sub.mean() - grand) ** 2
    eta2 = (between / len(values)) / total_var
    return float(min(1.0, np.sqrt(max(0.0, eta2))))


def _pair_association(a: Column, b: Column) -> float:
    both = ~(a.missing_mask | b.missing_mask)
    if both.sum() < 3:
        return 0.0
    if a.kind == NUMERIC and b.kind == NUMERIC:
        return _pearson(
            a.values[both].astype(float), b.values[both].astype(float)
        )
    if a.kind == CATEGORICAL and b.kind == CATEGORICAL:
        return _cramers_v(list(a.values[both]), list(b.values[both]))
    if a.kind == CATEGORICAL:
        return _correlation_ratio(list(a.values[both]), b.values[both].astype(float))
    return _correlation_ratio(list(b.values[both]), a.values[both].astype(float))


def association_matrix(t: Table) -> np.ndarray:
    """Pairwise association over rows where both cells are present.

    Numeric-numeric pairs use Pearson r, categorical-categorical use
    Cramer's V, and mixed pairs use the correlation ratio. Degenerate pairs
    (fewer than 3 complete rows, or zero variance) score 0. The diagonal is
    1 by definition.
    """
    k = len(t.columns)
    m = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            m[i, j] = m[j, i] = _pair_association(t.columns[i], t.columns[j])
    return m


def flag_proxies(
    t: Table,
    matrix: np.ndarray,
    sensitive_candidates: list[str],
    threshold: float = PROXY_THRESHOLD,
) -> list[ProxyFlag]:
    """Non-candidate features whose association with a candidate exceeds the
    proxy threshold, strongest first."""
    names = t.column_names
    for cand in sensitive_candidates:
        if cand not in names:
            raise UnknownColumnError(cand)
    flags = []
    for cand in sensitive_candidates:
        j = names.index(cand)
        for i, feature in enumerate(names):
            if feature in sensitive_candidates:
                continue
            score = abs(float(matrix[i, j]))
            if score > threshold:
                flags.append(ProxyFlag(feature, cand, score))
    flags.sort(key=lambda f: (-f.score, f.feature, f.candidate))
    return flags


def analyze(t: Table, sensitive_candidates: list[str] | None = None) -> AnalysisReport:
    """Full profiling pass over a table.

    ``sensitive_candidates`` drives proxy flagging and the choice of the
    subgroup-missingness grouping column (the first candidate with at most
    MAX_GROUPS groups). With no candidates those sections are empty.
    """
    profiles = tuple(profile(t))
    candidates = tuple(sensitive_candidates or ())
    matrix = association_matrix(t) if len(t.columns) >= 2 else np.eye(len(t.columns))
    flags = tuple(flag_proxies(t, matrix, list(candidates))) if candidates else ()
    subgroup_by = None
    subgroup = {}
    for cand in candidates:
        distinct = len(column_distinct(t, cand))
        if 2 <= distinct <= MAX_GROUPS:
            subgroup_by = cand
            subgroup = subgroup_missing(t, cand)
            break
    return AnalysisReport(
        n_rows=t.n_rows,
        n_cols=len(t.columns),
        profiles=profiles,
        subgroup_by=subgroup_by,
        subgroup_missing=subgroup,
        column_order=tuple(t.column_names),
        correlation=matrix,
        proxy_flags=flags,
        sensitive_candidates=candidates,
    )


# --- JSON wire form ----------------------------------------------------------


def report_to_dict(r: AnalysisReport) -> dict:
    """Stable JSON-ready form consumed by the service and the UI."""
    return {
        "n_rows": r.n_rows,
        "n_cols": r.n_cols,
        "profiles": [
            {
                "name": p.name,
                "kind": p.kind,
                "missing_rate": p.missing_rate,
                "distinct_count": p.distinct_count,
                "numeric_summary": (
                    None
                    if p.numeric_summary is None
                    else {
                        "min": p.numeric_summary.minimum,
                        "max": p.numeric_summary.maximum,
                        "mean": p.numeric_summary.mean,
                        "std": p.numeric_summary.std,
                        "histogram": list(p.numeric_summary.histogram),
                    }
                ),
                "categorical_summary": (
                    None
                    if p.categorical_summary is None
                    else [
                        {"token": tok, "frequency": f}
                        for tok, f in p.categorical_summary
                    ]
                ),
            }
            for p in r.profiles
        ],
        "subgroup_by": r.subgroup_by,
        "subgroup_missing": r.subgroup_missing,
        "columns": list(r.column_order),
        "correlation": [[float(v) for v in row] for row in r.correlation],
        "proxy_flags": [
            {"feature": f.feature, "candidate": f.candidate, "score": f.score}
            for f in r.proxy_flags
        ],
        "sensitive_candidates": list(r.sensitive_candidates),
    }


def report_from_dict(d: dict) -> AnalysisReport:
    profiles = tuple(
        ColumnProfile(
            name=p["name"],
            kind=p["kind"],
            missing_rate=p["missing_rate"],
            distinct_count=p["distinct_count"],
            numeric_summary=(
                None
                if p["numeric_summary"] is None
                else NumericSummary(
                    p["numeric_summary"]["min"],
                    p["numeric_summary"]["max"],
                    p["numeric_summary"]["mean"],
                    p["numeric_summary"]["std"],
                    tuple(p["numeric_summary"]["histogram"]),
                )
            ),
            categorical_summary=(
                None
                if p["categorical_summary"] is None
                else tuple(
                    (e["token"], e["frequency"]) for e in p["categorical_summary"]
                )
            ),
        )
        for p in d["profiles"]
    )
    return AnalysisReport(
        n_rows=d["n_rows"],
        n_cols=d["n_cols"],
        profiles=profiles,
        subgroup_by=d["subgroup_by"],
        subgroup_missing={
            k: dict(v) for k, v in d["subgroup_missing"].items()
        },
        column_order=tuple(d["columns"]),
        correlation=np.array(d["correlation"]) if d["correlation"] else np.zeros((0, 0)),
        proxy_flags=tuple(
            ProxyFlag(f["feature"], f["candidate"], f["score"])
            for f in d["proxy_flags"]
        ),
        sensitive_candidates=tuple(d["sensitive_candidates"]),
    )
