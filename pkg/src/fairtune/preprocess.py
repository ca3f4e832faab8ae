"""Raw Table -> numeric design matrix, via a recipe fitted on training data.

The recipe captures everything needed to transform any conforming table with
training statistics only: subgroup-conditional imputation values, one-hot
vocabularies, z-score parameters, the positive-label token, and the
privileged-group token.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import NonBinaryTargetError, SchemaMismatchError, SingleGroupError
from .tabular import CATEGORICAL, NUMERIC, Column, Table, column_distinct


@dataclass(frozen=True)
class NumericTransform:
    group_means: dict[str, float]
    global_mean: float
    center: float          # train mean after imputation
    scale: float           # train population std after imputation


@dataclass(frozen=True)
class CategoricalTransform:
    group_modes: dict[str, str]
    global_mode: str
    vocabulary: tuple[str, ...]   # descending train frequency, lexicographic ties


@dataclass(frozen=True)
class Recipe:
    source_schema: tuple[tuple[str, str], ...]   # (name, kind) for required columns
    sensitive: str
    target: str
    positive_label: str
    privileged_value: str
    include_sensitive: bool
    numeric: dict[str, NumericTransform]
    categorical: dict[str, CategoricalTransform]
    feature_names: tuple[str, ...]

    def fingerprint(self) -> str:
        return hashlib.sha256(
            json.dumps(recipe_to_dict(self), sort_keys=True).encode()
        ).hexdigest()


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    features: np.ndarray       # (n, d) float64, all finite
    labels: np.ndarray         # (n,) in {0, 1}
    groups: np.ndarray         # (n,) in {0, 1}; 1 = privileged
    feature_names: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


def _sensitive_tokens(col: Column) -> list[str | None]:
    return col.tokens()


def _group_mean(values: np.ndarray, mask: np.ndarray, rows: np.ndarray) -> float | None:
    sel = rows & ~mask
    if not sel.any():
        return None
    return float(values[sel].mean())


def _mode(tokens: list[str]) -> str:
    counts = Counter(tokens)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]


def _positive_label(distinct: list[tuple[str, int]]) -> str:
    """Default positive-class token.

    If both tokens parse as numbers the larger value is positive; otherwise
    the less frequent token (lexicographically later on ties, given the
    distinct list is count-desc then lexicographic).
    """
    from .tabular import parse_number

    (tok_a, _), (tok_b, _) = distinct
    na, nb = parse_number(tok_a), parse_number(tok_b)
    if na is not None and nb is not None:
        return tok_a if na > nb else tok_b
    return distinct[1][0]


def fit_recipe(
    train: Table,
    sensitive: str,
    target: str,
    include_sensitive: bool = False,
    privileged_value: str | None = None,
    positive_label: str | None = None,
) -> Recipe:
    """Fit all transform statistics on the training split only.

    Numeric imputation uses the mean of unmasked cells within the row's
    sensitive group, falling back to the global train mean; categorical
    imputation is the per-group mode with a global-mode fallback.
    Normalization is a z-score with train mean and population std computed
    after imputation; zero-std columns transform to 0.
    """
    target_distinct = column_distinct(train, target)
    if len(target_distinct) != 2:
        raise NonBinaryTargetError(
            f"target {target!r} has {len(target_distinct)} distinct values"
        )
    sensitive_distinct = column_distinct(train, sensitive)
    if len(sensitive_distinct) < 2:
        raise SingleGroupError(
            f"sensitive column {sensitive!r} has a single group in training data"
        )
    if sensitive == target:
        raise SchemaMismatchError("sensitive and target are the same column")

    stokens = _sensitive_tokens(train.column(sensitive))
    group_values = sorted({t for t in stokens if t is not None})
    group_rows = {
        g: np.array([t == g for t in stokens], dtype=bool) for g in group_values
    }

    feature_cols = [
        c for c in train.columns
        if c.name != target and (c.name != sensitive or include_sensitive)
    ]

    numeric: dict[str, NumericTransform] = {}
    categorical: dict[str, CategoricalTransform] = {}
    feature_names: list[str] = []

    for col in feature_cols:
        if col.kind == NUMERIC:
            present = col.present_values()
            global_mean = float(present.mean()) if len(present) else 0.0
            means = {}
            for g, rows in group_rows.items():
                m = _group_mean(col.values, col.missing_mask, rows)
                means[g] = m if m is not None else global_mean
            imputed = _impute_numeric(col, stokens, means, global_mean)
            center = float(imputed.mean())
            scale = float(imputed.std())
            numeric[col.name] = NumericTransform(means, global_mean, center, scale)
            feature_names.append(col.name)
        else:
            present = [str(v) for v, m in zip(col.values, col.missing_mask) if not m]
            global_mode = _mode(present) if present else ""
            modes = {}
            for g, rows in group_rows.items():
                sel = [
                    str(v)
                    for v, m, r in zip(col.values, col.missing_mask, rows)
                    if r and not m
                ]
                modes[g] = _mode(sel) if sel else global_mode
            counts = Counter(present)
            vocab = tuple(
                tok for tok, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
            )
            categorical[col.name] = CategoricalTransform(modes, global_mode, vocab)
            feature_names.extend(f"{col.name}={tok}" for tok in vocab)

    schema = tuple(
        (c.name, c.kind)
        for c in train.columns
        if c.name in {f.name for f in feature_cols} or c.name in (sensitive, target)
    )
    return Recipe(
        source_schema=schema,
        sensitive=sensitive,
        target=target,
        positive_label=positive_label or _positive_label(target_distinct),
        privileged_value=privileged_value or sensitive_distinct[0][0],
        include_sensitive=include_sensitive,
        numeric=numeric,
        categorical=categorical,
        feature_names=tuple(feature_names),
    )


def _impute_numeric(
    col: Column,
    stokens: list[str | None],
    group_means: dict[str, float],
    global_mean: float,
) -> np.ndarray:
    out = col.values.astype(float).copy()
    for i, missing in enumerate(col.missing_mask):
        if missing:
            g = stokens[i]
            out[i] = group_means.get(g, global_mean) if g is not None else global_mean
    return out


def apply_recipe(t: Table, r: Recipe) -> DesignMatrix:
    """Transform any schema-compatible table with the recipe's train stats.

    Unseen categorical tokens map to an all-zeros one-hot block. Rows whose
    target cell is masked are dropped (they carry no label). Sensitive values
    are binarized with the privileged-group token; masked sensitive cells
    count as unprivileged.
    """
    for name, kind in r.source_schema:
        if not t.has_column(name):
            raise SchemaMismatchError(f"missing column {name!r}")
        if t.column(name).kind != kind:
            raise SchemaMismatchError(
                f"column {name!r} changed kind: expected {kind}, "
                f"got {t.column(name).kind}"
            )

    target_col = t.column(r.target)
    keep = ~target_col.missing_mask
    n = int(keep.sum())
    stokens_all = _sensitive_tokens(t.column(r.sensitive))
    stokens = [tok for tok, k in zip(stokens_all, keep) if k]

    target_tokens = [tok for tok, k in zip(target_col.tokens(), keep) if k]
    labels = np.array(
        [1 if tok == r.positive_label else 0 for tok in target_tokens], dtype=np.int64
    )
    groups = np.array(
        [1 if tok == r.privileged_value else 0 for tok in stokens], dtype=np.int64
    )

    blocks: list[np.ndarray] = []
    for name, kind in r.source_schema:
        if name == r.target or (name == r.sensitive and not r.include_sensitive):
            continue
        col = t.column(name).take(np.where(keep)[0])
        if kind == NUMERIC:
            tr = r.numeric[name]
            imputed = _impute_numeric(col, stokens, tr.group_means, tr.global_mean)
            if tr.scale == 0:
                blocks.append(np.zeros((n, 1)))
            else:
                blocks.append(((imputed - tr.center) / tr.scale).reshape(-1, 1))
        else:
            tr = r.categorical[name]
            block = np.zeros((n, len(tr.vocabulary)))
            index = {tok: j for j, tok in enumerate(tr.vocabulary)}
            for i in range(n):
                if col.missing_mask[i]:
                    g = stokens[i]
                    tok = tr.group_modes.get(g, tr.global_mode) if g else tr.global_mode
                else:
                    tok = str(col.values[i])
                j = index.get(tok)
                if j is not None:
                    block[i, j] = 1.0
            blocks.append(block)

    features = np.hstack(blocks) if blocks else np.zeros((n, 0))
    if not np.isfinite(features).all():
        raise SchemaMismatchError("non-finite value produced by recipe")
    return DesignMatrix(features, labels, groups, r.feature_names)


# --- serialization ------------------------------------------------------------


def recipe_to_dict(r: Recipe) -> dict:
    return {
        "source_schema": [[n, k] for n, k in r.source_schema],
        "sensitive": r.sensitive,
        "target": r.target,
        "positive_label": r.positive_label,
        "privileged_value": r.privileged_value,
        "include_sensitive": r.include_sensitive,
        "numeric": {
            name: {
                "group_means": dict(sorted(tr.group_means.items())),
                "global_mean": tr.global_mean,
                "center": tr.center,
                "scale": tr.scale,
            }
            for name, tr in r.numeric.items()
        },
        "categorical": {
            name: {
                "group_modes": dict(sorted(tr.group_modes.items())),
                "global_mode": tr.global_mode,
                "vocabulary": list(tr.vocabulary),
            }
            for name, tr in r.categorical.items()
        },
        "feature_names": list(r.feature_names),
    }


def recipe_from_dict(d: dict) -> Recipe:
    return Recipe(
        source_schema=tuple((n, k) for n, k in d["source_schema"]),
        sensitive=d["sensitive"],
        target=d["target"],
        positive_label=d["positive_label"],
        privileged_value=d["privileged_value"],
        include_sensitive=d["include_sensitive"],
        numeric={
            name: NumericTransform(
                dict(tr["group_means"]), tr["global_mean"], tr["center"], tr["scale"]
            )
            for name, tr in d["numeric"].items()
        },
        categorical={
            name: CategoricalTransform(
                dict(tr["group_modes"]), tr["global_mode"], tuple(tr["vocabulary"])
            )
            for name, tr in d["categorical"].items()
        },
        feature_names=tuple(d["feature_names"]),
    )
