"""Synthetic biased dataset generator.

Produces a census-style table with a direct group-dependent label shift plus
proxy features that leak group membership, so a plain classifier shows a
large demographic parity gap. The default parameters are calibrated so that
every mitigation method in this package can reach a 0.05 parity target on
the held-out split of the 5000-row fixture.
"""

from __future__ import annotations

import io

import numpy as np

from .tabular import Table, ingest_csv

FIXTURE_ROWS = 5000
FIXTURE_SEED = 13

_EDU_LEVELS = ("HS", "Bachelors", "Masters", "PhD")
_EDU_PROBS_PRIV = (0.40, 0.34, 0.18, 0.08)
_EDU_PROBS_UNPRIV = (0.46, 0.34, 0.14, 0.06)
_EDU_EFFECT = {"HS": -0.4, "Bachelors": 0.0, "Masters": 0.35, "PhD": 0.7}


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def make_biased_csv(
    n_rows: int = FIXTURE_ROWS,
    seed: int = FIXTURE_SEED,
    label_shift: float = 0.9,
    proxy_shift: float = 0.15,
    hours_shift: float = 1.5,
    dept_skew: float = 0.85,
) -> bytes:
    """Generate the fixture as CSV bytes.

    ``label_shift`` injects bias directly into the label process. The
    department column is a strong group proxy that does not enter the label
    process at all, so a plain model uses it to express the injected bias;
    ``proxy_shift``/``hours_shift`` add mild group shifts to genuinely
    predictive features, which set the residual disparity that survives
    label-level corrections such as reweighing.
    """
    rng = np.random.default_rng(seed)
    male = rng.random(n_rows) < 0.52
    p_eng = np.where(male, dept_skew, 1.0 - dept_skew)
    dept = np.where(rng.random(n_rows) < p_eng, "Eng", "Care")
    age = np.clip(rng.normal(38, 12, n_rows), 18, 80).round(0)
    edu = np.where(
        male,
        rng.choice(_EDU_LEVELS, n_rows, p=_EDU_PROBS_PRIV),
        rng.choice(_EDU_LEVELS, n_rows, p=_EDU_PROBS_UNPRIV),
    )
    hours = np.clip(rng.normal(40 + hours_shift * male, 8, n_rows), 10, 80).round(1)
    rating = (rng.normal(0, 1, n_rows) + proxy_shift * male).round(4)
    edu_effect = np.array([_EDU_EFFECT[e] for e in edu])
    z = (
        -0.35
        + 0.55 * (age - 38) / 12
        + 0.45 * (hours - 40) / 8
        + 0.9 * rating
        + edu_effect
        + label_shift * male
    )
    label = (rng.random(n_rows) < _sigmoid(z)).astype(int)

    # Group-dependent missingness so subgroup patterns are visible.
    edu_missing = rng.random(n_rows) < np.where(male, 0.02, 0.06)
    hours_missing = rng.random(n_rows) < 0.03

    buf = io.StringIO()
    buf.write("gender,dept,age,education,hours,rating,label\n")
    for i in range(n_rows):
        gender = "Male" if male[i] else "Female"
        edu_tok = "" if edu_missing[i] else edu[i]
        hours_tok = "" if hours_missing[i] else f"{hours[i]:.1f}"
        buf.write(
            f"{gender},{dept[i]},{age[i]:.0f},{edu_tok},{hours_tok},"
            f"{rating[i]:.4f},{label[i]}\n"
        )
    return buf.getvalue().encode()


def make_biased_table(
    n_rows: int = FIXTURE_ROWS,
    seed: int = FIXTURE_SEED,
    **knobs,
) -> Table:
    return ingest_csv(make_biased_csv(n_rows, seed, **knobs), "synthetic-biased")
