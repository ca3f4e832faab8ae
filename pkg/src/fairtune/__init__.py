"""Fairness-aware tabular ML pipeline.

Profiles datasets, recommends sensitive/target attributes, trains baseline
and bias-mitigated logistic models, and tunes mitigation strength until the
chosen fairness metric lands inside a user-given threshold band.
"""

__version__ = "0.1.0"
