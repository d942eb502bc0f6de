"""Ex-ante fairness risk scoring over tabular data.

Scores estimate, per row, how likely the observed outcome would differ had
the individual belonged to the other sensitive group. Composite operations
return plain dicts mirroring the CLI's JSON artifacts.
"""

import json

from ._foresee import (
    Dataset,
    EstimatorError,
    IoError,
    SchemaError,
    ValidationError,
    baseline_risk,
    score,
)
from . import _foresee as _native

__all__ = [
    "Dataset",
    "score",
    "baseline_risk",
    "evaluate_fairness",
    "mitigate",
    "simulate_bias",
    "IoError",
    "SchemaError",
    "ValidationError",
    "EstimatorError",
]


def evaluate_fairness(data, **kwargs):
    """Split, score, train classifiers, and report fairness by risk partition."""
    return json.loads(_native.evaluate_fairness_json(data, **kwargs))


def mitigate(data, strategy, **kwargs):
    """Apply a risk-guided mitigation and return paired fairness reports."""
    return json.loads(_native.mitigate_json(data, strategy, **kwargs))


def simulate_bias(**kwargs):
    """Estimator bias comparison on the synthetic benchmark generator."""
    return json.loads(_native.simulate_bias_json(**kwargs))
