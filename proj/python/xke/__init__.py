"""Python interface to the xke pipeline."""

import json

from ._xke import (
    Config,
    Error,
    UserError,
    build_pred_graph,
    extract_features,
    predict_proba,
    synth,
    train_embedding,
    train_explainer,
)
from . import _xke

__all__ = [
    "Config",
    "Error",
    "UserError",
    "build_pred_graph",
    "evaluate",
    "explain",
    "extract_features",
    "predict_proba",
    "run",
    "synth",
    "train_embedding",
    "train_explainer",
]


def evaluate(config):
    """Evaluate the trained explainers; returns the micro-averaged metrics."""
    return json.loads(_xke.evaluate_json(config))["micro"]


def run(config):
    """Run every pipeline stage; returns the micro-averaged metrics."""
    return json.loads(_xke.run_json(config))["micro"]


def explain(config, triples):
    """Explain each triple in a TSV file; returns one dict per line."""
    return [json.loads(line) for line in _xke.explain_json(config, str(triples))]
