"""Fairness-aware evaluation and protocol partitioning for affect analysis."""

import json as _json

from ._core import (
    Dataset,
    FairAffectError,
    PredictionSet,
    SynthSpec,
    ccc,
    format_percent,
    generate_dataset,
    generate_predictions,
    intensity_to_activation,
    load_annotations,
    load_manifest,
    load_predictions,
    macro_f1,
    partition,
    select_split,
    validate_partition,
    va_region,
    write_manifest,
)
from ._core import evaluate_json as _evaluate_json

__all__ = [
    "Dataset",
    "FairAffectError",
    "PredictionSet",
    "SynthSpec",
    "ccc",
    "evaluate",
    "format_percent",
    "generate_dataset",
    "generate_predictions",
    "intensity_to_activation",
    "load_annotations",
    "load_manifest",
    "load_predictions",
    "macro_f1",
    "partition",
    "select_split",
    "validate_partition",
    "va_region",
    "write_manifest",
]


def evaluate(dataset, predictions, model="model"):
    """Run the full metric suite; returns the report as a nested dict."""
    return _json.loads(_evaluate_json(dataset, predictions, model))
