"""Predicting deferred representations from page features."""
from .features import DOM_ONLY, FEATURE_NAMES, FULL, FeatureVector, extract_features
from .metrics import DEFERRED, NON_DEFERRED, ConfusionMatrix, Evaluation, summarize
from .model import (
    CrossValidation,
    EnsembleModel,
    Hyperparams,
    LabeledExample,
    cross_validate,
    evaluate,
    predict,
    predict_many,
    read_examples,
    stratified_folds,
    train,
    write_examples,
)

__all__ = [
    "DOM_ONLY", "FEATURE_NAMES", "FULL", "FeatureVector", "extract_features", "DEFERRED",
    "NON_DEFERRED", "ConfusionMatrix", "Evaluation", "summarize", "CrossValidation",
    "EnsembleModel", "Hyperparams", "LabeledExample", "cross_validate", "evaluate", "predict",
    "predict_many", "read_examples", "stratified_folds", "train", "write_examples",
]
