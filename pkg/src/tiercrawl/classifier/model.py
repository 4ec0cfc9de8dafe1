"""A bagged, random-subspace decision-tree ensemble with JSON persistence.

Each tree is fit (CART, Gini impurity) on a bootstrap sample restricted to a
random subset of the in-mode features.  A tree votes Deferred when its leaf
holds a Deferred majority; the ensemble's confidence is the fraction of
Deferred votes.  Prediction walks the exported node arrays directly, so a
saved model needs nothing but numpy to run.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.tree import DecisionTreeClassifier

from ..errors import DegenerateTrainingSet, ModeMismatch, TooFewExamples
from ..uri_norm import NormalizedUri, parse
from .features import DOM_ONLY, FEATURE_MODES, FEATURE_NAMES, FULL, N_DOM_FEATURES, FeatureVector
from .metrics import DEFERRED, LABELS, NON_DEFERRED, ConfusionMatrix, Evaluation, summarize

MODEL_FORMAT = "tiercrawl-ensemble"
MODEL_VERSION = 1
_LEAF = -1


@dataclass(frozen=True)
class LabeledExample:
    uri: NormalizedUri
    features: FeatureVector
    label: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")

    def to_json(self) -> dict:
        return {"uri": str(self.uri), "features": self.features.to_json(), "label": self.label}

    @classmethod
    def from_json(cls, obj: dict) -> "LabeledExample":
        return cls(parse(obj["uri"]), FeatureVector.from_json(obj["features"]), obj["label"])


def write_examples(examples: Sequence[LabeledExample], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.to_json(), sort_keys=True) + "\n")


def read_examples(path) -> List[LabeledExample]:
    with open(path, encoding="utf-8") as fh:
        return [LabeledExample.from_json(json.loads(line)) for line in fh if line.strip()]


@dataclass(frozen=True)
class Hyperparams:
    n_trees: int = 60
    max_depth: Optional[int] = 6
    min_samples_leaf: int = 2
    subspace: float = 0.75  # fraction of in-mode features each tree sees

    def to_json(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "subspace": self.subspace,
        }


@dataclass
class Tree:
    """Flat node arrays; ``feature`` is -1 at leaves, ``deferred`` is the leaf vote."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    deferred: np.ndarray

    def vote(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=int)
        active = self.feature[node] != _LEAF
        while active.any():
            idx = np.nonzero(active)[0]
            n = node[idx]
            go_left = X[idx, self.feature[n]] <= self.threshold[n]
            node[idx] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] != _LEAF
        return self.deferred[node]

    def features_used(self) -> set:
        return {int(f) for f in self.feature if f != _LEAF}

    def to_json(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "deferred": self.deferred.astype(int).tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Tree":
        return cls(
            np.asarray(obj["feature"], dtype=int),
            np.asarray(obj["threshold"], dtype=float),
            np.asarray(obj["left"], dtype=int),
            np.asarray(obj["right"], dtype=int),
            np.asarray(obj["deferred"], dtype=bool),
        )

    @classmethod
    def from_fitted(cls, fitted: DecisionTreeClassifier, columns: Sequence[int], deferred_col: int) -> "Tree":
        t = fitted.tree_
        columns = np.asarray(columns, dtype=int)
        feature = np.where(t.feature >= 0, columns[np.clip(t.feature, 0, None)], _LEAF)
        counts = t.value[:, 0, :]
        deferred = counts[:, deferred_col] > counts.sum(axis=1) / 2 if deferred_col >= 0 else np.zeros(len(counts), bool)
        return cls(
            feature.astype(int),
            t.threshold.astype(float),
            t.children_left.astype(int),
            t.children_right.astype(int),
            deferred,
        )


@dataclass
class EnsembleModel:
    trees: List[Tree]
    feature_mode: str
    seed: int
    vote_threshold: float = 0.5
    hyperparams: Hyperparams = field(default_factory=Hyperparams)

    def __post_init__(self):
        if not self.trees:
            raise ValueError("an ensemble needs at least one tree")
        if self.feature_mode not in FEATURE_MODES:
            raise ValueError(f"unknown feature mode {self.feature_mode!r}")
        allowed = set(range(_n_features(self.feature_mode)))
        for tree in self.trees:
            if not tree.features_used() <= allowed:
                raise ValueError("a tree splits on a feature outside the model's mode")

    def confidence(self, X: np.ndarray) -> np.ndarray:
        votes = np.zeros(len(X))
        for tree in self.trees:
            votes += tree.vote(X)
        return votes / len(self.trees)

    def to_json(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "feature_mode": self.feature_mode,
            "feature_names": list(FEATURE_NAMES[: _n_features(self.feature_mode)]),
            "seed": self.seed,
            "vote_threshold": self.vote_threshold,
            "hyperparams": self.hyperparams.to_json(),
            "trees": [t.to_json() for t in self.trees],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EnsembleModel":
        if obj.get("format") != MODEL_FORMAT or obj.get("version") != MODEL_VERSION:
            raise ValueError("not a supported model file")
        return cls(
            [Tree.from_json(t) for t in obj["trees"]],
            obj["feature_mode"],
            obj["seed"],
            obj["vote_threshold"],
            Hyperparams(**obj["hyperparams"]),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "EnsembleModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def _n_features(mode: str) -> int:
    return N_DOM_FEATURES if mode == DOM_ONLY else len(FEATURE_NAMES)


def _matrix(features: Sequence[FeatureVector], mode: str) -> np.ndarray:
    X = np.asarray([f.values() for f in features], dtype=float).reshape(len(features), len(FEATURE_NAMES))
    return X[:, : _n_features(mode)]


def train(
    examples: Sequence[LabeledExample],
    feature_mode: str = DOM_ONLY,
    hyperparams: Optional[Hyperparams] = None,
    seed: int = 0,
    vote_threshold: float = 0.5,
) -> EnsembleModel:
    """Fit an ensemble; identical inputs and seed give an identical model."""
    if feature_mode not in FEATURE_MODES:
        raise ValueError(f"unknown feature mode {feature_mode!r}")
    hp = hyperparams or Hyperparams()
    labels = {ex.label for ex in examples}
    if len(labels) < 2:
        raise DegenerateTrainingSet(f"training data has a single label: {sorted(labels)}")
    if feature_mode == FULL and any(ex.features.mode == DOM_ONLY for ex in examples):
        raise ModeMismatch("a full-mode model needs full-mode feature vectors")
    X = _matrix([ex.features for ex in examples], feature_mode)
    y = np.asarray([ex.label == DEFERRED for ex in examples], dtype=int)
    rng = np.random.default_rng(seed)
    n, d = X.shape
    k = max(1, math.ceil(hp.subspace * d))
    trees = []
    for _ in range(hp.n_trees):
        rows = rng.integers(0, n, size=n)
        cols = np.sort(rng.choice(d, size=k, replace=False))
        fitted = DecisionTreeClassifier(
            max_depth=hp.max_depth,
            min_samples_leaf=hp.min_samples_leaf,
            random_state=int(rng.integers(0, 2**31 - 1)),
        ).fit(X[np.ix_(rows, cols)], y[rows])
        classes = list(fitted.classes_)
        trees.append(Tree.from_fitted(fitted, cols, classes.index(1) if 1 in classes else -1))
    return EnsembleModel(trees, feature_mode, seed, vote_threshold, hp)


def _check_mode(model: EnsembleModel, features: FeatureVector):
    if model.feature_mode == FULL and features.mode == DOM_ONLY:
        raise ModeMismatch("full-mode model given a dom_only feature vector")


def predict(model: EnsembleModel, features: FeatureVector) -> Tuple[str, float]:
    """(label, confidence); Deferred iff the Deferred vote fraction reaches the threshold."""
    _check_mode(model, features)
    conf = float(model.confidence(_matrix([features], model.feature_mode))[0])
    return (DEFERRED if conf >= model.vote_threshold else NON_DEFERRED), conf


def predict_many(model: EnsembleModel, features: Sequence[FeatureVector]) -> List[str]:
    for f in features:
        _check_mode(model, f)
    conf = model.confidence(_matrix(list(features), model.feature_mode))
    return [DEFERRED if c >= model.vote_threshold else NON_DEFERRED for c in conf]


def evaluate(model: EnsembleModel, test: Sequence[LabeledExample]) -> Evaluation:
    if not test:
        raise TooFewExamples("cannot evaluate on an empty test set")
    predicted = predict_many(model, [ex.features for ex in test])
    return summarize(ConfusionMatrix.from_pairs([ex.label for ex in test], predicted))


@dataclass(frozen=True)
class CrossValidation:
    folds: List[int]  # fold index per example, in input order
    fold_matrices: List[ConfusionMatrix]
    aggregate: Evaluation

    def to_json(self) -> dict:
        return {
            "folds": len(self.fold_matrices),
            "fold_confusion_matrices": [m.to_json() for m in self.fold_matrices],
            "aggregate": self.aggregate.to_json(),
        }


def stratified_folds(labels: Sequence[str], folds: int, seed: int) -> List[int]:
    """Fold index for each example; each label is dealt round-robin after a seeded shuffle."""
    rng = np.random.default_rng(seed)
    assignment = [0] * len(labels)
    offset = 0
    for label in sorted(set(labels)):
        idx = [i for i, lab in enumerate(labels) if lab == label]
        idx = [idx[j] for j in rng.permutation(len(idx))]
        for pos, i in enumerate(idx):
            assignment[i] = (offset + pos) % folds
        offset += len(idx)
    return assignment


def cross_validate(
    examples: Sequence[LabeledExample],
    folds: int = 10,
    feature_mode: str = DOM_ONLY,
    seed: int = 0,
    hyperparams: Optional[Hyperparams] = None,
) -> CrossValidation:
    """Stratified k-fold cross-validation; fold confusion counts are summed."""
    if folds < 2:
        raise ValueError("cross-validation needs at least two folds")
    if len(examples) < folds:
        raise TooFewExamples(f"{len(examples)} examples cannot fill {folds} folds")
    assignment = stratified_folds([ex.label for ex in examples], folds, seed)
    matrices = []
    for k in range(folds):
        train_set = [ex for ex, f in zip(examples, assignment) if f != k]
        test_set = [ex for ex, f in zip(examples, assignment) if f == k]
        if not test_set:
            continue
        model = train(train_set, feature_mode, hyperparams, seed + k)
        predicted = predict_many(model, [ex.features for ex in test_set])
        matrices.append(ConfusionMatrix.from_pairs([ex.label for ex in test_set], predicted))
    total = ConfusionMatrix(0, 0, 0, 0)
    for m in matrices:
        total = total + m
    return CrossValidation(assignment, matrices, summarize(total))
