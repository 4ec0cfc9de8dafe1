"""Confusion matrices and the accuracy / precision / recall / F-measure formulas."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

from ..errors import UndefinedMetric

DEFERRED = "Deferred"
NON_DEFERRED = "NonDeferred"
LABELS = (DEFERRED, NON_DEFERRED)


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with Deferred as the positive class."""

    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fn, self.fp, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fn + other.fn, self.fp + other.fp, self.tn + other.tn)

    def swapped(self) -> "ConfusionMatrix":
        """The same counts with NonDeferred as the positive class."""
        return ConfusionMatrix(self.tn, self.fp, self.fn, self.tp)

    def accuracy(self) -> float:
        if self.total == 0:
            raise UndefinedMetric("accuracy of an empty matrix")
        return (self.tp + self.tn) / self.total

    def precision(self) -> float:
        if self.tp + self.fp == 0:
            raise UndefinedMetric("precision with no positive predictions")
        return self.tp / (self.tp + self.fp)

    def recall(self) -> float:
        if self.tp + self.fn == 0:
            raise UndefinedMetric("recall with no positive examples")
        return self.tp / (self.tp + self.fn)

    def f_measure(self) -> float:
        p, r = self.precision(), self.recall()
        if p + r == 0:
            raise UndefinedMetric("F-measure with zero precision and recall")
        return 2 * p * r / (p + r)

    def to_json(self) -> dict:
        return {"tp": self.tp, "fn": self.fn, "fp": self.fp, "tn": self.tn}

    @classmethod
    def from_pairs(cls, truth, predicted) -> "ConfusionMatrix":
        tp = fn = fp = tn = 0
        for t, p in zip(truth, predicted):
            if t == DEFERRED:
                tp, fn = (tp + 1, fn) if p == DEFERRED else (tp, fn + 1)
            else:
                fp, tn = (fp + 1, tn) if p == DEFERRED else (fp, tn + 1)
        return cls(tp, fn, fp, tn)


def _maybe(fn) -> Optional[float]:
    try:
        return fn()
    except UndefinedMetric:
        return None


@dataclass(frozen=True)
class ClassMetrics:
    precision: Optional[float]
    recall: Optional[float]
    f_measure: Optional[float]

    def to_json(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f_measure": self.f_measure}


@dataclass(frozen=True)
class Evaluation:
    matrix: ConfusionMatrix
    accuracy: Optional[float]
    per_class: Dict[str, ClassMetrics]

    def to_json(self) -> dict:
        return {
            "confusion_matrix": self.matrix.to_json(),
            "total": self.matrix.total,
            "accuracy": self.accuracy,
            "per_class": {k: v.to_json() for k, v in self.per_class.items()},
        }


def class_metrics(cm: ConfusionMatrix) -> ClassMetrics:
    return ClassMetrics(_maybe(cm.precision), _maybe(cm.recall), _maybe(cm.f_measure))


def summarize(cm: ConfusionMatrix) -> Evaluation:
    """All metrics of ``cm``; undefined ones are reported as None."""
    return Evaluation(
        cm,
        _maybe(cm.accuracy),
        {DEFERRED: class_metrics(cm), NON_DEFERRED: class_metrics(cm.swapped())},
    )
