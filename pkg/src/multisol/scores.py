"""Classification scores over one-vs-rest confusion matrices."""

from __future__ import annotations

from enum import Enum

import numpy as np

GRAD_EPS = 1e-12


class ScoreKind(str, Enum):
    ACCURACY = "accuracy"
    PRECISION = "precision"
    RECALL = "recall"
    F1 = "f1"

    @classmethod
    def parse(cls, kind) -> "ScoreKind":
        if isinstance(kind, cls):
            return kind
        try:
            return cls(str(kind).lower())
        except ValueError:
            raise ValueError(f"unknown score {kind!r}; choose from {[k.value for k in cls]}") from None


def _fraction(kind: ScoreKind, tn, fp, fn, tp):
    if kind is ScoreKind.ACCURACY:
        return tp + tn, tp + tn + fp + fn
    if kind is ScoreKind.PRECISION:
        return tp, tp + fp
    if kind is ScoreKind.RECALL:
        return tp, tp + fn
    return 2.0 * tp, 2.0 * tp + fp + fn


def score_terms(kind, tn, fp, fn, tp, eps: float = GRAD_EPS):
    """Score with an ``eps``-guarded denominator.

    Works elementwise on floats, arrays or tape tensors; this is the form used
    inside losses so gradients stay finite when a class is absent.
    """
    num, den = _fraction(ScoreKind.parse(kind), tn, fp, fn, tp)
    return num / (den + eps)


def score(kind, cm) -> float:
    """Evaluate a score on a (hard or soft) confusion matrix; 0/0 evaluates to 0."""
    if cm.total <= 0:
        raise ValueError("score of an empty confusion matrix")
    num, den = _fraction(ScoreKind.parse(kind), float(cm.tn), float(cm.fp), float(cm.fn), float(cm.tp))
    return num / den if den > 0 else 0.0


def per_class_scores(kind, cms) -> np.ndarray:
    return np.array([score(kind, cm) for cm in cms])


def macro_score(kind, cms) -> float:
    if len(cms) == 0:
        raise ValueError("macro score of an empty list")
    return float(np.mean(per_class_scores(kind, cms)))
