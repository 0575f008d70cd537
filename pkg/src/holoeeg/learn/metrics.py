"""Weighted F1 and classification accuracy for the binary low/high task."""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError


def predict_labels(posteriors) -> np.ndarray:
    """Argmax over ``(p_low, p_high)`` rows; exact ties go to high (1)."""
    p = np.asarray(posteriors, dtype=np.float64)
    return (p[:, 1] >= p[:, 0]).astype(np.int64)


def _as_labels(pred) -> np.ndarray:
    a = np.asarray(pred)
    if a.ndim == 2:
        return predict_labels(a)
    return a.astype(np.int64)


def f1_per_class(y_pred, y_true, n_classes: int = 2) -> np.ndarray:
    out = np.zeros(n_classes)
    for c in range(n_classes):
        tp = np.sum((y_pred == c) & (y_true == c))
        fp = np.sum((y_pred == c) & (y_true != c))
        fn = np.sum((y_pred != c) & (y_true == c))
        denom = 2 * tp + fp + fn
        out[c] = 2 * tp / denom if denom else 0.0
    return out


def metrics(pred, y_true) -> tuple[float, float]:
    """``(weighted_f1, accuracy)`` from predicted labels or posteriors.

    Per-class F1 is weighted by each class's share of the true labels.
    """
    y_pred = _as_labels(pred)
    y_true = np.asarray(y_true, dtype=np.int64)
    if y_true.size == 0:
        raise ValidationError("metrics of an empty prediction set")
    if y_pred.shape != y_true.shape:
        raise ValidationError(f"{y_pred.size} predictions for {y_true.size} labels")
    support = np.bincount(y_true, minlength=2) / y_true.size
    f1 = float(np.dot(support, f1_per_class(y_pred, y_true)))
    acc = float(np.mean(y_pred == y_true))
    return f1, acc


def majority_baseline(y_true) -> float:
    """Accuracy of always predicting the most frequent class."""
    y = np.asarray(y_true, dtype=np.int64)
    if y.size == 0:
        raise ValidationError("empty label vector")
    return float(np.bincount(y).max() / y.size)
