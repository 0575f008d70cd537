"""Brute-force K-nearest-neighbour classifier with class-weighted votes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError

_CHUNK = 256


def _check_xy(train, labels, test):
    train = np.asarray(train, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if train.ndim != 2 or test.ndim != 2:
        raise ValidationError("train and test must be 2-D (samples x features)")
    if train.shape[0] == 0:
        raise ValidationError("empty training set")
    if train.shape[1] != test.shape[1]:
        raise ValidationError(f"feature dimension mismatch: train {train.shape[1]}, test {test.shape[1]}")
    if y.shape != (train.shape[0],):
        raise ValidationError("one label per training row required")
    return train, y, test


def neighbours(train: np.ndarray, test: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` nearest training rows per test row.

    Distances are squared differences summed directly (no Gram expansion);
    equal distances keep the lower training index.
    """
    out = np.empty((test.shape[0], k), dtype=np.intp)
    for s in range(0, test.shape[0], _CHUNK):
        q = test[s : s + _CHUNK]
        d2 = ((q[:, None, :] - train[None, :, :]) ** 2).sum(axis=2)
        out[s : s + _CHUNK] = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return out


def knn_fit_predict(train, labels, test, k: int = 3, weights=None) -> np.ndarray:
    """Posterior ``(p_low, p_high)`` per test row.

    Each neighbour votes with its class weight (1.0 per class by default),
    so the posterior is the weighted vote fraction. Features are used as
    given; standardize beforehand.
    """
    train, y, test = _check_xy(train, labels, test)
    if not 1 <= k <= train.shape[0]:
        raise ValidationError(f"K={k} must lie in [1, {train.shape[0]}] (training set size)")
    w = np.ones(2) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (2,) or np.any(w < 0) or not np.any(w > 0):
        raise ValidationError("class weights must be two non-negative numbers, not both zero")
    nb_labels = y[neighbours(train, test, k)]
    votes = np.stack([(nb_labels == c).sum(axis=1) * w[c] for c in (0, 1)], axis=1)
    total = votes.sum(axis=1, keepdims=True)
    # a neighbourhood made only of zero-weight classes has no opinion
    return np.where(total > 0, votes / np.where(total > 0, total, 1.0), 0.5)


@dataclass(frozen=True)
class KNNModel:
    """Fitted KNN: the training set itself plus vote weights."""

    train: np.ndarray
    labels: np.ndarray
    k: int = 3
    weights: np.ndarray = field(default_factory=lambda: np.ones(2))
    kind: str = "knn"

    def predict_proba(self, test) -> np.ndarray:
        return knn_fit_predict(self.train, self.labels, test, self.k, self.weights)

    @property
    def hyperparameters(self) -> dict:
        return {"k": self.k}
