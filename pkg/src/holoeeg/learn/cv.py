"""Stratified k-fold splitting and class weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True)
class CVFolds:
    folds: tuple  # k arrays of test indices
    seed: int

    @property
    def k(self) -> int:
        return len(self.folds)

    def splits(self):
        """Yield ``(train_idx, test_idx)`` pairs."""
        n = sum(f.size for f in self.folds)
        for f in self.folds:
            mask = np.ones(n, dtype=bool)
            mask[f] = False
            yield np.flatnonzero(mask), f


def stratified_kfold(labels, k: int = 5, seed: int = 0) -> CVFolds:
    """Shuffle each class, then deal its members round-robin over the folds.

    Each class continues dealing where the previous one stopped, which keeps
    total fold sizes within one of each other as well.
    """
    y = np.asarray(labels)
    if k < 2:
        raise ValidationError("k must be at least 2")
    rng = np.random.default_rng(seed)
    assignment = np.empty(y.size, dtype=np.intp)
    offset = 0
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        if members.size < k:
            raise ValidationError(f"class {c!r} has {members.size} members, fewer than k={k}")
        members = rng.permutation(members)
        assignment[members] = (offset + np.arange(members.size)) % k
        offset = (offset + members.size) % k
    return CVFolds(tuple(np.flatnonzero(assignment == f) for f in range(k)), seed)


def class_weights(labels, n_classes: int = 2) -> np.ndarray:
    """Balanced weights ``n_total / (n_classes * n_c)``; absent classes get 0."""
    y = np.asarray(labels)
    counts = np.bincount(y, minlength=n_classes).astype(np.float64)
    w = np.zeros(n_classes)
    present = counts > 0
    w[present] = y.size / (n_classes * counts[present])
    return w
