"""Cross-validation, grid search and CV reports.

Standardization is fit on each training fold only. Every grid point is
scored on the same folds; the winner has the highest mean weighted F1, with
ties going to fewer estimators, then smaller depth (smaller K for KNN).
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import ValidationError
from .cv import CVFolds, class_weights, stratified_kfold
from .forest import rf_fit, rf_predict
from .knn import knn_fit_predict
from .metrics import majority_baseline, metrics

REPORT_SCHEMA_ID = "holoeeg-cv-report/1"

DEFAULT_RF_GRID = {"n_estimators": tuple(range(50, 301, 50)), "depth": tuple(range(6, 19, 2))}
DEFAULT_KNN_GRID = {"k": (3, 5, 8)}
# order of tie-break keys after the score
_TIE_KEYS = {"random_forest": ("n_estimators", "depth"), "knn": ("k",)}

FitPredict = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def standardize(train: np.ndarray, test: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """z-score both sets with the training mean and std; constant columns keep std 1."""
    mu = train.mean(axis=0)
    sd = train.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return (train - mu) / sd, (test - mu) / sd


def default_grid(kind: str) -> dict:
    if kind == "random_forest":
        return dict(DEFAULT_RF_GRID)
    if kind == "knn":
        return dict(DEFAULT_KNN_GRID)
    raise ValidationError(f"unknown classifier {kind!r}; choose knn or random_forest")


def grid_points(kind: str, grid: dict | None = None) -> list[dict]:
    grid = default_grid(kind) if grid is None else grid
    keys = _TIE_KEYS.get(kind)
    if keys is None:
        raise ValidationError(f"unknown classifier {kind!r}; choose knn or random_forest")
    if set(grid) != set(keys):
        raise ValidationError(f"{kind} grid needs exactly the keys {keys}, got {sorted(grid)}")
    values = [sorted({int(v) for v in grid[k]}) for k in keys]
    if any(len(v) == 0 for v in values):
        raise ValidationError("empty hyperparameter grid")
    return [dict(zip(keys, combo)) for combo in itertools.product(*values)]


@dataclass(frozen=True)
class Evaluator:
    """Picklable fit-and-predict callable for one classifier setting."""

    kind: str
    params: dict
    seed: int = 0
    class_weighted: bool = True
    n_jobs: int = 1

    def __call__(self, X_train, y_train, X_test) -> np.ndarray:
        w = class_weights(y_train) if self.class_weighted else None
        Xtr, Xte = standardize(np.asarray(X_train, float), np.asarray(X_test, float))
        if self.kind == "knn":
            return knn_fit_predict(Xtr, y_train, Xte, self.params["k"], w)
        if self.kind == "random_forest":
            model = rf_fit(Xtr, y_train, self.params["n_estimators"], self.params["depth"], w, self.seed, self.n_jobs)
            return rf_predict(model, Xte)
        raise ValidationError(f"unknown classifier {self.kind!r}")


@dataclass(frozen=True)
class CVResult:
    fold_f1: tuple
    fold_ca: tuple
    fold_sizes: tuple
    posteriors: np.ndarray  # out-of-fold, in input row order

    @property
    def mean_f1(self) -> float:
        return float(np.mean(self.fold_f1))

    @property
    def mean_ca(self) -> float:
        return float(np.mean(self.fold_ca))

    def to_dict(self) -> dict:
        return {
            "mean_f1": self.mean_f1,
            "mean_ca": self.mean_ca,
            "folds": [
                {"fold": i, "n_test": n, "f1": f, "ca": c}
                for i, (n, f, c) in enumerate(zip(self.fold_sizes, self.fold_f1, self.fold_ca))
            ],
        }


def cross_validate(X, y, folds: CVFolds, fit_predict: FitPredict) -> CVResult:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    post = np.full((y.size, 2), np.nan)
    f1s, cas, sizes = [], [], []
    for train_idx, test_idx in folds.splits():
        p = fit_predict(X[train_idx], y[train_idx], X[test_idx])
        post[test_idx] = p
        f1, ca = metrics(p, y[test_idx])
        f1s.append(f1)
        cas.append(ca)
        sizes.append(int(test_idx.size))
    return CVResult(tuple(f1s), tuple(cas), tuple(sizes), post)


@dataclass(frozen=True)
class GridPoint:
    params: dict
    result: CVResult | None
    error: str | None = None

    def to_dict(self) -> dict:
        d = {"params": self.params}
        if self.result is None:
            d.update(mean_f1=None, mean_ca=None, error=self.error)
        else:
            d.update(mean_f1=self.result.mean_f1, mean_ca=self.result.mean_ca, error=None)
        return d


@dataclass(frozen=True)
class GridResult:
    kind: str
    best: GridPoint
    points: tuple
    folds: CVFolds
    labels: np.ndarray = field(repr=False)

    @property
    def n_evaluations(self) -> int:
        return len(self.points)

    def report(self, **extra) -> dict:
        """CV report ready for JSON serialization."""
        y = self.labels
        rep = {
            "schema": REPORT_SCHEMA_ID,
            "classifier": self.kind,
            "k": self.folds.k,
            "seeds": {"cv": self.folds.seed},
            "n_trials": int(y.size),
            "class_counts": {"low": int(np.sum(y == 0)), "high": int(np.sum(y == 1))},
            "majority_baseline": majority_baseline(y),
            "best": {"params": self.best.params, **self.best.result.to_dict()},
            "grid": [p.to_dict() for p in self.points],
        }
        rep.update(extra)
        return rep


def _evaluate_point(X, y, folds, evaluator: Evaluator) -> GridPoint:
    try:
        return GridPoint(evaluator.params, cross_validate(X, y, folds, evaluator))
    except (ValidationError, ValueError, np.linalg.LinAlgError) as exc:
        return GridPoint(evaluator.params, None, f"{type(exc).__name__}: {exc}")


def select_best(kind: str, points) -> GridPoint:
    ok = [p for p in points if p.result is not None]
    if not ok:
        raise ValidationError("every grid point failed: " + "; ".join(f"{p.params}: {p.error}" for p in points))
    keys = _TIE_KEYS[kind]
    return min(ok, key=lambda p: (-p.result.mean_f1, *(p.params[k] for k in keys)))


def grid_search(
    X,
    y,
    kind: str = "random_forest",
    grid: dict | None = None,
    k: int = 5,
    seed: int = 0,
    n_jobs: int = 1,
    class_weighted: bool = True,
    model_seed: int | None = None,
) -> GridResult:
    """Score every grid point with stratified k-fold CV on identical folds.

    A point whose fit fails is recorded with its error and skipped; the
    search only fails when every point does.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValidationError("feature matrix rows must match the label count")
    folds = stratified_kfold(y, k, seed)
    ms = seed if model_seed is None else model_seed
    evaluators = [Evaluator(kind, p, ms, class_weighted) for p in grid_points(kind, grid)]
    if n_jobs > 1 and len(evaluators) > 1:
        with ProcessPoolExecutor(min(n_jobs, len(evaluators))) as ex:
            points = tuple(ex.map(_evaluate_point, *zip(*[(X, y, folds, e) for e in evaluators])))
    else:
        points = tuple(_evaluate_point(X, y, folds, e) for e in evaluators)
    return GridResult(kind, select_best(kind, points), points, folds, y)
