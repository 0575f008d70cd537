"""Incremental IMF-count evaluation and feature-group subset search.

An *evaluator* here is any callable ``(X, y) -> float`` returning a CV
score; :func:`cv_evaluator` builds one from the learning harness.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import ValidationError
from ..learn.cv import stratified_kfold
from ..learn.harness import Evaluator, cross_validate
from ..learn.metrics import majority_baseline
from .featuresets import FeatureMatrix

ScoreFn = Callable[[np.ndarray, np.ndarray], float]

MAX_EXHAUSTIVE_GROUPS = 12


def cv_evaluator(kind: str = "random_forest", params: dict | None = None, k: int = 5, seed: int = 0, metric: str = "ca") -> ScoreFn:
    """Mean fold accuracy (``metric="ca"``) or weighted F1 (``"f1"``) of one classifier."""
    if params is None:
        params = {"k": 3} if kind == "knn" else {"n_estimators": 100, "depth": 10}
    if metric not in ("ca", "f1"):
        raise ValidationError("metric must be 'ca' or 'f1'")
    ev = Evaluator(kind, dict(params), seed)

    def score(X, y):
        res = cross_validate(X, y, stratified_kfold(y, k, seed), ev)
        return res.mean_ca if metric == "ca" else res.mean_f1

    return score


def _imf_number(band: str) -> int | None:
    return int(band[3:]) if band.startswith("imf") and band[3:].isdigit() else None


@dataclass(frozen=True)
class ImfCountReport:
    counts: tuple
    scores: tuple
    baseline: float

    @property
    def best_count(self) -> int:
        # first maximum, i.e. fewest IMFs among equal scores
        return self.counts[int(np.argmax(self.scores))]

    def to_dict(self) -> dict:
        return {"counts": list(self.counts), "scores": list(self.scores), "best_count": self.best_count, "majority_baseline": self.baseline}


def incremental_imf_eval(matrix: FeatureMatrix, labels, evaluator: ScoreFn, max_imfs: int = 10) -> ImfCountReport:
    """Score IMF prefixes {1}, {1,2}, ..., {1..max_imfs}.

    ``matrix`` must carry IMF-tagged columns (band slot ``imfK``), e.g. set D
    built with ``imf1..imf10``. With a single label class every prefix scores
    the majority baseline without calling the evaluator.
    """
    y = np.asarray(labels, dtype=np.int64)
    nums = np.array([_imf_number(b) or 0 for _, b, _ in matrix.columns])
    available = sorted(set(nums[nums > 0].tolist()))
    if not available:
        raise ValidationError("matrix has no IMF-tagged columns")
    counts = tuple(c for c in range(1, max_imfs + 1) if c <= max(available))
    base = majority_baseline(y)
    if np.unique(y).size < 2:
        return ImfCountReport(counts, tuple(base for _ in counts), base)
    scores = tuple(float(evaluator(matrix.values[:, (nums > 0) & (nums <= c)], y)) for c in counts)
    return ImfCountReport(counts, scores, base)


def feature_groups(matrix: FeatureMatrix, by: str = "feature") -> dict[str, np.ndarray]:
    """Column indices grouped by the feature, band or channel tag."""
    slot = {"feature": 0, "band": 1, "channel": 2}.get(by)
    if slot is None:
        raise ValidationError("group by 'feature', 'band' or 'channel'")
    groups: dict[str, list] = {}
    for i, tag in enumerate(matrix.columns):
        groups.setdefault(tag[slot], []).append(i)
    return {k: np.asarray(v) for k, v in groups.items()}


@dataclass(frozen=True)
class SubsetReport:
    mode: str
    scored: tuple  # (subset names, score) in evaluation order
    selected: tuple
    selected_score: float
    best_score: float
    baseline: float
    margin: float

    @property
    def informative(self) -> bool:
        """False when nothing beats the majority baseline by more than the margin."""
        return self.best_score > self.baseline + self.margin

    @property
    def near_best(self) -> list:
        """Subsets within ``margin`` of the best, smallest first."""
        ok = [(s, v) for s, v in self.scored if v >= self.best_score - self.margin]
        return sorted(ok, key=lambda sv: (len(sv[0]), -sv[1]))

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "selected": list(self.selected),
            "selected_score": self.selected_score,
            "best_score": self.best_score,
            "majority_baseline": self.baseline,
            "margin": self.margin,
            "informative": self.informative,
            "scored": [{"subset": list(s), "score": v} for s, v in self.scored],
        }


def _pick(scored, margin):
    best = max(v for _, v in scored)
    s, v = min(((s, v) for s, v in scored if v >= best - margin), key=lambda sv: (len(sv[0]), -sv[1]))
    return s, v, best


def subset_search(
    matrix: FeatureMatrix | np.ndarray,
    labels,
    groups: Mapping[str, Sequence[int]],
    evaluator: ScoreFn,
    margin: float = 0.005,
    mode: str = "exhaustive",
) -> SubsetReport:
    """Score feature-group subsets and keep the smallest one near the top.

    ``mode="exhaustive"`` enumerates all non-empty subsets (at most 12
    groups); ``mode="greedy"`` does forward selection, adding the best
    group while the score strictly improves.
    """
    X = np.asarray(getattr(matrix, "values", matrix), dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    names = list(groups)
    if not names:
        raise ValidationError("no feature groups given")
    if margin < 0:
        raise ValidationError("margin must be non-negative")

    def score(subset):
        cols = np.concatenate([np.asarray(groups[g], dtype=np.intp) for g in subset])
        return float(evaluator(X[:, cols], y))

    if mode == "exhaustive":
        if len(names) > MAX_EXHAUSTIVE_GROUPS:
            raise ValidationError(
                f"{len(names)} groups exceed the exhaustive limit of {MAX_EXHAUSTIVE_GROUPS}; use mode='greedy'"
            )
        subsets = [c for r in range(1, len(names) + 1) for c in itertools.combinations(names, r)]
        scored = tuple((s, score(s)) for s in subsets)
    elif mode == "greedy":
        chosen: tuple = ()
        current = -np.inf
        scored_l = []
        remaining = list(names)
        while remaining:
            trials = [(chosen + (g,), score(chosen + (g,))) for g in remaining]
            scored_l.extend(trials)
            cand, val = max(trials, key=lambda sv: sv[1])  # first maximum in group order
            if val <= current:
                break
            chosen, current = cand, val
            remaining.remove(cand[-1])
        scored = tuple(scored_l)
    else:
        raise ValidationError("mode must be 'exhaustive' or 'greedy'")
    sel, sel_v, best = _pick(scored, margin)
    return SubsetReport(mode, scored, sel, sel_v, best, majority_baseline(y), margin)
