"""Late fusion of class posteriors and the posterior CSV format."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import DatasetError, ValidationError

POSTERIOR_HEADER = ("trial_id", "p_low", "p_high")


@dataclass(frozen=True)
class PosteriorMatrix:
    trial_ids: tuple
    values: np.ndarray  # (n, 2)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] != len(self.trial_ids):
            raise ValidationError("posterior matrix must be (n_trials, 2)")
        if not np.all(np.isfinite(v)) or np.any(v < 0) or np.any(v > 1):
            raise ValidationError("posteriors must lie in [0, 1]")
        if np.any(np.abs(v.sum(axis=1) - 1.0) > 1e-9):
            raise ValidationError("posterior rows must sum to 1")
        if len(set(self.trial_ids)) != len(self.trial_ids):
            raise ValidationError("duplicate trial ids in posterior matrix")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "trial_ids", tuple(self.trial_ids))


def late_fusion(posteriors: Sequence, weights=None) -> np.ndarray:
    """Weighted arithmetic mean of posterior arrays, rows renormalized to 1."""
    mats = [np.asarray(getattr(p, "values", p), dtype=np.float64) for p in posteriors]
    if not mats:
        raise ValidationError("nothing to fuse")
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise ValidationError(f"posterior shapes differ: {[m.shape for m in mats]}")
    w = np.ones(len(mats)) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (len(mats),) or np.any(w < 0) or w.sum() <= 0:
        raise ValidationError("fusion weights must be non-negative, one per input, with positive sum")
    fused = np.tensordot(w / w.sum(), np.stack(mats), axes=1)
    return fused / fused.sum(axis=1, keepdims=True)


def fuse_matrices(mats: Sequence[PosteriorMatrix], weights=None) -> PosteriorMatrix:
    """Fuse posterior matrices after checking their trial ids agree."""
    ref = mats[0].trial_ids
    for i, m in enumerate(mats[1:], start=2):
        if m.trial_ids != ref:
            missing = sorted(set(ref) ^ set(m.trial_ids))
            detail = f"ids not in both: {missing[:10]}" if missing else "same ids in a different order"
            raise ValidationError(f"trial-id mismatch between input 1 and input {i}: {detail}")
    return PosteriorMatrix(ref, late_fusion(mats, weights))


def write_posteriors(pm: PosteriorMatrix, path, config_hash: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if config_hash is not None:
            fh.write(f"# config_hash: {config_hash}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(POSTERIOR_HEADER)
        for tid, (a, b) in zip(pm.trial_ids, pm.values):
            w.writerow([tid, repr(float(a)), repr(float(b))])


def read_posteriors(path) -> PosteriorMatrix:
    """Parse a posterior CSV; errors name the file and line number."""
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"{path}: no such posterior file")
    ids, rows = [], []
    header_seen = False
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.startswith("#") or not line.strip():
                continue
            fields = next(csv.reader([line]))
            if not header_seen:
                if tuple(f.strip() for f in fields) != POSTERIOR_HEADER:
                    raise ValidationError(f"{path}:{lineno}: expected header {','.join(POSTERIOR_HEADER)}")
                header_seen = True
                continue
            if len(fields) != 3:
                raise ValidationError(f"{path}:{lineno}: expected 3 fields, got {len(fields)}")
            try:
                a, b = float(fields[1]), float(fields[2])
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: non-numeric posterior") from None
            if not (np.isfinite(a) and np.isfinite(b) and 0 <= a <= 1 and 0 <= b <= 1 and abs(a + b - 1) <= 1e-9):
                raise ValidationError(f"{path}:{lineno}: posteriors must be in [0, 1] and sum to 1")
            ids.append(fields[0].strip())
            rows.append((a, b))
    if not header_seen:
        raise ValidationError(f"{path}: empty posterior file")
    if len(set(ids)) != len(ids):
        raise ValidationError(f"{path}: duplicate trial ids")
    return PosteriorMatrix(tuple(ids), np.asarray(rows, dtype=np.float64).reshape(-1, 2))
