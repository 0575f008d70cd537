"""Empirical mode decomposition by cubic-spline sifting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InsufficientExtremaError, TooShortError, ValidationError
from .signal import ExtremaIndex, SignalLike, count_zero_crossings, find_extrema, samples_of


@dataclass(frozen=True)
class SiftConfig:
    max_imfs: int = 10
    max_sift_iterations: int = 50
    sd_threshold: float = 0.2
    envelope_tolerance: float = 0.05

    def __post_init__(self):
        if self.max_imfs < 1 or self.max_sift_iterations < 1:
            raise ValidationError("max_imfs and max_sift_iterations must be positive")
        if not 0 < self.sd_threshold < 1:
            raise ValidationError("sd_threshold must lie in (0, 1)")
        if self.envelope_tolerance <= 0:
            raise ValidationError("envelope_tolerance must be positive")


@dataclass(frozen=True)
class Imf:
    samples: np.ndarray
    index: int
    iterations: int = 0

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class ImfDecomposition:
    imfs: list = field(default_factory=list)
    residue: np.ndarray = None
    source_length: int = 0

    @property
    def n_imfs(self) -> int:
        return len(self.imfs)

    def as_array(self) -> np.ndarray:
        """IMFs stacked into an (n_imfs, n_samples) array."""
        if not self.imfs:
            return np.zeros((0, self.source_length))
        return np.stack([imf.samples for imf in self.imfs])

    def reconstruct(self) -> np.ndarray:
        return self.as_array().sum(axis=0) + self.residue


def _mirrored_knots(pos: np.ndarray, vals: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    # reflect the two extrema nearest each end about the end sample
    left = -pos[:2][::-1]
    right = 2 * (n - 1) - pos[-2:][::-1]
    knots = np.concatenate((left, pos, right)).astype(np.float64)
    values = np.concatenate((vals[:2][::-1], vals, vals[-2:][::-1]))
    return knots, values


def envelopes(x: SignalLike, extrema: ExtremaIndex | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Upper and lower natural-cubic-spline envelopes."""
    v = samples_of(x)
    if extrema is None:
        extrema = find_extrema(v)
    if extrema.maxima.size < 2 or extrema.minima.size < 2:
        raise InsufficientExtremaError("insufficient extrema")
    n = v.size
    t = np.arange(n, dtype=np.float64)
    out = []
    for pos in (extrema.maxima, extrema.minima):
        knots, values = _mirrored_knots(pos, v[pos], n)
        out.append(CubicSpline(knots, values, bc_type="natural")(t))
    return out[0], out[1]


def envelope_mean(x: SignalLike, extrema: ExtremaIndex | None = None) -> np.ndarray:
    """Mean of the upper and lower envelopes, ``(upper + lower) / 2``."""
    upper, lower = envelopes(x, extrema)
    return 0.5 * (upper + lower)


def imf_condition_holds(h: np.ndarray, extrema: ExtremaIndex | None = None) -> bool:
    """Extrema count and zero-crossing count differ by at most one."""
    if extrema is None:
        extrema = find_extrema(h)
    return abs(extrema.count - count_zero_crossings(h)) <= 1


def envelope_mean_ratio(h: SignalLike) -> float:
    """RMS of the envelope mean relative to the RMS of ``h`` (0 means a perfect IMF)."""
    v = samples_of(h)
    rms = np.sqrt(np.mean(v**2))
    if rms == 0:
        return 0.0
    return float(np.sqrt(np.mean(envelope_mean(v) ** 2)) / rms)


def sift_imf(x: SignalLike, cfg: SiftConfig = SiftConfig(), index: int = 1) -> Imf:
    """Extract the highest-frequency oscillation left in ``x``.

    Iterates ``h <- h - envelope_mean(h)``. Stops once the Cauchy-type
    criterion ``sum((h_prev - h)**2) / sum(h_prev**2)`` drops below
    ``cfg.sd_threshold`` and ``h`` has matching extrema/zero-crossing counts,
    or after ``cfg.max_sift_iterations`` subtractions.

    Raises
    ------
    InsufficientExtremaError
        If ``h`` runs out of extrema; the caller should stop decomposing.
    """
    h = np.array(samples_of(x), dtype=np.float64)
    ext = find_extrema(h)
    it = 0
    while it < cfg.max_sift_iterations:
        m = envelope_mean(h, ext)
        denom = float(np.dot(h, h))
        h = h - m
        it += 1
        if denom == 0.0:
            break
        sd = float(np.dot(m, m)) / denom
        ext = find_extrema(h)
        if sd < cfg.sd_threshold and imf_condition_holds(h, ext):
            break
    h.setflags(write=False)
    return Imf(samples=h, index=index, iterations=it)


def decompose(x: SignalLike, cfg: SiftConfig = SiftConfig()) -> ImfDecomposition:
    """Split ``x`` into IMFs plus a residue with ``sum(imfs) + residue == x``.

    Stops when the running residue has fewer than two maxima or two minima,
    when sifting runs out of extrema, or after ``cfg.max_imfs`` IMFs.
    """
    v = np.asarray(samples_of(x), dtype=np.float64)
    if v.size < 3:
        raise TooShortError(f"need at least 3 samples to decompose, got {v.size}")
    residue = v.copy()
    imfs: list[Imf] = []
    while len(imfs) < cfg.max_imfs:
        ext = find_extrema(residue)
        if ext.maxima.size < 2 or ext.minima.size < 2:
            break
        try:
            imf = sift_imf(residue, cfg, index=len(imfs) + 1)
        except InsufficientExtremaError:
            break
        imfs.append(imf)
        residue = residue - imf.samples
    residue.setflags(write=False)
    return ImfDecomposition(imfs=imfs, residue=residue, source_length=v.size)
