"""Multilevel db4 DWT with half-sample symmetric borders, plus band energy/entropy.

Coefficient layout matches the common ``symmetric`` convention: a level
with ``n`` input samples produces ``(n + 7) // 2`` coefficients. All
transforms operate along the last axis, so a stack of windows can be
decomposed in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooShortError, ValidationError
from .signal import SignalLike, samples_of

# Daubechies 4-vanishing-moment scaling filter (reconstruction low-pass).
DB4_REC_LO = np.array(
    [
        0.2303778133088964,
        0.7148465705529154,
        0.6308807679298587,
        -0.0279837694168599,
        -0.1870348117190931,
        0.0308413818355607,
        0.0328830116668852,
        -0.0105974017850690,
    ]
)
DB4_DEC_LO = DB4_REC_LO[::-1].copy()
DB4_REC_HI = np.array([(-1) ** k * DB4_DEC_LO[k] for k in range(8)])
DB4_DEC_HI = DB4_REC_HI[::-1].copy()
FILTER_LEN = DB4_REC_LO.size

# nominal octave of each EEG band; the detail level holding it depends on fs
BAND_OCTAVES = {"theta": (4.0, 8.0), "alpha": (8.0, 16.0), "beta": (16.0, 32.0), "gamma": (32.0, 64.0)}


@dataclass(frozen=True)
class WaveletDecomposition:
    details: list  # D1..Dn, finest first
    approximation: np.ndarray
    source_length: int
    fs: float | None = None

    @property
    def levels(self) -> int:
        return len(self.details)


@dataclass(frozen=True)
class BandFeature:
    band: str
    energy: float
    entropy: float


def min_length(levels: int) -> int:
    return (FILTER_LEN - 1) * 2**levels


def _extend(x: np.ndarray) -> np.ndarray:
    p = FILTER_LEN - 1
    return np.concatenate((x[..., p - 1 :: -1], x, x[..., : -p - 1 : -1]), axis=-1)


def _filter_valid(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    # 'valid' convolution along the last axis, vectorized over leading axes
    m = x.shape[-1] - h.size + 1
    out = np.zeros(x.shape[:-1] + (m,))
    for j, tap in enumerate(h[::-1]):
        out += tap * x[..., j : j + m]
    return out


def dwt_step(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One analysis level: (approximation, detail)."""
    xe = _extend(np.asarray(x, dtype=np.float64))
    return _filter_valid(xe, DB4_DEC_LO)[..., 1::2], _filter_valid(xe, DB4_DEC_HI)[..., 1::2]


def idwt_step(a: np.ndarray, d: np.ndarray) -> np.ndarray:
    """One synthesis level; output has ``2 * n - 6`` samples for ``n`` coefficients."""
    n = a.shape[-1]
    up = np.zeros(a.shape[:-1] + (2 * n,))
    ud = np.zeros_like(up)
    up[..., ::2] = a
    ud[..., ::2] = d
    pad = [(0, 0)] * (up.ndim - 1) + [(FILTER_LEN - 1, FILTER_LEN - 1)]
    full = _filter_valid(np.pad(up, pad), DB4_REC_LO) + _filter_valid(np.pad(ud, pad), DB4_REC_HI)
    start = FILTER_LEN - 2
    return full[..., start : start + 2 * n - FILTER_LEN + 2]


def dwt_decompose(x: SignalLike, levels: int = 5, fs: float | None = None) -> WaveletDecomposition:
    """Cascade ``levels`` db4 analysis steps."""
    v = samples_of(x)
    if fs is None:
        fs = getattr(x, "fs", None)
    if levels < 1:
        raise ValidationError("levels must be at least 1")
    need = min_length(levels)
    if v.shape[-1] < need:
        raise TooShortError(
            f"signal of {v.shape[-1]} samples is too short for {levels} db4 levels; minimum length is {need}"
        )
    details = []
    a = np.asarray(v, dtype=np.float64)
    for _ in range(levels):
        a, d = dwt_step(a)
        details.append(d)
    return WaveletDecomposition(details=details, approximation=a, source_length=v.shape[-1], fs=fs)


def dwt_reconstruct(dec: WaveletDecomposition) -> np.ndarray:
    """Inverse of :func:`dwt_decompose`."""
    a = dec.approximation
    for d in reversed(dec.details):
        if a.shape[-1] == d.shape[-1] + 1:
            a = a[..., :-1]
        a = idwt_step(a, d)
    return a[..., : dec.source_length]


def energy_entropy(coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Energy and Shannon entropy (nats) of normalized squared coefficients.

    Works along the last axis. An all-zero band gets energy 0 and entropy 0.
    """
    sq = np.asarray(coeffs, dtype=np.float64) ** 2
    energy = sq.sum(axis=-1)
    safe = np.where(energy > 0, energy, 1.0)
    p = sq / safe[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log(p), 0.0)
    entropy = -plogp.sum(axis=-1)
    return energy, np.maximum(entropy, 0.0)


def detail_band(level: int, fs: float) -> tuple[float, float]:
    """Frequency range covered by detail level ``level`` (1 = finest)."""
    return fs / 2 ** (level + 1), fs / 2**level


def band_levels(fs: float, levels: int = 5) -> dict[str, int]:
    """Detail level whose octave matches each EEG band.

    At 256 Hz this is theta=D5 ... gamma=D2 with D1 (64-128 Hz) unused; at
    128 Hz every band moves one level finer (gamma=D1 ... theta=D4) and D5
    (2-4 Hz) is the unused level.
    """
    out = {}
    for band, (lo, hi) in BAND_OCTAVES.items():
        for level in range(1, levels + 1):
            if np.isclose(detail_band(level, fs), (lo, hi)).all():
                out[band] = level
                break
        else:
            raise ValidationError(f"no detail level of a {levels}-level DWT at {fs} Hz covers {band} ({lo}-{hi} Hz)")
    return out


def band_features(dec: WaveletDecomposition, fs: float | None = None) -> list[BandFeature]:
    """Energy and entropy for theta, alpha, beta and gamma.

    Detail levels outside those four octaves are dropped.
    """
    fs = fs if fs is not None else (dec.fs if dec.fs is not None else 128.0)
    out = []
    for band, level in band_levels(fs, dec.levels).items():
        e, h = energy_entropy(dec.details[level - 1])
        out.append(BandFeature(band=band, energy=float(e), entropy=float(h)))
    return out
