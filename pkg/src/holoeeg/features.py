"""Temporal, band-spectral and per-IMF features.

Per-IMF feature definitions (declared here, used as the normative ones):

* ``energy``   -- sum of squared IMF samples.
* ITED(t)      -- instantaneous temporal energy density, ``a(t)**2``.
* ``sp_ited``  -- standard deviation of time (s) under ITED normalized to a
  probability density.
* ``d_ited``   -- mean absolute deviation of ITED(t) from its mean.
* ``sp_omega`` -- standard deviation of the instantaneous frequency (Hz).
* ISED         -- ``a(t)**2`` histogrammed over instantaneous frequency in
  64 bins on ``[0, fs/2]``, normalized to sum to 1.
* ``d_ised``   -- mean absolute deviation of the ISED bin heights.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import welch

from .errors import ConstantSignalError, TooShortError, ValidationError
from .signal import Signal, SignalLike, samples_of
from .spectra import InstantaneousAttributes


class DegenerateSignalWarning(UserWarning):
    pass


@dataclass(frozen=True)
class BandDefinition:
    name: str
    lo: float
    hi: float

    def __post_init__(self):
        if not 0 < self.lo < self.hi:
            raise ValidationError(f"band {self.name}: need 0 < lo < hi, got {self.lo}, {self.hi}")


DEFAULT_BANDS = (
    BandDefinition("theta", 4.0, 8.0),
    BandDefinition("alpha_low", 8.0, 10.0),
    BandDefinition("alpha_high", 10.0, 13.0),
    BandDefinition("beta", 13.0, 25.0),
    BandDefinition("gamma", 25.0, 40.0),
)

ISED_BINS = 64


def higuchi_fd(x: SignalLike, k_max: int = 8) -> float:
    """Higuchi fractal dimension.

    A constant signal has zero curve length at every scale; 1.0 is returned
    and a :class:`DegenerateSignalWarning` is emitted.
    """
    v = samples_of(x)
    n = v.size
    if n <= 2 * k_max:
        raise TooShortError(f"Higuchi FD with k_max={k_max} needs more than {2 * k_max} samples, got {n}")
    lengths = np.empty(k_max)
    for k in range(1, k_max + 1):
        lm = []
        for m in range(k):
            sub = v[m::k]
            n_max = sub.size - 1
            if n_max < 1:
                continue
            curve = np.abs(np.diff(sub)).sum() * (n - 1) / (n_max * k)
            lm.append(curve / k)
        lengths[k - 1] = np.mean(lm)
    if np.any(lengths <= 0):
        warnings.warn("zero curve length; returning FD = 1.0", DegenerateSignalWarning, stacklevel=2)
        return 1.0
    k = np.arange(1, k_max + 1)
    slope = np.polyfit(np.log(1.0 / k), np.log(lengths), 1)[0]
    return float(slope)


def petrosian_fd(x: SignalLike) -> float:
    v = samples_of(x)
    n = v.size
    if n < 3:
        raise TooShortError("Petrosian FD needs at least 3 samples")
    d = np.diff(v)
    n_delta = int(np.count_nonzero(d[1:] * d[:-1] < 0))
    return float(np.log10(n) / (np.log10(n) + np.log10(n / (n + 0.4 * n_delta))))


def hjorth(x: SignalLike) -> tuple[float, float]:
    """Hjorth mobility and complexity from first differences."""
    v = samples_of(x)
    if v.size < 3:
        raise TooShortError("Hjorth parameters need at least 3 samples")
    d1 = np.diff(v)
    d2 = np.diff(d1)
    var0, var1, var2 = np.var(v), np.var(d1), np.var(d2)
    if var0 == 0:
        raise ConstantSignalError("constant signal")
    mobility = np.sqrt(var1 / var0)
    if var1 == 0:
        return float(mobility), 0.0
    complexity = np.sqrt(var2 / var1) / mobility
    return float(mobility), float(complexity)


def default_box_sizes(n: int, count: int = 10) -> np.ndarray:
    return np.unique(np.floor(np.logspace(np.log10(4), np.log10(n / 4), count)).astype(int))


def dfa(x: SignalLike, box_sizes: Sequence[int] | None = None) -> float:
    """Detrended fluctuation analysis scaling exponent."""
    v = samples_of(x)
    n = v.size
    if box_sizes is None:
        box_sizes = default_box_sizes(n)
    box_sizes = np.asarray(sorted(set(int(b) for b in box_sizes)))
    usable = box_sizes[(box_sizes >= 4) & (4 * box_sizes <= n)]
    if usable.size < 3:
        raise TooShortError(f"DFA needs at least 3 box sizes with 4 <= size <= N/4; got {usable.tolist()}")
    profile = np.cumsum(v - v.mean())
    fluct = np.empty(usable.size)
    for i, s in enumerate(usable):
        boxes = profile[: (n // s) * s].reshape(-1, s)
        t = np.arange(s, dtype=np.float64)
        tc = t - t.mean()
        bc = boxes - boxes.mean(axis=1, keepdims=True)
        slope = bc @ tc / (tc @ tc)
        resid = bc - slope[:, None] * tc
        fluct[i] = np.sqrt(np.mean(resid**2))
    if np.any(fluct <= 0):
        raise ConstantSignalError("zero fluctuation")
    return float(np.polyfit(np.log(usable), np.log(fluct), 1)[0])


def hurst(x: SignalLike, min_chunk: int = 16, n_sizes: int = 10) -> float:
    """Rescaled-range Hurst exponent.

    Subseries lengths are log-spaced from ``min_chunk`` to ``N/2``;
    zero-variance subseries are skipped.
    """
    v = samples_of(x)
    n = v.size
    if n < 64:
        raise TooShortError(f"Hurst exponent needs at least 64 samples, got {n}")
    sizes = np.unique(np.floor(np.logspace(np.log10(min_chunk), np.log10(n / 2), n_sizes)).astype(int))
    log_n, log_rs = [], []
    for s in sizes:
        chunks = v[: (n // s) * s].reshape(-1, s)
        sd = chunks.std(axis=1)
        ok = sd > 0
        if not np.any(ok):
            continue
        z = np.cumsum(chunks[ok] - chunks[ok].mean(axis=1, keepdims=True), axis=1)
        rs = (z.max(axis=1) - z.min(axis=1)) / sd[ok]
        log_n.append(np.log(s))
        log_rs.append(np.log(rs.mean()))
    if len(log_n) < 2:
        raise ConstantSignalError("every subseries has zero variance")
    return float(np.polyfit(log_n, log_rs, 1)[0])


def welch_psd(v: np.ndarray, fs: float, window_s: float = 4.0, hop_s: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
    """Hann-windowed Welch PSD along the last axis."""
    nper = min(int(round(window_s * fs)), v.shape[-1])
    nover = max(nper - int(round(hop_s * fs)), 0)
    return welch(v, fs=fs, window="hann", nperseg=nper, noverlap=nover, detrend=False, axis=-1)


def psd_band_powers(
    x: Signal,
    bands: Sequence[BandDefinition] = DEFAULT_BANDS,
    window_s: float = 4.0,
    hop_s: float = 2.0,
) -> np.ndarray:
    """Per-band power (PSI): sum of Welch PSD values with ``lo <= f < hi``."""
    v = x.samples
    if v.size < 2 * x.fs:
        raise TooShortError(f"band powers need at least 2 s of data ({int(2 * x.fs)} samples), got {v.size}")
    for b in bands:
        if b.hi > x.fs / 2:
            raise ValidationError(f"band {b.name} ({b.lo}-{b.hi} Hz) exceeds Nyquist ({x.fs / 2} Hz)")
    freqs, pxx = welch_psd(v, x.fs, window_s, hop_s)
    return band_sums(freqs, pxx, bands)


def band_sums(freqs: np.ndarray, pxx: np.ndarray, bands: Sequence[BandDefinition]) -> np.ndarray:
    return np.stack([pxx[..., (freqs >= b.lo) & (freqs < b.hi)].sum(axis=-1) for b in bands], axis=-1)


def rir_and_spectral_entropy(psi: Sequence[float]) -> tuple[np.ndarray, float]:
    """Relative intensity ratio per band and entropy normalized to ``[0, 1]``."""
    psi = np.asarray(psi, dtype=np.float64)
    total = psi.sum()
    if total <= 0:
        raise ValidationError("no in-band power")
    rir = psi / total
    nz = rir[rir > 0]
    if psi.size < 2 or nz.size == 1:
        return rir, 0.0
    if np.all(psi == psi[0]):
        return rir, 1.0  # exact; the log sum can land one ulp short
    entropy = -np.sum(nz * np.log(nz)) / np.log(psi.size)
    return rir, float(min(max(entropy, 0.0), 1.0))


@dataclass(frozen=True)
class ImfFeatureVector:
    energy: float
    sp_ited: float
    d_ited: float
    sp_omega: float
    d_ised: float

    def as_dict(self) -> dict:
        return {
            "energy": self.energy,
            "sp_ited": self.sp_ited,
            "d_ited": self.d_ited,
            "sp_omega": self.sp_omega,
            "d_ised": self.d_ised,
        }


IMF_FEATURE_NAMES = ("energy", "sp_ited", "d_ited", "sp_omega", "d_ised")


def imf_features(imf, attrs: InstantaneousAttributes) -> ImfFeatureVector:
    """Energy plus ITED/ISED spread and deviation statistics of one IMF."""
    v = samples_of(getattr(imf, "samples", imf))
    a, w, fs = attrs.amplitude, attrs.frequency, attrs.fs
    if a.size != v.size:
        raise ValidationError("attributes do not match the IMF length")
    energy = float(np.dot(v, v))
    ited = a**2
    total = ited.sum()
    if energy == 0.0 or total == 0.0:
        return ImfFeatureVector(0.0, 0.0, 0.0, 0.0, 0.0)
    t = np.arange(v.size) / fs
    p = ited / total
    mean_t = np.dot(p, t)
    sp_ited = float(np.sqrt(np.dot(p, (t - mean_t) ** 2)))
    d_ited = float(np.mean(np.abs(ited - ited.mean())))
    sp_omega = float(np.std(w))
    ised, _ = np.histogram(w, bins=ISED_BINS, range=(0.0, fs / 2), weights=ited)
    ised = ised / ised.sum()
    d_ised = float(np.mean(np.abs(ised - ised.mean())))
    return ImfFeatureVector(energy, sp_ited, d_ited, sp_omega, d_ised)
