"""Core signal containers, analytic signal, extrema detection and windowing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import NonFiniteError, TooShortError, ValidationError


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Signal:
    """Uniformly sampled single-channel time series.

    Parameters
    ----------
    samples : array_like
        Real samples. Stored as a read-only float64 copy.
    fs : float
        Sampling rate in Hz.
    """

    samples: np.ndarray
    fs: float

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise ValidationError(f"signal must be 1-D, got shape {x.shape}")
        if x.size < 2:
            raise TooShortError(f"signal needs at least 2 samples, got {x.size}")
        if not np.isfinite(self.fs) or self.fs <= 0:
            raise ValidationError(f"sampling rate must be positive, got {self.fs}")
        bad = np.flatnonzero(~np.isfinite(x))
        if bad.size:
            raise NonFiniteError(f"non-finite sample at index {bad[0]}")
        object.__setattr__(self, "samples", _frozen(x))
        object.__setattr__(self, "fs", float(self.fs))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs

    @property
    def time(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.fs


SignalLike = Union[Signal, np.ndarray]


def samples_of(x: SignalLike) -> np.ndarray:
    """Return the sample array of a Signal or a float64 view of an array."""
    if isinstance(x, Signal):
        return x.samples
    return np.asarray(x, dtype=np.float64)


@dataclass(frozen=True)
class AnalyticSignal:
    real: np.ndarray
    imag: np.ndarray
    fs: float

    @property
    def envelope(self) -> np.ndarray:
        return np.hypot(self.real, self.imag)

    @property
    def phase(self) -> np.ndarray:
        return np.unwrap(np.arctan2(self.imag, self.real))


@dataclass(frozen=True)
class ExtremaIndex:
    maxima: np.ndarray
    minima: np.ndarray

    @property
    def count(self) -> int:
        return self.maxima.size + self.minima.size


def hilbert_imag(x: np.ndarray) -> np.ndarray:
    """Discrete Hilbert transform by the one-sided spectrum method.

    Uses an exact-length FFT (no padding). Works along the last axis.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    spec = np.fft.fft(x, axis=-1)
    h = np.zeros(n)
    h[0] = 1.0
    if n % 2 == 0:
        h[n // 2] = 1.0
        h[1 : n // 2] = 2.0
    else:
        h[1 : (n + 1) // 2] = 2.0
    return np.fft.ifft(spec * h, axis=-1).imag


def analytic_signal(x: Signal) -> AnalyticSignal:
    """Analytic signal of ``x``; ``imag`` is the Hilbert transform of the samples."""
    if not isinstance(x, Signal):
        raise TypeError("analytic_signal expects a Signal")
    return AnalyticSignal(real=x.samples, imag=_frozen(hilbert_imag(x.samples)), fs=x.fs)


def find_extrema(x: SignalLike) -> ExtremaIndex:
    """Interior local maxima and minima.

    Runs of equal values are collapsed first, so a plateau yields a single
    extremum placed at the midpoint of the run (lower index on even-length
    runs). Runs touching either end of the signal are never extrema.
    """
    v = samples_of(x)
    n = v.size
    if n < 3:
        raise TooShortError("too short for extrema")
    change = np.flatnonzero(np.diff(v) != 0)
    starts = np.concatenate(([0], change + 1))
    ends = np.concatenate((change, [n - 1]))
    if starts.size < 3:
        empty = np.empty(0, dtype=np.intp)
        return ExtremaIndex(empty, empty.copy())
    vals = v[starts]
    mid, prev, nxt = vals[1:-1], vals[:-2], vals[2:]
    centers = (starts[1:-1] + ends[1:-1]) // 2
    maxima = centers[(mid > prev) & (mid > nxt)]
    minima = centers[(mid < prev) & (mid < nxt)]
    return ExtremaIndex(maxima.astype(np.intp), minima.astype(np.intp))


def count_zero_crossings(x: SignalLike) -> int:
    """Sign changes, ignoring exact zeros (a touch of zero is not a crossing)."""
    s = np.sign(samples_of(x))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _as_int_samples(seconds: float, fs: float, what: str) -> int:
    n = seconds * fs
    k = int(round(n))
    if k <= 0 or abs(n - k) > 1e-9:
        raise ValidationError(f"{what} of {seconds} s is not a positive whole number of samples at {fs} Hz")
    return k


def window_starts(n: int, window: int, hop: int) -> np.ndarray:
    if window > n:
        raise ValidationError(f"window of {window} samples is longer than the signal ({n})")
    return np.arange((n - window) // hop + 1) * hop


def segment_windows(x: Signal, window_s: float, hop_s: float) -> list[Signal]:
    """Cut ``x`` into fixed-length windows; trailing samples that do not fill a window are dropped."""
    w = _as_int_samples(window_s, x.fs, "window")
    h = _as_int_samples(hop_s, x.fs, "hop")
    return [Signal(x.samples[s : s + w], x.fs) for s in window_starts(len(x), w, h)]


def frame_array(v: np.ndarray, window: int, hop: int) -> np.ndarray:
    """Array version of :func:`segment_windows` returning a (n_windows, window) copy."""
    starts = window_starts(v.shape[-1], window, hop)
    return np.stack([v[..., s : s + window] for s in starts], axis=-2)
