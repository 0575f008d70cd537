"""Instantaneous attributes, Hilbert-Huang spectrum, marginal spectrum and holospectrum.

Binning is linear between ``freq_min`` and ``freq_max`` (both inclusive) and
accumulates instantaneous *amplitude*, not energy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .emd import Imf, SiftConfig, decompose
from .errors import SecondLevelSiftError, ValidationError
from .signal import Signal, SignalLike, hilbert_imag, samples_of


@dataclass(frozen=True)
class SpectrumConfig:
    freq_min: float = 5.0
    freq_max: float = 45.0
    n_bins: int = 64

    def __post_init__(self):
        if not 0 < self.freq_min < self.freq_max:
            raise ValidationError("need 0 < freq_min < freq_max")
        if self.n_bins < 1:
            raise ValidationError("n_bins must be at least 1")

    @property
    def bin_edges(self) -> np.ndarray:
        k = np.arange(self.n_bins + 1)
        return self.freq_min + k * (self.freq_max - self.freq_min) / self.n_bins

    def bin_index(self, freq: np.ndarray) -> np.ndarray:
        """Bin of each frequency, or -1 when outside ``[freq_min, freq_max]``.

        Bins are half-open ``[edge_k, edge_k+1)``. A frequency within 1e-9 bin
        widths of an edge is treated as lying on it, so round-off in the
        phase derivative cannot push an on-edge tone into the lower bin.
        """
        freq = np.asarray(freq, dtype=np.float64)
        width = (self.freq_max - self.freq_min) / self.n_bins
        q = (freq - self.freq_min) / width
        nearest = np.round(q)
        q = np.where(np.abs(q - nearest) < 1e-9, nearest, q)
        idx = np.floor(q).astype(np.intp)
        idx = np.minimum(idx, self.n_bins - 1)  # freq == freq_max lands in the top bin
        inside = (freq >= self.freq_min) & (freq <= self.freq_max)
        return np.where(inside, idx, -1)


MHS_CONFIG = SpectrumConfig(5.0, 45.0, 64)
HHSA_CONFIG = SpectrumConfig(5.0, 45.0, 5)


@dataclass(frozen=True)
class InstantaneousAttributes:
    amplitude: np.ndarray
    frequency: np.ndarray
    fs: float


@dataclass(frozen=True)
class HilbertSpectrum:
    grid: np.ndarray  # (n_bins, n_samples)
    bin_edges: np.ndarray


@dataclass(frozen=True)
class MarginalSpectrum:
    values: np.ndarray
    bin_edges: np.ndarray


@dataclass(frozen=True)
class HoloSpectrum:
    grid: np.ndarray  # (carrier bins, AM bins)
    carrier_edges: np.ndarray
    am_edges: np.ndarray


def _amp_freq(v: np.ndarray, fs: float) -> tuple[np.ndarray, np.ndarray]:
    imag = hilbert_imag(v)
    amplitude = np.hypot(v, imag)
    phase = np.unwrap(np.arctan2(imag, v))
    # np.gradient: central differences inside, one-sided at both ends
    freq = np.gradient(phase) * fs / (2.0 * np.pi)
    return amplitude, np.clip(freq, 0.0, fs / 2.0)


def instantaneous_attributes(imf: Imf | SignalLike, fs: float | None = None) -> InstantaneousAttributes:
    """Envelope and phase-derivative frequency of one IMF."""
    if isinstance(imf, Imf):
        v = imf.samples
    else:
        v = samples_of(imf)
        if fs is None and isinstance(imf, Signal):
            fs = imf.fs
    if fs is None:
        raise ValidationError("sampling rate required")
    if v.size < 4:
        raise ValidationError(f"IMF needs at least 4 samples, got {v.size}")
    amplitude, freq = _amp_freq(np.asarray(v, dtype=np.float64), float(fs))
    return InstantaneousAttributes(amplitude=amplitude, frequency=freq, fs=float(fs))


def _imf_arrays(imfs) -> list[np.ndarray]:
    return [imf.samples if isinstance(imf, Imf) else samples_of(imf) for imf in imfs]


def hilbert_spectrum(imfs: Sequence[Imf], fs: float, cfg: SpectrumConfig = MHS_CONFIG) -> HilbertSpectrum:
    """Accumulate each IMF's amplitude into the frequency bin of its instantaneous frequency."""
    arrays = _imf_arrays(imfs)
    if not arrays:
        raise ValidationError("hilbert_spectrum needs at least one IMF")
    n = arrays[0].size
    flat = np.zeros(cfg.n_bins * n)
    t = np.arange(n)
    for v in arrays:
        if v.size != n:
            raise ValidationError("all IMFs must share one length")
        attrs = instantaneous_attributes(v, fs)
        b = cfg.bin_index(attrs.frequency)
        keep = b >= 0
        flat += np.bincount(b[keep] * n + t[keep], weights=attrs.amplitude[keep], minlength=flat.size)
    return HilbertSpectrum(grid=flat.reshape(cfg.n_bins, n), bin_edges=cfg.bin_edges)


def marginal_spectrum(spec: HilbertSpectrum) -> MarginalSpectrum:
    """Sum the Hilbert spectrum over time."""
    return MarginalSpectrum(values=spec.grid.sum(axis=1), bin_edges=spec.bin_edges)


def marginal_per_imf(imfs: Sequence[Imf], fs: float, cfg: SpectrumConfig = MHS_CONFIG) -> np.ndarray:
    """(n_imfs, n_bins) matrix with one marginal spectrum row per IMF."""
    return np.stack([marginal_spectrum(hilbert_spectrum([imf], fs, cfg)).values for imf in imfs])


def holo_spectrum_from_imfs(
    imfs: Sequence[Imf],
    fs: float,
    cfg1: SpectrumConfig = HHSA_CONFIG,
    cfg2: SpectrumConfig = HHSA_CONFIG,
    sift: SiftConfig = SiftConfig(),
) -> HoloSpectrum:
    """Holospectrum from already extracted first-level IMFs.

    Each IMF's amplitude envelope is decomposed again; every second-level IMF
    contributes its amplitude at cell (carrier bin of the first-level
    frequency, AM bin of its own frequency), sample by sample.
    """
    grid = np.zeros((cfg1.n_bins, cfg2.n_bins))
    for v in _imf_arrays(imfs):
        a1, w1 = _amp_freq(v, fs)
        carrier = cfg1.bin_index(w1)
        if not np.any(a1):
            continue
        for imf2 in decompose(a1, sift).imfs:
            a2, w2 = _amp_freq(imf2.samples, fs)
            am = cfg2.bin_index(w2)
            keep = (carrier >= 0) & (am >= 0)
            grid += np.bincount(
                carrier[keep] * cfg2.n_bins + am[keep], weights=a2[keep], minlength=grid.size
            ).reshape(grid.shape)
    return HoloSpectrum(grid=grid, carrier_edges=cfg1.bin_edges, am_edges=cfg2.bin_edges)


def holo_spectrum(
    x: Signal,
    cfg1: SpectrumConfig = HHSA_CONFIG,
    cfg2: SpectrumConfig = HHSA_CONFIG,
    sift: SiftConfig = SiftConfig(),
    n_imfs: int | None = None,
) -> HoloSpectrum:
    """Two-level Holo-Hilbert spectrum of ``x``.

    ``n_imfs`` limits the carriers to the first few first-level IMFs.
    """
    v = x.samples
    if v.size < 16:
        raise SecondLevelSiftError(f"second-level sift failed: signal of {v.size} samples is too short")
    empty = HoloSpectrum(np.zeros((cfg1.n_bins, cfg2.n_bins)), cfg1.bin_edges, cfg2.bin_edges)
    if np.ptp(v) == 0:
        return empty
    dec = decompose(v, sift)
    if dec.n_imfs == 0:
        raise SecondLevelSiftError("second-level sift failed: no first-level IMFs to demodulate")
    imfs = dec.imfs if n_imfs is None else dec.imfs[:n_imfs]
    return holo_spectrum_from_imfs(imfs, x.fs, cfg1, cfg2, sift)
