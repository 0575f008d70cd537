"""Synthetic DEAP-shaped datasets with a controllable class effect.

Each channel is 4-45 Hz band-limited noise with a ``1/sqrt(f)`` amplitude
spectrum, a per-subject channel gain, and an amplitude-modulated tone. Trials
of the high class in the chosen dimension get the power of one frequency
band multiplied by ``1 + effect``; ``effect = 0`` gives a null dataset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .dataset import DEAP_CHANNELS, FS, TRIAL_SECONDS, Trial

BAND_PRESETS = {
    "theta": (4.0, 8.0),
    "alpha": (8.0, 13.0),
    "beta": (13.0, 25.0),
    "gamma": (25.0, 40.0),
}


@dataclass(frozen=True)
class SeparationSpec:
    band: str | tuple = "gamma"
    effect: float = 2.0
    dimension: str = "valence"
    high_fraction: float = 0.5

    def __post_init__(self):
        if self.effect < 0:
            raise ValidationError(f"effect size must be >= 0, got {self.effect}")
        if self.dimension not in ("valence", "arousal"):
            raise ValidationError(f"unknown dimension {self.dimension!r}")
        if not 0 < self.high_fraction < 1:
            raise ValidationError("high_fraction must lie in (0, 1)")
        self.edges  # validates the band

    @property
    def edges(self) -> tuple[float, float]:
        if isinstance(self.band, str):
            if self.band not in BAND_PRESETS:
                raise ValidationError(f"unknown band {self.band!r}; choose from {sorted(BAND_PRESETS)}")
            return BAND_PRESETS[self.band]
        lo, hi = map(float, self.band)
        if not 0 < lo < hi:
            raise ValidationError(f"bad band edges {self.band}")
        return lo, hi


def _channel_noise(rng, n_channels: int, n: int, fs: float, boost_band, boost: float) -> np.ndarray:
    freqs = np.fft.rfftfreq(n, 1 / fs)
    shape = np.zeros_like(freqs)
    passband = (freqs >= 4.0) & (freqs <= 45.0)
    shape[passband] = 1.0 / np.sqrt(freqs[passband])
    # unit variance before the boost, so the boost adds band power only
    shape /= np.sqrt(np.mean(shape[passband] ** 2))
    if boost != 1.0:
        lo, hi = boost_band
        shape[(freqs >= lo) & (freqs < hi) & passband] *= np.sqrt(boost)
    white = rng.standard_normal((n_channels, n))
    return np.fft.irfft(np.fft.rfft(white, axis=1) * shape, n=n, axis=1)


def _ratings(rng, n_trials: int, high_fraction: float) -> np.ndarray:
    n_high = int(round(high_fraction * n_trials))
    n_high = min(max(n_high, 1), n_trials - 1) if n_trials > 1 else n_high
    is_high = np.zeros(n_trials, dtype=bool)
    is_high[:n_high] = True
    rng.shuffle(is_high)
    return np.round(np.where(is_high, rng.uniform(5.0, 9.0, n_trials), rng.uniform(1.0, 4.5, n_trials)), 3)


def synth_dataset(
    seed: int,
    n_subjects: int,
    n_trials: int,
    separation: SeparationSpec = SeparationSpec(),
    duration_s: float = TRIAL_SECONDS,
    fs: float = FS,
    channel_names: tuple = DEAP_CHANNELS,
    amplitude: float = 10.0,
) -> list[Trial]:
    """Generate ``n_subjects * n_trials`` trials; bit-identical for a given seed."""
    if n_subjects < 1 or n_trials < 1:
        raise ValidationError("need at least one subject and one trial")
    n = int(round(duration_s * fs))
    n_ch = len(channel_names)
    t = np.arange(n) / fs
    trials = []
    for s in range(1, n_subjects + 1):
        srng = np.random.default_rng([seed, s])
        gains = np.exp(0.2 * srng.standard_normal(n_ch))
        primary = _ratings(srng, n_trials, separation.high_fraction)
        other = _ratings(srng, n_trials, 0.5)
        for k in range(1, n_trials + 1):
            rng = np.random.default_rng([seed, s, k])
            high = primary[k - 1] > 4.5
            boost = 1.0 + separation.effect if high else 1.0
            x = _channel_noise(rng, n_ch, n, fs, separation.edges, boost)
            carrier = rng.uniform(18.0, 30.0)
            am = rng.uniform(5.0, 8.0)
            tone = (1 + 0.5 * np.cos(2 * np.pi * am * t)) * np.cos(2 * np.pi * carrier * t + rng.uniform(0, 2 * np.pi))
            x = x + 0.5 * rng.uniform(0.5, 1.0, (n_ch, 1)) * tone
            x = amplitude * gains[:, None] * x
            if separation.dimension == "valence":
                valence, arousal = primary[k - 1], other[k - 1]
            else:
                valence, arousal = other[k - 1], primary[k - 1]
            trials.append(Trial(x, s, k, float(valence), float(arousal), fs, tuple(channel_names)))
    return trials
