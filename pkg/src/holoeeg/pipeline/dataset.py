"""Trial container, interchange file format, loading and label binarization.

A trial file (``*.trial``) is one line of UTF-8 JSON header followed by the
raw little-endian float64 samples, row-major ``n_channels x n_samples``::

    {"arousal": 6.1, "channels": ["Fp1", ...], "format": "holoeeg-trial/1", ...}\\n
    <n_channels * n_samples * 8 bytes>
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import DatasetError, ValidationError

FORMAT_TAG = "holoeeg-trial/1"
TRIAL_SUFFIX = ".trial"

# electrode order of the 32 EEG channels in the preprocessed DEAP release
DEAP_CHANNELS = (
    "Fp1", "AF3", "F3", "F7", "FC5", "FC1", "C3", "T7", "CP5", "CP1", "P3", "P7", "PO3", "O1", "Oz", "Pz",
    "Fp2", "AF4", "Fz", "F4", "F8", "FC6", "FC2", "Cz", "C4", "T8", "CP6", "CP2", "P4", "P8", "PO4", "O2",
)  # fmt: skip
FRONTAL_CHANNELS = ("Fp1", "AF3", "F3", "F7", "FC5", "Fp2", "AF4", "F4", "F8", "FC6")

FS = 128.0
TRIAL_SECONDS = 60.0
RATING_RANGE = (1.0, 9.0)


@dataclass(frozen=True)
class Trial:
    channels: np.ndarray  # (n_channels, n_samples)
    subject_id: int
    trial_id: int
    valence: float
    arousal: float
    fs: float = FS
    channel_names: tuple = DEAP_CHANNELS

    def __post_init__(self):
        x = np.array(self.channels, dtype=np.float64)
        if x.ndim != 2:
            raise ValidationError("trial data must be 2-D (channels x samples)")
        if x.shape[0] != len(self.channel_names):
            raise ValidationError(f"{x.shape[0]} data rows but {len(self.channel_names)} channel names")
        x.setflags(write=False)
        object.__setattr__(self, "channels", x)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))

    @property
    def key(self) -> str:
        return trial_key(self.subject_id, self.trial_id)

    @property
    def n_samples(self) -> int:
        return self.channels.shape[1]

    def rating(self, dimension: str) -> float:
        if dimension not in ("valence", "arousal"):
            raise ValidationError(f"unknown dimension {dimension!r}")
        return getattr(self, dimension)


def trial_key(subject_id: int, trial_id: int) -> str:
    return f"s{subject_id:02d}_t{trial_id:02d}"


@dataclass(frozen=True)
class LabelConfig:
    threshold: float = 4.5
    dimension: str = "valence"

    def __post_init__(self):
        if not RATING_RANGE[0] < self.threshold < RATING_RANGE[1]:
            raise ValidationError(f"label threshold must lie in (1, 9), got {self.threshold}")
        if self.dimension not in ("valence", "arousal"):
            raise ValidationError(f"unknown dimension {self.dimension!r}")


HIGH, LOW = 1, 0
CLASS_NAMES = ("low", "high")


def binarize(rating: float, cfg: LabelConfig = LabelConfig()) -> int:
    """1 (high) if ``rating > threshold`` else 0 (low)."""
    return HIGH if rating > cfg.threshold else LOW


def labels_for(trials: Sequence[Trial], cfg: LabelConfig = LabelConfig()) -> np.ndarray:
    return np.array([binarize(t.rating(cfg.dimension), cfg) for t in trials], dtype=np.int64)


def write_trial(trial: Trial, path: str | Path) -> Path:
    path = Path(path)
    header = {
        "format": FORMAT_TAG,
        "subject_id": int(trial.subject_id),
        "trial_id": int(trial.trial_id),
        "fs": float(trial.fs),
        "channels": list(trial.channel_names),
        "n_samples": int(trial.n_samples),
        "ratings": {"valence": float(trial.valence), "arousal": float(trial.arousal)},
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        fh.write(np.ascontiguousarray(trial.channels, dtype="<f8").tobytes())
    return path


def write_dataset(trials: Sequence[Trial], directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return [write_trial(t, directory / f"{t.key}{TRIAL_SUFFIX}") for t in trials]


def read_trial(
    path: str | Path,
    n_channels: int | None = 32,
    fs: float | None = FS,
    n_samples: int | None = int(FS * TRIAL_SECONDS),
) -> Trial:
    """Read and validate one trial file; ``None`` disables a shape check."""
    path = Path(path)
    raw = path.read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise DatasetError(f"{path.name}: malformed header (no header line)")
    try:
        header = json.loads(raw[:nl].decode("utf-8"))
        names = list(header["channels"])
        n = int(header["n_samples"])
        rate = float(header["fs"])
        ratings = header["ratings"]
        valence, arousal = float(ratings["valence"]), float(ratings["arousal"])
        subject_id, trial_id = int(header["subject_id"]), int(header["trial_id"])
    except (ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
        raise DatasetError(f"{path.name}: malformed header ({exc})") from None
    if header.get("format") != FORMAT_TAG:
        raise DatasetError(f"{path.name}: malformed header (format tag {header.get('format')!r})")
    if n_channels is not None and len(names) != n_channels:
        raise DatasetError(f"{path.name}: expected {n_channels} channels, found {len(names)}")
    if fs is not None and rate != fs:
        raise DatasetError(f"{path.name}: expected fs={fs} Hz, found {rate}")
    if n_samples is not None and n != n_samples:
        raise DatasetError(f"{path.name}: expected {n_samples} samples per channel, found {n}")
    for dim, r in (("valence", valence), ("arousal", arousal)):
        if not RATING_RANGE[0] <= r <= RATING_RANGE[1]:
            raise DatasetError(f"{path.name}: {dim} rating out of range [1, 9]: {r}")
    body = raw[nl + 1 :]
    if len(body) != len(names) * n * 8:
        raise DatasetError(f"{path.name}: data block has {len(body)} bytes, expected {len(names) * n * 8}")
    data = np.frombuffer(body, dtype="<f8").reshape(len(names), n)
    if not np.all(np.isfinite(data)):
        raise DatasetError(f"{path.name}: data block contains non-finite samples")
    return Trial(data.astype(np.float64), subject_id, trial_id, valence, arousal, rate, tuple(names))


def load_dataset(
    path: str | Path,
    n_channels: int | None = 32,
    fs: float | None = FS,
    n_samples: int | None = int(FS * TRIAL_SECONDS),
) -> list[Trial]:
    """Load every ``*.trial`` file in ``path`` ordered by (subject, trial).

    All files are checked before anything is returned; any failure raises a
    :class:`DatasetError` listing every offending file.
    """
    path = Path(path)
    if not path.is_dir():
        raise DatasetError(f"dataset directory not found: {path}")
    files = sorted(path.glob(f"*{TRIAL_SUFFIX}"))
    if not files:
        raise DatasetError(f"no {TRIAL_SUFFIX} files in {path}")
    trials, problems = [], []
    for f in files:
        try:
            trials.append(read_trial(f, n_channels, fs, n_samples))
        except DatasetError as exc:
            problems.append(str(exc))
    seen: dict = {}
    for t in trials:
        if t.key in seen:
            problems.append(f"duplicate trial {t.key}")
        seen[t.key] = t
    if problems:
        raise DatasetError("dataset rejected:\n  " + "\n  ".join(problems))
    return sorted(trials, key=lambda t: (t.subject_id, t.trial_id))
