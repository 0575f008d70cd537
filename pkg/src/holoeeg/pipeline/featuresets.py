"""Assembly of the six feature sets (A, B, C, D, MHS, HHSA) into feature matrices.

Columns carry a ``(feature, band, channel)`` tag; the band slot holds a
frequency band name, ``imfK`` for IMF-indexed features, ``carrierK`` for the
holospectrum carrier axis, or ``all`` for whole-signal scalars.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..emd import SiftConfig, decompose
from ..errors import ConstantSignalError, ValidationError
from ..features import (
    DEFAULT_BANDS,
    IMF_FEATURE_NAMES,
    BandDefinition,
    band_sums,
    hjorth,
    higuchi_fd,
    dfa,
    hurst,
    imf_features,
    petrosian_fd,
    rir_and_spectral_entropy,
    welch_psd,
)
from ..signal import frame_array
from ..spectra import HHSA_CONFIG, MHS_CONFIG, SpectrumConfig, holo_spectrum_from_imfs, instantaneous_attributes, marginal_per_imf
from ..wavelet import BAND_OCTAVES, band_levels, dwt_decompose, energy_entropy
from .dataset import Trial

SET_IDS = ("A", "B", "C", "D", "MHS", "HHSA")
SCALAR_FEATURES = ("hjorth_mobility", "hjorth_complexity", "hfd", "pfd", "spectral_entropy", "dfa", "hurst")
SPECTRAL_FEATURES = ("psi", "rir")


@dataclass(frozen=True)
class ExtractionConfig:
    window_s: float = 4.0
    hop_s: float = 2.0
    bands: tuple = DEFAULT_BANDS
    sift: SiftConfig = SiftConfig()
    mhs: SpectrumConfig = MHS_CONFIG
    hhsa: SpectrumConfig = HHSA_CONFIG
    dwt_levels: int = 5
    higuchi_kmax: int = 8

    def band(self, name: str) -> BandDefinition:
        for b in self.bands:
            if b.name == name:
                return b
        raise ValidationError(f"unknown band {name!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FeatureSetSpec:
    """Which features, bands (or IMFs) and channels make up one feature set.

    ``channels=None`` keeps every recorded channel.
    """

    set_id: str
    features: tuple
    bands: tuple
    channels: tuple | None = None

    def __post_init__(self):
        if self.set_id not in SET_IDS:
            raise ValidationError(f"unknown feature set {self.set_id!r}; choose from {SET_IDS}")
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "bands", tuple(self.bands))
        if self.channels is not None:
            if not self.channels:
                raise ValidationError("empty channel selection")
            object.__setattr__(self, "channels", tuple(self.channels))

    @property
    def imf_indices(self) -> list[int]:
        out = []
        for b in self.bands:
            if not str(b).startswith("imf"):
                raise ValidationError(f"set {self.set_id}: expected IMF selectors like 'imf1', got {b!r}")
            out.append(int(str(b)[3:]))
        return out

    def to_dict(self) -> dict:
        return {
            "set_id": self.set_id,
            "features": list(self.features),
            "bands": list(self.bands),
            "channels": None if self.channels is None else list(self.channels),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSetSpec":
        return cls(d["set_id"], tuple(d["features"]), tuple(d["bands"]), None if d.get("channels") is None else tuple(d["channels"]))


def _imfs(n: int) -> tuple:
    return tuple(f"imf{i}" for i in range(1, n + 1))


def default_spec(set_id: str, dimension: str = "valence") -> FeatureSetSpec:
    """Best-performing selection per set and dimension."""
    if dimension not in ("valence", "arousal"):
        raise ValidationError(f"unknown dimension {dimension!r}")
    valence = dimension == "valence"
    if set_id == "A":
        return FeatureSetSpec(
            "A",
            ("hjorth_mobility", "hjorth_complexity", "hfd", "pfd", "spectral_entropy", "psi", "rir"),
            ("alpha_low", "alpha_high", "beta", "gamma"),
        )
    if set_id == "B":
        return FeatureSetSpec("B", ("psd",), ("alpha_high", "beta"))
    if set_id == "C":
        return FeatureSetSpec("C", ("energy", "entropy"), ("gamma",) if valence else ("theta", "alpha", "beta", "gamma"))
    if set_id == "D":
        if valence:
            return FeatureSetSpec("D", ("sp_ited", "d_ised"), _imfs(4))
        return FeatureSetSpec("D", ("energy", "sp_omega", "d_ised"), _imfs(3))
    if set_id == "MHS":
        return FeatureSetSpec("MHS", ("mhs",), _imfs(4))
    if set_id == "HHSA":
        return FeatureSetSpec("HHSA", ("hhsa",), _imfs(4))
    raise ValidationError(f"unknown feature set {set_id!r}; choose from {SET_IDS}")


def spec_columns(spec: FeatureSetSpec, channels: Sequence[str], cfg: ExtractionConfig) -> list[tuple]:
    """Column tags for ``spec`` in channel-major order."""
    chans = list(channels) if spec.channels is None else list(spec.channels)
    per_channel: list[tuple] = []
    sid = spec.set_id
    if sid == "A":
        for f in spec.features:
            if f in SCALAR_FEATURES:
                per_channel.append((f, "all"))
            elif f in SPECTRAL_FEATURES:
                for b in spec.bands:
                    cfg.band(b)
                    per_channel.append((f, b))
            else:
                raise ValidationError(f"set A: unknown feature {f!r}")
    elif sid == "B":
        if tuple(spec.features) != ("psd",):
            raise ValidationError("set B supports only the 'psd' feature")
        for b in spec.bands:
            cfg.band(b)
            per_channel.append(("psd", b))
    elif sid == "C":
        for b in spec.bands:
            if b not in BAND_OCTAVES:
                raise ValidationError(f"set C: unknown wavelet band {b!r}")
            for f in spec.features:
                if f not in ("energy", "entropy"):
                    raise ValidationError(f"set C: unknown feature {f!r}")
                per_channel.append((f, b))
    elif sid == "D":
        for i in spec.imf_indices:
            for f in spec.features:
                if f not in IMF_FEATURE_NAMES:
                    raise ValidationError(f"set D: unknown feature {f!r}")
                per_channel.append((f, f"imf{i}"))
    elif sid == "MHS":
        for i in spec.imf_indices:
            for k in range(cfg.mhs.n_bins):
                per_channel.append((f"mhs_bin{k:02d}", f"imf{i}"))
    elif sid == "HHSA":
        spec.imf_indices
        for i in range(cfg.hhsa.n_bins):
            for j in range(cfg.hhsa.n_bins):
                per_channel.append((f"hhsa_am{j}", f"carrier{i}"))
    return [(f, b, ch) for ch in chans for (f, b) in per_channel]


@dataclass
class FeatureMatrix:
    set_id: str
    values: np.ndarray
    columns: list
    trial_ids: list
    spec: FeatureSetSpec | None = None
    flags: list = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.trial_ids), len(self.columns)):
            raise ValidationError(
                f"values shape {self.values.shape} does not match {len(self.trial_ids)} rows x {len(self.columns)} columns"
            )
        names = self.column_names
        if len(set(names)) != len(names):
            raise ValidationError("duplicate column names")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("feature matrix contains NaN or Inf")

    @property
    def d(self) -> int:
        return len(self.columns)

    @property
    def column_names(self) -> list[str]:
        return ["@".join(c) for c in self.columns]

    @property
    def channels(self) -> list[str]:
        seen = []
        for c in self.columns:
            if c[2] not in seen:
                seen.append(c[2])
        return seen

    def select(self, mask) -> "FeatureMatrix":
        idx = np.flatnonzero(mask)
        return FeatureMatrix(self.set_id, self.values[:, idx], [self.columns[i] for i in idx], list(self.trial_ids), self.spec, list(self.flags))


def reduce_channels(matrix: FeatureMatrix, channel_list: Sequence[str]) -> FeatureMatrix:
    """Keep only columns recorded on the listed channels."""
    if not channel_list:
        raise ValidationError("empty channel selection")
    present = set(c[2] for c in matrix.columns)
    unknown = [c for c in channel_list if c not in present]
    if unknown:
        raise ValidationError(f"unknown channel(s): {', '.join(unknown)}")
    keep = set(channel_list)
    out = matrix.select([c[2] in keep for c in matrix.columns])
    if out.spec is not None:
        out.spec = FeatureSetSpec(out.spec.set_id, out.spec.features, out.spec.bands, tuple(c for c in matrix.channels if c in keep))
    return out


# per-channel computation ----------------------------------------------------


def _needs(specs: Sequence[FeatureSetSpec]) -> dict:
    needs = {"scalars": set(), "psd_trial": False, "psd_win": False, "dwt": False, "imf_count": 0, "mhs": 0, "hhsa": 0}
    for s in specs:
        if s.set_id == "A":
            needs["scalars"].update(f for f in s.features if f in SCALAR_FEATURES)
            needs["psd_trial"] = needs["psd_trial"] or any(f in SPECTRAL_FEATURES or f == "spectral_entropy" for f in s.features)
        elif s.set_id == "B":
            needs["psd_win"] = True
        elif s.set_id == "C":
            needs["dwt"] = True
        else:
            n = max(s.imf_indices) if s.bands else 0
            needs["imf_count"] = max(needs["imf_count"], n)
            if s.set_id == "MHS":
                needs["mhs"] = max(needs["mhs"], n)
            if s.set_id == "HHSA":
                needs["hhsa"] = max(needs["hhsa"], n)
    return needs


def _channel_features(v: np.ndarray, fs: float, needs: dict, cfg: ExtractionConfig, tag: str) -> tuple[dict, list]:
    out: dict = {}
    flags: list = []
    scalars = needs["scalars"]
    if scalars & {"hjorth_mobility", "hjorth_complexity"}:
        try:
            out["hjorth_mobility"], out["hjorth_complexity"] = hjorth(v)
        except ConstantSignalError:
            out["hjorth_mobility"] = out["hjorth_complexity"] = 0.0
            flags.append(("A", f"{tag}: constant signal, Hjorth set to 0"))
    if "hfd" in scalars:
        out["hfd"] = higuchi_fd(v, cfg.higuchi_kmax) if np.ptp(v) > 0 else 1.0
    if "pfd" in scalars:
        out["pfd"] = petrosian_fd(v)
    for name, fn in (("dfa", dfa), ("hurst", hurst)):
        if name in scalars:
            try:
                out[name] = fn(v)
            except ConstantSignalError:
                out[name] = 0.0
                flags.append(("A", f"{tag}: {name} undefined, set to 0"))
    if needs["psd_trial"]:
        freqs, pxx = welch_psd(v, fs, cfg.window_s, cfg.hop_s)
        psi = band_sums(freqs, pxx, cfg.bands)
        out["psi"] = dict(zip((b.name for b in cfg.bands), psi))
        if psi.sum() > 0:
            rir, se = rir_and_spectral_entropy(psi)
        else:
            rir, se = np.zeros_like(psi), 0.0
            flags.append(("A", f"{tag}: no in-band power, RIR and spectral entropy set to 0"))
        out["rir"] = dict(zip((b.name for b in cfg.bands), rir))
        out["spectral_entropy"] = se
    if needs["psd_win"] or needs["dwt"]:
        w = int(round(cfg.window_s * fs))
        h = int(round(cfg.hop_s * fs))
        frames = frame_array(v, w, h)
        if needs["psd_win"]:
            freqs, pxx = welch_psd(frames, fs, cfg.window_s, cfg.hop_s)
            psd = band_sums(freqs, pxx, cfg.bands)
            out["psd_windows"] = psd
            out["psd"] = dict(zip((b.name for b in cfg.bands), psd.mean(axis=0)))
        if needs["dwt"]:
            dec = dwt_decompose(frames, cfg.dwt_levels)
            dwt = {}
            for band, level in band_levels(fs, cfg.dwt_levels).items():
                e, ent = energy_entropy(dec.details[level - 1])
                dwt[band] = (e, ent)
            out["dwt_windows"] = dwt
            out["dwt"] = {b: (float(e.mean()), float(ent.mean())) for b, (e, ent) in dwt.items()}
    if needs["imf_count"]:
        dec = decompose(v, cfg.sift)
        imfs = dec.imfs
        if len(imfs) < needs["imf_count"]:
            flags.append(("emd", f"{tag}: {len(imfs)} IMFs < {needs['imf_count']} requested, missing IMFs zero-filled"))
        feats = []
        for imf in imfs[: needs["imf_count"]]:
            feats.append(imf_features(imf, instantaneous_attributes(imf, fs)).as_dict())
        out["imf"] = feats
        if needs["mhs"]:
            sel = imfs[: needs["mhs"]]
            out["mhs"] = marginal_per_imf(sel, fs, cfg.mhs) if sel else np.zeros((0, cfg.mhs.n_bins))
        if needs["hhsa"]:
            out["hhsa"] = holo_spectrum_from_imfs(imfs[: needs["hhsa"]], fs, cfg.hhsa, cfg.hhsa, cfg.sift).grid
    return out, flags


def _lookup(feat: dict, spec: FeatureSetSpec, f: str, b: str) -> float:
    sid = spec.set_id
    if sid == "A":
        return float(feat[f]) if b == "all" else float(feat[f][b])
    if sid == "B":
        return float(feat["psd"][b])
    if sid == "C":
        e, ent = feat["dwt"][b]
        return e if f == "energy" else ent
    i = int(b[3:]) if b.startswith("imf") else None
    if sid == "D":
        rows = feat["imf"]
        return float(rows[i - 1][f]) if i <= len(rows) else 0.0
    if sid == "MHS":
        m = feat["mhs"]
        k = int(f[len("mhs_bin") :])
        return float(m[i - 1, k]) if i <= m.shape[0] else 0.0
    if sid == "HHSA":
        ci = int(b[len("carrier") :])
        aj = int(f[len("hhsa_am") :])
        return float(feat["hhsa"][ci, aj])
    raise ValidationError(sid)


def _trial_rows(trial: Trial, specs: Sequence[FeatureSetSpec], cfg: ExtractionConfig) -> tuple[list, list]:
    needs = _needs(specs)
    wanted = set()
    for s in specs:
        wanted.update(trial.channel_names if s.channels is None else s.channels)
    missing = wanted - set(trial.channel_names)
    if missing:
        raise ValidationError(f"{trial.key}: channels not recorded: {', '.join(sorted(missing))}")
    per_channel, flags = {}, []
    for name, v in zip(trial.channel_names, trial.channels):
        if name in wanted:
            per_channel[name], f = _channel_features(v, trial.fs, needs, cfg, f"{trial.key}/{name}")
            flags.extend(f)
    rows = []
    for s in specs:
        cols = spec_columns(s, trial.channel_names, cfg)
        rows.append(np.array([_lookup(per_channel[ch], s, f, b) for (f, b, ch) in cols]))
    return rows, flags


def build_feature_matrices(
    trials: Sequence[Trial],
    specs: Sequence[FeatureSetSpec],
    cfg: ExtractionConfig = ExtractionConfig(),
    n_jobs: int = 1,
) -> list[FeatureMatrix]:
    """Extract several feature sets in one pass, sharing per-channel work.

    Returns one matrix per spec, in order; the same set id may appear more
    than once (e.g. valence and arousal variants of set D). Trials are
    processed in parallel when ``n_jobs > 1``; output order and values do
    not depend on ``n_jobs``.
    """
    if not trials:
        raise ValidationError("no trials")
    names = trials[0].channel_names
    if any(t.channel_names != names for t in trials):
        raise ValidationError("all trials must share one channel layout")
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_trial_rows, trials, [specs] * len(trials), [cfg] * len(trials)))
    else:
        results = [_trial_rows(t, specs, cfg) for t in trials]
    flags = [f for _, fl in results for f in fl]
    out = []
    for i, s in enumerate(specs):
        cols = spec_columns(s, names, cfg)
        values = np.stack([rows[i] for rows, _ in results]) if cols else np.zeros((len(trials), 0))
        out.append(FeatureMatrix(s.set_id, values, cols, [t.key for t in trials], s, _relevant_flags(flags, s)))
    return out


def build_feature_sets(
    trials: Sequence[Trial],
    specs: Sequence[FeatureSetSpec],
    cfg: ExtractionConfig = ExtractionConfig(),
    n_jobs: int = 1,
) -> dict[str, FeatureMatrix]:
    """Like :func:`build_feature_matrices`, keyed by set id."""
    if len({s.set_id for s in specs}) != len(specs):
        raise ValidationError("each feature set may appear only once per call")
    return {m.set_id: m for m in build_feature_matrices(trials, specs, cfg, n_jobs)}


def _relevant_flags(flags: list, spec: FeatureSetSpec) -> list:
    kind = "emd" if spec.set_id in ("D", "MHS", "HHSA") else spec.set_id
    return [msg for k, msg in flags if k == kind]


def build_feature_set(
    trials: Sequence[Trial],
    spec: FeatureSetSpec,
    cfg: ExtractionConfig = ExtractionConfig(),
    n_jobs: int = 1,
) -> FeatureMatrix:
    return build_feature_sets(trials, [spec], cfg, n_jobs)[spec.set_id]


# serialization --------------------------------------------------------------


def config_hash(obj) -> str:
    """sha256 over canonical JSON (sorted keys, no whitespace)."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_jsonable)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    if hasattr(o, "__dataclass_fields__"):
        return asdict(o)
    raise TypeError(f"not serializable: {type(o)}")


def write_csv_lines(path: Path, header: list[str], rows, config_hash_value: str | None) -> None:
    lines = []
    if config_hash_value is not None:
        lines.append(f"# config_hash: {config_hash_value}")
    lines.append(",".join(header))
    lines.extend(rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_feature_matrix(matrix: FeatureMatrix, path: str | Path, config_hash_value: str, extra: dict | None = None) -> tuple[Path, Path]:
    """Write ``<path>`` (CSV) and ``<path>.json`` (sidecar with spec, hash, flags)."""
    path = Path(path)
    rows = (
        ",".join([tid] + [repr(float(v)) for v in row]) for tid, row in zip(matrix.trial_ids, matrix.values)
    )
    write_csv_lines(path, ["trial_id"] + matrix.column_names, rows, config_hash_value)
    sidecar = {
        "set_id": matrix.set_id,
        "spec": None if matrix.spec is None else matrix.spec.to_dict(),
        "config_hash": config_hash_value,
        "n_rows": len(matrix.trial_ids),
        "d": matrix.d,
        "flags": list(matrix.flags),
    }
    if extra:
        sidecar.update(extra)
    side = path.with_suffix(path.suffix + ".json")
    side.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path, side


def read_csv_rows(path: str | Path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    """Header and data rows (with 1-based line numbers), skipping ``#`` comment lines."""
    header = None
    rows = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cells = [c.strip() for c in line.split(",")]
        if header is None:
            header = cells
        else:
            rows.append((lineno, cells))
    if header is None:
        raise ValidationError(f"{path}: empty CSV")
    return header, rows


def read_feature_matrix(path: str | Path) -> FeatureMatrix:
    path = Path(path)
    header, rows = read_csv_rows(path)
    if header[0] != "trial_id":
        raise ValidationError(f"{path}: first column must be trial_id")
    cols = []
    for name in header[1:]:
        parts = name.split("@")
        if len(parts) != 3:
            raise ValidationError(f"{path}: column {name!r} is not feature@band@channel")
        cols.append(tuple(parts))
    ids, values = [], []
    for lineno, cells in rows:
        if len(cells) != len(header):
            raise ValidationError(f"{path}:{lineno}: expected {len(header)} fields, found {len(cells)}")
        try:
            values.append([float(c) for c in cells[1:]])
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: non-numeric value") from None
        ids.append(cells[0])
    side = path.with_suffix(path.suffix + ".json")
    spec, flags, set_id = None, [], path.stem
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
        set_id = meta.get("set_id", set_id)
        spec = FeatureSetSpec.from_dict(meta["spec"]) if meta.get("spec") else None
        flags = meta.get("flags", [])
    return FeatureMatrix(set_id, np.array(values).reshape(len(ids), len(cols)), cols, ids, spec, flags)
