"""Command-line front end: ``holoeeg {synth,extract,train-eval,fuse}``.

Exit codes: 0 success, 1 validation error, 2 any other failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import DEAP_TARGETS, RunConfig, load_config
from .errors import DatasetError, ValidationError
from .learn.fusion import PosteriorMatrix, fuse_matrices, read_posteriors, write_posteriors
from .learn.harness import grid_search
from .learn.metrics import majority_baseline, metrics
from .pipeline.dataset import CLASS_NAMES, FS, labels_for, load_dataset, write_dataset
from .pipeline.featuresets import (
    build_feature_matrices,
    read_csv_rows,
    read_feature_matrix,
    write_csv_lines,
    write_feature_matrix,
)
from .pipeline.synth import synth_dataset

log = logging.getLogger("holoeeg")

LABELS_FILE = "labels.csv"


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _note_previous(path: Path, h: str) -> None:
    """Log whether an existing artifact was produced by the same config."""
    if not path.exists():
        return
    first = path.read_text(encoding="utf-8").split("\n", 1)[0]
    if first == f"# config_hash: {h}":
        log.info("%s: config hash matches previous run", path.name)
    else:
        log.info("%s: overwriting output from a different config", path.name)


def feature_path(out: Path, set_id: str, dimension: str) -> Path:
    return out / "features" / f"{set_id}_{dimension}.csv"


def report_path(out: Path, set_id: str, dimension: str, kind: str) -> Path:
    return out / "reports" / f"{set_id}_{dimension}_{kind}.json"


def posterior_path(out: Path, set_id: str, dimension: str, kind: str) -> Path:
    return out / "posteriors" / f"{set_id}_{dimension}_{kind}.csv"


# commands ---------------------------------------------------------------------


def cmd_synth(cfg: RunConfig) -> int:
    s = cfg.synth
    trials = synth_dataset(cfg.seed, s.n_subjects, s.n_trials, s.separation(), duration_s=cfg.trial_seconds, fs=FS)
    paths = write_dataset(trials, cfg.dataset)
    log.info("wrote %d trials to %s", len(paths), cfg.dataset)
    return 0


def _write_labels(trials, cfg: RunConfig, out: Path, h: str) -> None:
    lab = {d: labels_for(trials, cfg.labels(d)) for d in ("valence", "arousal")}
    rows = [
        ",".join([t.key, repr(t.valence), repr(t.arousal), CLASS_NAMES[lab["valence"][i]], CLASS_NAMES[lab["arousal"][i]]])
        for i, t in enumerate(trials)
    ]
    write_csv_lines(out / LABELS_FILE, ["trial_id", "valence", "arousal", "valence_label", "arousal_label"], rows, h)


def read_labels(out: Path, dimension: str) -> dict[str, int]:
    path = out / LABELS_FILE
    if not path.is_file():
        raise DatasetError(f"{path} not found; run 'extract' first")
    header, rows = read_csv_rows(path)
    col = header.index(f"{dimension}_label")
    labels = {}
    for lineno, cells in rows:
        if len(cells) != len(header) or cells[col] not in CLASS_NAMES:
            raise ValidationError(f"{path}:{lineno}: malformed label row")
        labels[cells[0]] = CLASS_NAMES.index(cells[col])
    return labels


def cmd_extract(cfg: RunConfig) -> int:
    h = cfg.hash()
    out = Path(cfg.output_dir)
    trials = load_dataset(cfg.dataset, n_samples=int(round(cfg.trial_seconds * FS)))
    log.info("loaded %d trials; config hash %s", len(trials), h)
    # identical specs across dimensions are extracted once
    wanted = [(s, d, cfg.spec(s, d)) for d in cfg.dimensions for s in cfg.sets]
    unique = []
    for _, _, spec in wanted:
        if spec not in unique:
            unique.append(spec)
    matrices = build_feature_matrices(trials, unique, cfg.extraction(), n_jobs=cfg.threads)
    (out / "features").mkdir(parents=True, exist_ok=True)
    for set_id, dim, spec in wanted:
        m = matrices[unique.index(spec)]
        path = feature_path(out, set_id, dim)
        _note_previous(path, h)
        write_feature_matrix(m, path, h, {"dimension": dim})
        for flag in m.flags:
            log.warning("%s/%s: %s", set_id, dim, flag)
        log.info("%s/%s: %d x %d -> %s", set_id, dim, len(m.trial_ids), m.d, path)
    _write_labels(trials, cfg, out, h)
    return 0


def cmd_train_eval(cfg: RunConfig) -> int:
    h = cfg.hash()
    out = Path(cfg.output_dir)
    (out / "reports").mkdir(parents=True, exist_ok=True)
    (out / "posteriors").mkdir(parents=True, exist_ok=True)
    summary = []
    for dim in cfg.dimensions:
        labels = read_labels(out, dim)
        for set_id in cfg.sets:
            path = feature_path(out, set_id, dim)
            if not path.is_file():
                raise DatasetError(f"{path} not found; run 'extract' first")
            m = read_feature_matrix(path)
            missing = [t for t in m.trial_ids if t not in labels]
            if missing:
                raise ValidationError(f"{path}: no labels for {missing[:5]}")
            y = np.array([labels[t] for t in m.trial_ids])
            for kind in cfg.classifiers:
                g = grid_search(m.values, y, kind, cfg.grid(kind), cfg.cv_folds, cfg.seed, cfg.threads, cfg.class_weighted)
                rep = g.report(set_id=set_id, dimension=dim, config_hash=h, d=m.d, n_evaluations=g.n_evaluations)
                rep["seeds"]["model"] = cfg.seed
                _dump_json(rep, report_path(out, set_id, dim, kind))
                write_posteriors(PosteriorMatrix(tuple(m.trial_ids), g.best.result.posteriors), posterior_path(out, set_id, dim, kind), h)
                best = g.best.result
                log.info("%s/%s/%s: %s F1 %.4f CA %.4f", set_id, dim, kind, g.best.params, best.mean_f1, best.mean_ca)
                summary.append({"set_id": set_id, "dimension": dim, "classifier": kind, "params": g.best.params,
                                "mean_f1": best.mean_f1, "mean_ca": best.mean_ca})
    _dump_json({"config_hash": h, "results": summary}, out / "reports" / "summary.json")
    return 0


def cmd_fuse(cfg: RunConfig, files, dimension: str, weights=None, out_prefix=None) -> int:
    if len(files) < 2:
        raise ValidationError("fusion needs at least two posterior files")
    h = cfg.hash()
    out = Path(cfg.output_dir)
    mats = [read_posteriors(f) for f in files]
    fused = fuse_matrices(mats, weights)
    labels = read_labels(out, dimension)
    missing = [t for t in fused.trial_ids if t not in labels]
    if missing:
        raise ValidationError(f"no labels for trial ids {missing[:10]}")
    y = np.array([labels[t] for t in fused.trial_ids])
    prefix = Path(out_prefix) if out_prefix else out / f"fused_{dimension}"
    prefix.parent.mkdir(parents=True, exist_ok=True)
    write_posteriors(fused, prefix.with_suffix(".csv"), h)
    f1, ca = metrics(fused.values, y)
    per_input = []
    for f, m in zip(files, mats):
        fi, ci = metrics(m.values, y)
        per_input.append({"file": Path(f).name, "f1": fi, "ca": ci})
    rep = {
        "config_hash": h,
        "dimension": dimension,
        "inputs": per_input,
        "weights": None if weights is None else list(weights),
        "fused": {"f1": f1, "ca": ca},
        "majority_baseline": majority_baseline(y),
    }
    if cfg.dataset_kind == "deap":
        rep["published_targets"] = DEAP_TARGETS[dimension]
    _dump_json(rep, prefix.with_suffix(".json"))
    log.info("fused %d inputs: F1 %.4f CA %.4f", len(files), f1, ca)
    return 0


# entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--threads", type=int, help="worker count (does not change results)")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="holoeeg", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="write a synthetic dataset")
    sub.add_parser("extract", parents=[common], help="compute feature matrices")
    sub.add_parser("train-eval", parents=[common], help="grid search + cross-validation per feature set")
    f = sub.add_parser("fuse", parents=[common], help="late fusion of posterior files")
    f.add_argument("posteriors", nargs="+")
    f.add_argument("--dimension", choices=("valence", "arousal"), default="valence")
    f.add_argument("--weights", type=float, nargs="+")
    f.add_argument("--out", help="output prefix (writes .csv and .json)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config).with_overrides(seed=args.seed, threads=args.threads)
        if args.command == "synth":
            return cmd_synth(cfg)
        if args.command == "extract":
            return cmd_extract(cfg)
        if args.command == "train-eval":
            return cmd_train_eval(cfg)
        return cmd_fuse(cfg, args.posteriors, args.dimension, args.weights, args.out)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
