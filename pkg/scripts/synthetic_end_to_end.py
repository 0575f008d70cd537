"""Synthesize a dataset, run every CLI stage on it and print a result table.

    python3 scripts/synthetic_end_to_end.py --workdir /tmp/holo --sets C D --effect 2.0
"""

import argparse
import json
from pathlib import Path

import yaml

from holoeeg.cli import main as cli


def run(args) -> int:
    work = Path(args.workdir)
    work.mkdir(parents=True, exist_ok=True)
    cfg = {
        "dataset": "data",
        "output_dir": "out",
        "sets": args.sets,
        "dimensions": ["valence"],
        "trial_seconds": args.seconds,
        "seed": args.seed,
        "synth": {"n_subjects": args.subjects, "n_trials": args.trials, "band": args.band, "effect": args.effect,
                  "high_fraction": args.high_fraction},
    }
    if args.quick:
        cfg["rf_grid"] = {"n_estimators": [50, 100], "depth": [6, 10]}
    path = work / "config.yaml"
    path.write_text(yaml.safe_dump(cfg))
    common = ["--config", str(path), "--threads", str(args.threads)]
    for cmd in ("synth", "extract", "train-eval"):
        code = cli([cmd, *common])
        if code:
            return code
    out = work / "out"
    summary = json.loads((out / "reports" / "summary.json").read_text())
    print(f"{'set':<6}{'classifier':<15}{'F1':>8}{'CA':>8}  params")
    for r in summary["results"]:
        print(f"{r['set_id']:<6}{r['classifier']:<15}{r['mean_f1']:>8.4f}{r['mean_ca']:>8.4f}  {r['params']}")
    posts = sorted(str(p) for p in (out / "posteriors").glob("*_random_forest.csv"))
    if len(posts) >= 2:
        cli(["fuse", *posts, *common])
        fused = json.loads((out / "fused_valence.json").read_text())
        print(f"fused ({len(posts)} RF inputs): F1 {fused['fused']['f1']:.4f} CA {fused['fused']['ca']:.4f}"
              f"  baseline {fused['majority_baseline']:.4f}")
    return 0


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--workdir", default="runs/synthetic")
    p.add_argument("--sets", nargs="+", default=["B", "C"])
    p.add_argument("--band", default="gamma")
    p.add_argument("--effect", type=float, default=2.0)
    p.add_argument("--high-fraction", type=float, default=0.5)
    p.add_argument("--subjects", type=int, default=2)
    p.add_argument("--trials", type=int, default=40)
    p.add_argument("--seconds", type=float, default=60.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--quick", action="store_true", help="4-point RF grid instead of the full 42")
    raise SystemExit(run(p.parse_args()))
