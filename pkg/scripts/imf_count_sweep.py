"""How many IMFs carry the signal? Score IMF prefixes 1..10 of set D.

The synthetic separation is placed in one band; the sweep shows which IMF
prefix picks it up.

    python3 scripts/imf_count_sweep.py --band gamma --trials 30
"""

import argparse
import json

from holoeeg.pipeline.dataset import labels_for
from holoeeg.pipeline.featuresets import FeatureSetSpec, build_feature_matrices, default_spec
from holoeeg.pipeline.selection import cv_evaluator, incremental_imf_eval
from holoeeg.pipeline.synth import SeparationSpec, synth_dataset

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--band", default="gamma")
    p.add_argument("--effect", type=float, default=2.0)
    p.add_argument("--trials", type=int, default=30, help="per subject (2 subjects)")
    p.add_argument("--seconds", type=float, default=20.0)
    p.add_argument("--classifier", default="knn", choices=("knn", "random_forest"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    a = p.parse_args()

    trials = synth_dataset(a.seed, 2, a.trials, SeparationSpec(a.band, a.effect), duration_s=a.seconds)
    base = default_spec("D")
    spec = FeatureSetSpec("D", base.features, tuple(f"imf{i}" for i in range(1, 11)), None)
    matrix = build_feature_matrices(trials, [spec])[0]
    rep = incremental_imf_eval(matrix, labels_for(trials), cv_evaluator(a.classifier, seed=a.seed))
    if a.json:
        print(json.dumps(rep.to_dict(), indent=2))
    else:
        for c, s in zip(rep.counts, rep.scores):
            print(f"IMFs 1..{c:<3} CA {s:.4f}")
        print(f"best count {rep.best_count}; majority baseline {rep.baseline:.4f}")
