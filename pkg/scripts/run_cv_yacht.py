#!/usr/bin/env python3
"""Ten-fold benchmark on the yacht hydrodynamics table (B=1000, k=60):
plain forest against both one-step variants, with prediction-interval
length and coverage. Fetch the data first with scripts/fetch_yacht.py.
"""

import argparse
import time

from boostwood.boost import BoostConfig
from boostwood.data import load_csv
from boostwood.evaluation import run_cv_benchmark
from boostwood.forest import ForestConfig
from boostwood.tree import TreeConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", default="data/yacht_hydrodynamics.csv")
    ap.add_argument("--target", default="y")
    ap.add_argument("--folds", type=int, default=10)
    ap.add_argument("--trees", type=int, default=1000)
    ap.add_argument("--subsample", type=int, default=60)
    ap.add_argument("--seed", type=int, default=20240801)
    args = ap.parse_args()

    data = load_csv(args.data, args.target)
    fc = ForestConfig(n_trees=args.trees, subsample_size=args.subsample,
                      tree=TreeConfig(min_leaf=5))
    methods = [BoostConfig(forest=fc, steps=0),
               BoostConfig(forest=fc, steps=1, pattern=(0, 0)),
               BoostConfig(forest=fc, steps=1, pattern=(0, 1))]
    t0 = time.perf_counter()
    report = run_cv_benchmark(data, methods, args.folds, args.seed)
    print(report.to_text())
    print(f"# time: {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
