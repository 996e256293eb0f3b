#!/usr/bin/env python3
"""Compare residual constructions (out-of-bag, in-bag, bootstrap) for the
independent-sample one-step model on the norm design.

The bootstrap arm regrows every stage on full-size resamples and is the
slow one; drop it with --no-bootstrap.
"""

import argparse
import time

from boostwood.evaluation import (SimDesign, compare_residual_modes,
                                  standard_test_points)
from boostwood.tree import TreeConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--signal", default="norm", choices=["linear", "norm"])
    ap.add_argument("--noise-sd", type=float, default=1.0)
    ap.add_argument("--replicates", type=int, default=100)
    ap.add_argument("--trees", type=int, default=2000)
    ap.add_argument("--subsample", type=int, default=100)
    ap.add_argument("--no-bootstrap", action="store_true")
    ap.add_argument("--seed", type=int, default=20240801)
    args = ap.parse_args()

    modes = ("oob", "inbag") if args.no_bootstrap else \
        ("oob", "inbag", "bootstrap")
    design = SimDesign(n=500, d=15, signal=args.signal,
                       noise_sd=args.noise_sd,
                       test_points=standard_test_points(15),
                       replicates=args.replicates, n_trees=args.trees,
                       subsample_size=args.subsample)
    t0 = time.perf_counter()
    report = compare_residual_modes(design, seed=args.seed,
                                    tree=TreeConfig(mtry=5, min_leaf=5),
                                    modes=modes)
    print(report.to_text())
    print(f"# time: {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
