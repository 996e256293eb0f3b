"""Command-line interface.

Subcommands: fit, predict, simulate, cv, variants. Every command is
deterministic given --seed; timing lines are prefixed with '# time:' so the
remaining output is byte-identical across runs and thread counts.

Exit codes: 0 success, 2 usage error, 3 data/archive error, 4 numeric
failure (e.g. a singular covariance in the stopping test machinery).
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from .archive import ArchiveError, load_model, save_model
from .boost import (BoostConfig, SingularCovarianceError, count_variants,
                    enumerate_patterns, fit_boosted)
from .data import DataError, load_csv, load_query_csv
from .evaluation import (SimDesign, prediction_interval, run_cv_benchmark,
                         run_simulation, standard_test_points)
from .forest import BOOTSTRAP, SUBSAMPLE, ForestConfig
from .tree import TreeConfig
from .variance import variance_components

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _apply_threads(value: int | None) -> None:
    import numba
    if value is None:
        env = os.environ.get("BOOSTWOOD_THREADS")
        value = int(env) if env else None
    if value is not None:
        if value < 1:
            raise ValueError("--threads must be at least 1")
        numba.set_num_threads(min(value, numba.config.NUMBA_NUM_THREADS))


def _target_arg(text: str):
    return int(text) if text.lstrip("-").isdigit() else text


def _tree_config(args) -> TreeConfig:
    return TreeConfig(mtry=args.mtry, min_leaf=args.min_leaf,
                      max_depth=args.max_depth,
                      split_tries=args.split_tries)


def _parse_variant(text: str, steps: int) -> tuple[int, ...]:
    if text == "same":
        return (0,) * (steps + 1)
    if text == "independent":
        return tuple(range(steps + 1))
    if text.startswith("pattern:"):
        try:
            pattern = tuple(int(p) for p in text[len("pattern:"):].split(","))
        except ValueError:
            raise ValueError(f"unparseable pattern in {text!r}") from None
        return pattern
    raise ValueError(
        f"unknown variant {text!r}: use same, independent or pattern:0,1,...")


def _boost_config(args, n: int) -> BoostConfig:
    if args.subsample is not None and args.subsample >= n and \
            args.residuals != "bootstrap":
        raise ValueError(f"k must be < n (got k={args.subsample}, n={n})")
    resampling = BOOTSTRAP if args.residuals == "bootstrap" else SUBSAMPLE
    if resampling == SUBSAMPLE and args.subsample is None:
        raise ValueError("--subsample is required")
    forest = ForestConfig(n_trees=args.trees, subsample_size=args.subsample,
                          resampling=resampling, tree=_tree_config(args),
                          seed=args.seed)
    return BoostConfig(forest=forest, steps=args.steps,
                       pattern=_parse_variant(args.variant, args.steps),
                       residual_mode=args.residuals)


def _write_or_print(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_fit(args) -> int:
    data = load_csv(args.data, _target_arg(args.target),
                    has_header=not args.no_header)
    config = _boost_config(args, data.n)
    t0 = time.perf_counter()
    model = fit_boosted(data, config, track_residuals=True)
    elapsed = time.perf_counter() - t0
    save_model(model, args.out)
    print(f"fit {config.n_stages} stage(s) of {config.forest.n_trees} trees "
          f"on n={data.n}, d={data.d}")
    for j, mse in enumerate(model.stage_residual_mse):
        print(f"stage {j}: training residual MSE ({config.residual_mode}) "
              f"= {mse:.6g}")
    print(f"model written to {args.out}")
    print(f"# time: fit took {elapsed:.2f}s")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    X = load_query_csv(args.data, has_header=not args.no_header)
    if X.shape[1] != model.n_features:
        raise DataError(
            f"query has {X.shape[1]} columns, model expects "
            f"{model.n_features}")
    est, v_ij, zeta, total = variance_components(model, X)
    noise = model.residual_noise_mse if model.stage_residual_mse else 0.0
    lines = ["estimate,ij_variance,mc_variance,total_variance,lower,upper"]
    for i in range(X.shape[0]):
        pi = prediction_interval(est[i], total[i], noise, args.level)
        mc = zeta[i] / model.n_trees
        lines.append(",".join(repr(float(v)) for v in
                              (est[i], v_ij[i], mc, total[i], pi.lower,
                               pi.upper)))
    _write_or_print("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _sim_methods(args) -> list[BoostConfig]:
    forest = ForestConfig(n_trees=args.trees, subsample_size=args.subsample,
                          tree=_tree_config(args), seed=args.seed)
    methods = []
    for token in args.methods.split(","):
        token = token.strip()
        mode = args.residuals
        if "@" in token:
            token, mode = token.split("@", 1)
        if mode not in ("oob", "inbag", "bootstrap"):
            raise ValueError(f"unknown residual mode {mode!r}")
        if token == "rf":
            methods.append(BoostConfig(forest=forest, steps=0))
            continue
        pattern = _parse_variant(token, args.steps)
        methods.append(BoostConfig(forest=forest, steps=len(pattern) - 1,
                                   pattern=pattern, residual_mode=mode))
    return methods


def cmd_simulate(args) -> int:
    if args.replicates < 1:
        raise ValueError("--replicates must be at least 1")
    design = SimDesign(n=args.n, d=args.dims, signal=args.design,
                       noise_sd=args.noise_sd,
                       test_points=standard_test_points(args.dims),
                       replicates=args.replicates, n_trees=args.trees,
                       subsample_size=args.subsample)
    t0 = time.perf_counter()
    report = run_simulation(design, _sim_methods(args), args.seed)
    elapsed = time.perf_counter() - t0
    sys.stdout.write(report.to_text())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
        print(f"csv written to {args.out}")
    print(f"# time: simulation took {elapsed:.2f}s")
    return EXIT_OK


def cmd_cv(args) -> int:
    data = load_csv(args.data, _target_arg(args.target),
                    has_header=not args.no_header)
    methods = _sim_methods(args)
    for cfg in methods:
        if cfg.forest.resampling == SUBSAMPLE and \
                cfg.forest.subsample_size is None:
            raise ValueError("--subsample is required")
        if cfg.forest.subsample_size is not None and \
                cfg.forest.subsample_size >= data.n:
            raise ValueError(
                f"k must be < n (got k={cfg.forest.subsample_size}, "
                f"n={data.n})")
    t0 = time.perf_counter()
    report = run_cv_benchmark(data, methods, args.folds, args.seed,
                              level=args.level)
    elapsed = time.perf_counter() - t0
    sys.stdout.write(report.to_text())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
        print(f"csv written to {args.out}")
    print(f"# time: cross-validation took {elapsed:.2f}s")
    return EXIT_OK


def cmd_variants(args) -> int:
    print(count_variants(args.steps))
    for pattern in enumerate_patterns(args.steps):
        print(",".join(str(p) for p in pattern))
    return EXIT_OK


def _add_tree_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mtry", type=int, default=None,
                   help="features tried per split (default: ceil(d/3))")
    p.add_argument("--min-leaf", type=int, default=5)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--split-tries", type=int, default=0,
                   help="0 = examine every candidate midpoint")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trees", type=int, default=1000)
    p.add_argument("--subsample", type=int, default=None,
                   help="per-tree sample size k (< n)")
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--residuals", default="oob",
                   choices=["oob", "inbag", "bootstrap"])
    _add_tree_flags(p)


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="boostwood",
        description="Boosted subsampled forests with variance estimates")
    top.add_argument("--threads", type=int, default=None,
                     help="cap worker threads (env: BOOSTWOOD_THREADS)")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model and write an archive")
    p.add_argument("--data", required=True)
    p.add_argument("--target", required=True,
                   help="target column name or 0-based index")
    p.add_argument("--no-header", action="store_true")
    _add_model_flags(p)
    p.add_argument("--variant", default="independent",
                   help="same | independent | pattern:0,1,1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict with variance and intervals")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="feature-only query CSV")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="run the simulation benchmark")
    p.add_argument("--design", default="linear", choices=["linear", "norm"])
    p.add_argument("--noise-sd", type=float, default=1.0)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--dims", type=int, default=15)
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--methods", default="rf,same,independent",
                   help="comma list: rf | same | independent | pattern:... "
                        "with optional @oob/@inbag/@bootstrap suffix")
    _add_model_flags(p)
    p.set_defaults(trees=2000, subsample=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="also write CSV here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("cv", help="k-fold benchmark on a CSV dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--methods", default="rf,same,independent")
    _add_model_flags(p)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="also write CSV here")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("variants",
                       help="count and list sample-sharing patterns")
    p.add_argument("steps", type=int)
    p.set_defaults(func=cmd_variants)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_threads(args.threads)
        return args.func(args)
    except (DataError, ArchiveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SingularCovarianceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
