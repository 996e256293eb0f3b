"""Simulation studies, benchmark metrics and prediction intervals.

The simulation protocol: draw a fresh dataset per replicate, fit every
method on it, record each method's estimate and variance estimate at fixed
test points, then aggregate bias, variance calibration, normality distance,
interval coverage and estimated-MSE improvement against the first method
(the baseline).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtr, ndtri

from ._rng import TAG_DATA, mix_key
from .boost import BoostConfig, fit_boosted
from .data import Dataset, make_folds
from .forest import ForestConfig
from .tree import TreeConfig
from .variance import variance_components

LINEAR = "linear"      # sum of the first five coordinates
NORM = "norm"          # euclidean norm of the feature vector
CONSTANT = "constant"  # flat response (degenerate designs, tests)
SIGNALS = (LINEAR, NORM, CONSTANT)

_TAG_FIT = 0xF17
_TAG_CVFIT = 0xCF17


def standard_test_points(d: int = 15) -> np.ndarray:
    """Five canonical query points at increasing distance from the origin:
    the origin, a single-coordinate offset, and a diagonal point at one,
    two and three times radius 1/3."""
    if d < 1:
        raise ValueError("d must be positive")
    pts = np.zeros((5, d))
    pts[1, 0] = 1.0 / 3.0
    pts[2] = 1.0 / (3.0 * np.sqrt(d))
    pts[3] = 2.0 * pts[2]
    pts[4] = 3.0 * pts[2]
    return pts


@dataclass(frozen=True)
class SimDesign:
    n: int = 500
    d: int = 15
    signal: str = LINEAR
    noise_sd: float = 1.0
    test_points: np.ndarray = field(
        default_factory=lambda: standard_test_points(15))
    replicates: int = 200
    n_trees: int = 2000
    subsample_size: int = 100

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.test_points, dtype=np.float64))
        pts.setflags(write=False)
        object.__setattr__(self, "test_points", pts)

    def validate(self) -> None:
        if self.signal not in SIGNALS:
            raise ValueError(f"unknown signal {self.signal!r}")
        if self.signal == LINEAR and self.d < 5:
            raise ValueError("the linear signal sums five coordinates; "
                             "d must be at least 5")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if self.test_points.shape[1] != self.d:
            raise ValueError("test points do not have d components")
        if not 1 <= self.subsample_size <= self.n:
            raise ValueError("subsample_size must be in [1, n]")
        if self.n_trees < 2:
            raise ValueError("n_trees must be at least 2")


def true_signal(signal: str, X) -> np.ndarray:
    Xa = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if signal == LINEAR:
        return Xa[:, :5].sum(axis=1)
    if signal == NORM:
        return np.sqrt((Xa * Xa).sum(axis=1))
    if signal == CONSTANT:
        return np.ones(Xa.shape[0])
    raise ValueError(f"unknown signal {signal!r}")


def simulate_dataset(design: SimDesign, seed: int, replicate: int) -> Dataset:
    """Features uniform on [-1, 1]^d, response = signal + gaussian noise."""
    rng = np.random.default_rng([seed, TAG_DATA, replicate])
    X = rng.uniform(-1.0, 1.0, size=(design.n, design.d))
    y = true_signal(design.signal, X) + \
        rng.normal(0.0, design.noise_sd, size=design.n)
    return Dataset(X, y)


def design_forest(design: SimDesign,
                  tree: TreeConfig = TreeConfig()) -> ForestConfig:
    return ForestConfig(n_trees=design.n_trees,
                        subsample_size=design.subsample_size, tree=tree)


def method_label(config: BoostConfig) -> str:
    if config.steps == 0:
        base = "rf"
    else:
        pattern = config.resolved_pattern()
        if pattern == (0,) * len(pattern):
            base = "boost-same"
        elif pattern == tuple(range(len(pattern))):
            base = "boost-indep"
        else:
            base = "boost-" + "".join(str(p) for p in pattern)
        if config.steps > 1:
            base += f"-{config.steps}step"
    if config.residual_mode != "oob":
        base += f"-{config.residual_mode}"
    return base


def ks_normality(samples, mean: float, variance: float) -> float:
    """One-sample Kolmogorov distance between the standardised samples and
    the standard normal: max over order statistics of the one-sided gaps."""
    s = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    if s.size < 1:
        raise ValueError("need at least one sample")
    if variance <= 0:
        raise ValueError("variance must be positive")
    z = (s - mean) / np.sqrt(variance)
    phi = ndtr(z)
    m = s.size
    i = np.arange(1, m + 1)
    return float(np.max(np.maximum(i / m - phi, phi - (i - 1) / m)))


def performance_improvement(mse_candidate, mse_baseline) -> float:
    """Percent reduction of summed estimated MSE versus the baseline:
    100 * (1 - sum(candidate) / sum(baseline))."""
    c = np.asarray(mse_candidate, dtype=np.float64).ravel()
    b = np.asarray(mse_baseline, dtype=np.float64).ravel()
    if c.size != b.size:
        raise ValueError("candidate and baseline must have equal length")
    if c.size == 0:
        raise ValueError("need at least one value")
    denom = float(b.sum())
    if denom <= 0:
        raise ValueError("baseline MSE sum must be positive")
    return 100.0 * (1.0 - float(c.sum()) / denom)


def normal_quantile(p: float) -> float:
    return float(ndtri(p))


@dataclass(frozen=True)
class PredictionInterval:
    lower: float
    upper: float

    @property
    def length(self) -> float:
        return self.upper - self.lower


def prediction_interval(estimate: float, variance: float, residual_mse: float,
                        level: float = 0.95) -> PredictionInterval:
    """Two-sided normal interval with width from the model variance plus
    the residual noise estimate: estimate +- z * sqrt(variance + noise)."""
    if variance < 0 or residual_mse < 0:
        raise ValueError("variance terms must be non-negative")
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    half = normal_quantile(0.5 + level / 2.0) * \
        np.sqrt(variance + residual_mse)
    return PredictionInterval(float(estimate - half), float(estimate + half))


@dataclass(frozen=True)
class SimReport:
    """Aggregated simulation metrics, methods by test points.

    Arrays are (n_methods, q) except the raw draws, which are
    (n_methods, q, replicates). Coverage counts replicates whose interval
    estimate +- z_{97.5%} sqrt(variance) contains the true value; the
    improvement column compares estimated MSE
    (estimate - truth)^2 + variance against the first method.
    """

    method_names: tuple[str, ...]
    point_names: tuple[str, ...]
    true_values: np.ndarray
    mean_bias: np.ndarray
    mean_variance: np.ndarray
    variance_ratio: np.ndarray
    ks_statistic: np.ndarray
    coverage_95: np.ndarray
    improvement_pct: np.ndarray
    estimates: np.ndarray
    variances: np.ndarray

    _METRICS = (("mean_bias", "bias"), ("mean_variance", "var_est"),
                ("variance_ratio", "var_ratio"), ("ks_statistic", "ks"),
                ("coverage_95", "cover95"), ("improvement_pct", "improve%"))

    def to_text(self) -> str:
        out = io.StringIO()
        width = max(len(m) for m in self.method_names) + 2
        header = f"{'method':<{width}}{'metric':<10}" + "".join(
            f"{p:>10}" for p in self.point_names)
        out.write(header + "\n")
        out.write("-" * len(header) + "\n")
        for mi, name in enumerate(self.method_names):
            for attr, label in self._METRICS:
                row = getattr(self, attr)[mi]
                out.write(f"{name:<{width}}{label:<10}" + "".join(
                    f"{v:>10.4f}" for v in row) + "\n")
            out.write("\n")
        return out.getvalue()

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("method,point,true_value,mean_bias,mean_variance,"
                  "variance_ratio,ks_statistic,coverage_95,"
                  "improvement_pct\n")
        for mi, name in enumerate(self.method_names):
            for pi, point in enumerate(self.point_names):
                cells = [name, point, repr(float(self.true_values[pi]))]
                cells += [repr(float(getattr(self, attr)[mi, pi]))
                          for attr, _ in self._METRICS]
                out.write(",".join(cells) + "\n")
        return out.getvalue()


def run_simulation(design: SimDesign, methods, seed: int,
                   method_names=None) -> SimReport:
    """Fit every method on `replicates` fresh datasets and aggregate the
    benchmark metrics at the design's test points.

    The first method is the improvement baseline. Per replicate, all
    methods share one fit seed, so methods with common structure (e.g. the
    base stage) see identical samples — a common-random-numbers coupling
    that sharpens the between-method comparisons without changing any
    per-method distribution.
    """
    design.validate()
    methods = list(methods)
    if not methods:
        raise ValueError("need at least one method")
    names = tuple(method_names) if method_names is not None \
        else tuple(method_label(m) for m in methods)
    if len(names) != len(methods):
        raise ValueError("method_names length mismatch")
    pts = design.test_points
    q = pts.shape[0]
    R = design.replicates
    M = len(methods)
    estimates = np.empty((M, q, R))
    variances = np.empty((M, q, R))
    for r in range(R):
        data = simulate_dataset(design, seed, r)
        fit_seed = mix_key(seed, _TAG_FIT, r)
        for mi, cfg in enumerate(methods):
            cfg_r = replace(cfg, forest=replace(cfg.forest, seed=fit_seed))
            model = fit_boosted(data, cfg_r, track_residuals=False)
            est, _, _, total = variance_components(model, pts)
            estimates[mi, :, r] = est
            variances[mi, :, r] = total
    truth = true_signal(design.signal, pts)
    return summarize_simulation(names, truth, estimates, variances)


def summarize_simulation(method_names, true_values, estimates,
                         variances) -> SimReport:
    """Aggregate raw per-replicate draws into a SimReport (baseline =
    first method)."""
    truth = np.asarray(true_values, dtype=np.float64)
    M, q, R = estimates.shape
    mean_bias = estimates.mean(axis=2) - truth[None, :]
    mean_variance = variances.mean(axis=2)
    spread = estimates.var(axis=2, ddof=1) if R > 1 else \
        np.full((M, q), np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        variance_ratio = mean_variance / spread
    z = normal_quantile(0.975)
    err = np.abs(estimates - truth[None, :, None])
    coverage = 100.0 * (err <= z * np.sqrt(variances)).mean(axis=2)
    mse = err ** 2 + variances
    ks = np.empty((M, q))
    improvement = np.empty((M, q))
    for mi in range(M):
        for pi in range(q):
            # normality is tested against the target distribution
            # N(true value, mean variance estimate): bias and a miscalibrated
            # variance estimate both inflate the distance
            ks[mi, pi] = ks_normality(estimates[mi, pi], float(truth[pi]),
                                      float(mean_variance[mi, pi])) \
                if mean_variance[mi, pi] > 0 else np.nan
            if mse[0, pi].sum() > 0:
                improvement[mi, pi] = performance_improvement(mse[mi, pi],
                                                              mse[0, pi])
            else:  # exact fit everywhere (degenerate designs)
                improvement[mi, pi] = 0.0 if mse[mi, pi].sum() == 0 \
                    else np.nan
    point_names = tuple(f"p{i + 1}" for i in range(q))
    return SimReport(tuple(method_names), point_names, truth, mean_bias,
                     mean_variance, variance_ratio, ks, coverage,
                     improvement, estimates, variances)


def residual_mode_methods(design: SimDesign,
                          tree: TreeConfig = TreeConfig(),
                          modes=("oob", "inbag", "bootstrap")) -> list[
                              BoostConfig]:
    """A baseline forest plus one independent-sample one-step model per
    residual mode."""
    fc = design_forest(design, tree)
    methods = [BoostConfig(forest=fc, steps=0)]
    methods += [BoostConfig(forest=fc, steps=1, pattern=(0, 1),
                            residual_mode=mode) for mode in modes]
    return methods


def compare_residual_modes(design: SimDesign, seed: int,
                           tree: TreeConfig = TreeConfig(),
                           modes=("oob", "inbag", "bootstrap")) -> SimReport:
    """Run the simulation with the one-step independent-sample model under
    each residual-construction mode, against the plain-forest baseline."""
    return run_simulation(design, residual_mode_methods(design, tree, modes),
                          seed)


@dataclass(frozen=True)
class CvReport:
    """Pooled K-fold results: held-out MSE, improvement over the first
    method, and Eq.-style prediction-interval length/coverage per method."""

    method_names: tuple[str, ...]
    mse: np.ndarray
    improvement_pct: np.ndarray
    pi_length: np.ndarray
    pi_coverage: np.ndarray
    n_folds: int

    def to_text(self) -> str:
        width = max(len(m) for m in self.method_names) + 2
        out = io.StringIO()
        out.write(f"{'method':<{width}}{'mse':>12}{'improve%':>12}"
                  f"{'pi_len':>12}{'pi_cover%':>12}\n")
        for mi, name in enumerate(self.method_names):
            out.write(f"{name:<{width}}{self.mse[mi]:>12.4f}"
                      f"{self.improvement_pct[mi]:>12.2f}"
                      f"{self.pi_length[mi]:>12.4f}"
                      f"{self.pi_coverage[mi]:>12.2f}\n")
        return out.getvalue()

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("method,mse,improvement_pct,pi_length,pi_coverage\n")
        for mi, name in enumerate(self.method_names):
            out.write(",".join([name, repr(float(self.mse[mi])),
                                repr(float(self.improvement_pct[mi])),
                                repr(float(self.pi_length[mi])),
                                repr(float(self.pi_coverage[mi]))]) + "\n")
        return out.getvalue()


def run_cv_benchmark(data: Dataset, methods, n_folds: int, seed: int,
                     level: float = 0.95, method_names=None) -> CvReport:
    """K-fold benchmark: fit on each training fold, score the held-out
    fold, pool over folds.

    Improvement compares pooled held-out squared error against the first
    method. Prediction intervals add the model's training noise estimate
    (mean squared base-stage residual) to the point variance.
    """
    methods = list(methods)
    if not methods:
        raise ValueError("need at least one method")
    if n_folds < 2:
        raise ValueError("cross-validation needs at least 2 folds "
                         "(no held-out data otherwise)")
    names = tuple(method_names) if method_names is not None \
        else tuple(method_label(m) for m in methods)
    plan = make_folds(data.n, n_folds, seed)
    M = len(methods)
    sq_err = [[] for _ in range(M)]
    lengths = [[] for _ in range(M)]
    covered = [[] for _ in range(M)]
    z = normal_quantile(0.5 + level / 2.0)
    for f in range(n_folds):
        train = data.subset(plan.train_indices(f))
        test = data.subset(plan.test_indices(f))
        fit_seed = mix_key(seed, _TAG_CVFIT, f)
        for mi, cfg in enumerate(methods):
            cfg_f = replace(cfg, forest=replace(cfg.forest, seed=fit_seed))
            model = fit_boosted(train, cfg_f, track_residuals=True)
            est, _, _, total = variance_components(model, test.features)
            half = z * np.sqrt(total + model.residual_noise_mse)
            sq_err[mi].append((est - test.response) ** 2)
            lengths[mi].append(2.0 * half)
            covered[mi].append(np.abs(est - test.response) <= half)
    mse = np.array([np.concatenate(s).mean() for s in sq_err])
    total_se = np.array([np.concatenate(s).sum() for s in sq_err])
    improvement = 100.0 * (1.0 - total_se / total_se[0])
    pi_length = np.array([np.concatenate(ls).mean() for ls in lengths])
    pi_coverage = np.array(
        [100.0 * np.concatenate(c).mean() for c in covered])
    return CvReport(names, mse, improvement, pi_length, pi_coverage, n_folds)
