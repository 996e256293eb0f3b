"""Residual boosting of forest stages.

A boosted model is an ordered list of forest stages: stage 0 fits the
response, stage j >= 1 fits what the earlier stages left unexplained. The
residuals fed to stage j use, per `residual_mode`:

    oob        out-of-bag predictions of the earlier stages (default; a
               row's own trees never predict it, so the residuals are not
               contaminated by in-sample fit),
    inbag      full-forest predictions,
    bootstrap  full-forest predictions, with every stage grown on full-size
               bootstrap resamples instead of subsamples.

Which stages share sample index sets is expressed by a pattern: a label per
stage in restricted-growth form (each new label at most one above the
running maximum, starting at 0). Stages with equal labels reuse identical
index sets but grow their trees afresh on their own residuals. Pattern
(0, 0) is the shared-sample one-step variant, (0, 1) the independent one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.stats import chi2

from ._rng import TAG_GROW, TAG_SAMPLE, mix_key
from .data import Dataset
from .forest import (BOOTSTRAP, ForestConfig, ForestStage, draw_indices,
                     fit_forest_from_indices, predict_forest, predict_oob)
from .variance import ij_covariance_matrix

OOB = "oob"
INBAG = "inbag"
BOOT_RESAMPLE = "bootstrap"
RESIDUAL_MODES = (OOB, INBAG, BOOT_RESAMPLE)


class SingularCovarianceError(Exception):
    """The stopping test's covariance matrix is not invertible; try fewer
    or better-separated test points."""


def is_restricted_growth(pattern: Sequence[int]) -> bool:
    top = -1
    for label in pattern:
        if label < 0 or label > top + 1:
            return False
        top = max(top, label)
    return len(pattern) > 0


@dataclass(frozen=True)
class BoostConfig:
    """Configuration of a boosted model.

    `steps` counts boosting steps beyond the base forest, so a plain
    forest is steps=0. `pattern` defaults to all-independent samples,
    (0, 1, ..., steps). `stage_forests` optionally overrides the forest
    settings per stage (e.g. deeper trees for later stages); tree counts
    must agree across stages, and stages sharing a pattern label must agree
    on subsample size and resampling.
    """

    forest: ForestConfig
    steps: int = 1
    pattern: tuple[int, ...] | None = None
    residual_mode: str = OOB
    stage_forests: tuple[ForestConfig, ...] | None = None

    @property
    def n_stages(self) -> int:
        return self.steps + 1

    def resolved_pattern(self) -> tuple[int, ...]:
        if self.pattern is None:
            return tuple(range(self.n_stages))
        return tuple(int(p) for p in self.pattern)

    def stage_config(self, j: int) -> ForestConfig:
        base = self.stage_forests[j] if self.stage_forests is not None \
            else self.forest
        if self.residual_mode == BOOT_RESAMPLE:
            base = replace(base, resampling=BOOTSTRAP)
        return base

    @property
    def seed(self) -> int:
        return self.forest.seed

    def validate(self, n: int, d: int) -> None:
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if self.residual_mode not in RESIDUAL_MODES:
            raise ValueError(f"unknown residual mode {self.residual_mode!r}")
        pattern = self.resolved_pattern()
        if len(pattern) != self.n_stages:
            raise ValueError(
                f"pattern length {len(pattern)} != steps + 1 = "
                f"{self.n_stages}")
        if not is_restricted_growth(pattern):
            raise ValueError(
                f"pattern {pattern} is not in restricted-growth form")
        if self.stage_forests is not None and \
                len(self.stage_forests) != self.n_stages:
            raise ValueError("stage_forests must list one config per stage")
        by_label: dict[int, ForestConfig] = {}
        for j, label in enumerate(pattern):
            cfg = self.stage_config(j)
            cfg.validate(n, d)
            if cfg.n_trees != self.stage_config(0).n_trees:
                raise ValueError("all stages must use the same tree count")
            if label in by_label:
                prev = by_label[label]
                if (prev.subsample_size, prev.resampling) != \
                        (cfg.subsample_size, cfg.resampling):
                    raise ValueError(
                        f"stages sharing label {label} disagree on sample "
                        f"settings")
            else:
                by_label[label] = cfg


@dataclass(frozen=True)
class BoostedForest:
    """Fitted stages plus the configuration that produced them.

    `stage_residual_mse[j]` is the mean squared training residual after
    stages 0..j were subtracted (residual-mode predictions); entry 0 is the
    noise-level estimate that prediction intervals use.
    """

    stages: tuple[ForestStage, ...]
    config: BoostConfig
    training_n: int
    n_features: int
    feature_names: tuple[str, ...] | None = None
    stage_residual_mse: tuple[float, ...] | None = None

    @property
    def pattern(self) -> tuple[int, ...]:
        return self.config.resolved_pattern()

    @property
    def n_trees(self) -> int:
        return self.stages[0].n_trees

    @property
    def residual_noise_mse(self) -> float:
        if self.stage_residual_mse is None:
            raise ValueError("model was fit without residual tracking")
        return self.stage_residual_mse[0]


def _stage_training_predictions(stage: ForestStage, data: Dataset,
                                residual_mode: str) -> np.ndarray:
    if residual_mode == OOB:
        return predict_oob(stage, data).values
    return predict_forest(stage, data.features)


def fit_boosted(data: Dataset, config: BoostConfig,
                track_residuals: bool = True) -> BoostedForest:
    """Fit the base stage and `steps` residual stages.

    With `track_residuals` the per-stage training residual summary is
    recorded (one extra out-of-bag pass for the last stage).
    """
    config.validate(data.n, data.d)
    pattern = config.resolved_pattern()
    group_indices: dict[int, np.ndarray] = {}
    stages: list[ForestStage] = []
    residual = data.response
    mses: list[float] = []
    for j, label in enumerate(pattern):
        cfg = config.stage_config(j)
        if label not in group_indices:
            group_indices[label] = draw_indices(
                data.n, cfg, sample_key=mix_key(config.seed, TAG_SAMPLE,
                                                label))
        stage_data = data.with_response(residual)
        stage = fit_forest_from_indices(
            stage_data, group_indices[label], cfg,
            grow_key=mix_key(config.seed, TAG_GROW, j))
        stages.append(stage)
        last = j == len(pattern) - 1
        if not last or track_residuals:
            residual = residual - _stage_training_predictions(
                stage, stage_data, config.residual_mode)
            mses.append(float(np.mean(residual ** 2)))
    return BoostedForest(tuple(stages), config, data.n, data.d,
                         data.feature_names,
                         tuple(mses) if track_residuals else None)


def predict_boosted(model: BoostedForest, x) -> float | np.ndarray:
    """Sum of the stage predictions at x (vector or matrix of rows)."""
    xa = np.asarray(x, dtype=np.float64)
    single = xa.ndim == 1
    out = predict_forest(model.stages[0], x)
    for stage in model.stages[1:]:
        out = out + predict_forest(stage, x)
    return float(out) if single else out


def count_variants(steps: int) -> int:
    """Number of distinct sample-sharing patterns for `steps` boosting
    steps: a_{steps+1}, from the table a[n][k] = k*a[n-1][k] + a[n-1][k-1]
    with a[k][k] = a[n][1] = 1."""
    if steps < 0:
        raise ValueError("steps must be non-negative")
    n = steps + 1
    prev = {1: 1}  # a_{1, k}
    for size in range(2, n + 1):
        prev = {k: k * prev.get(k, 0) + prev.get(k - 1, 0)
                for k in range(1, size + 1)}
    return sum(prev.values())


def enumerate_patterns(steps: int) -> list[tuple[int, ...]]:
    """All restricted-growth label strings of length steps + 1, in
    lexicographic order. Its length equals count_variants(steps)."""
    if steps < 0:
        raise ValueError("steps must be non-negative")
    out: list[tuple[int, ...]] = []

    def extend(prefix: tuple[int, ...], top: int) -> None:
        if len(prefix) == steps + 1:
            out.append(prefix)
            return
        for label in range(top + 2):
            extend(prefix + (label,), max(top, label))

    extend((0,), 0)
    return out


@dataclass(frozen=True)
class StopTestResult:
    statistic: float
    threshold: float
    continue_boosting: bool


def zero_mean_chi_square(values, cov, level: float = 0.05) -> StopTestResult:
    """Test whether a jointly normal vector has zero mean: statistic
    v' cov^{-1} v against the upper-level chi-square quantile with
    q = len(v) degrees of freedom."""
    v = np.asarray(values, dtype=np.float64).ravel()
    S = np.asarray(cov, dtype=np.float64)
    if S.shape != (v.size, v.size):
        raise ValueError("covariance shape does not match the value vector")
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    threshold = float(chi2.ppf(1.0 - level, df=v.size))
    if np.all(v == 0.0):
        # degenerate stage predicting exactly zero: nothing left to explain
        return StopTestResult(0.0, threshold, False)
    try:
        factor = cho_factor(S)
    except (LinAlgError, ValueError) as exc:
        raise SingularCovarianceError(
            f"covariance matrix is singular or not positive definite "
            f"({exc}); reduce or separate the test points") from None
    statistic = float(v @ cho_solve(factor, v))
    return StopTestResult(statistic, threshold, statistic > threshold)


def stop_test(model: BoostedForest, extra_stage: ForestStage, test_points,
              level: float = 0.05) -> StopTestResult:
    """Should boosting continue past `model`?

    `extra_stage` must be a candidate next stage fit on the current
    residuals. Its predictions at q test points are tested for jointly
    zero mean using the stage's covariance matrix estimate; a significant
    statistic means the candidate still captures signal.
    """
    pts = np.asarray(test_points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.shape[0] < 1:
        raise ValueError("need at least one test point")
    if pts.shape[1] != model.n_features:
        raise ValueError("test points do not match the model's features")
    values = predict_forest(extra_stage, pts)
    cov = ij_covariance_matrix(extra_stage, pts)
    return zero_mean_chi_square(values, cov, level)
