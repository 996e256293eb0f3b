"""Infinitesimal-jackknife variance machinery for forest ensembles.

The building block is the per-row empirical covariance, over trees, between
a row's inclusion count and the tree predictions at a query point:

    c_i = (1/B) sum_b N[i, b] * T[b]  -  mean_b(N[i, :]) * mean_b(T)

(population normalisation, 1/B). Squaring and summing over rows gives the
variance estimate for a single forest; products of covariances from two
forests give their covariance estimate. For a boosted model, stages that
share sample index sets form a group whose tree predictions are summed
before the covariance is taken; the estimate at a point x is then

    v_ij   = sum_i ( sum_groups c_i^(g) )^2
    zeta   = sum_groups var_b( group tree sums )
    total  = v_ij + zeta / B

The zeta/B term compensates the Monte Carlo noise from averaging only B of
the possible samples. With a single group this reduces to the same-sample
form; with singleton groups, to the independent-sample form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .forest import ForestStage, tree_matrix

if TYPE_CHECKING:  # pragma: no cover
    from .boost import BoostedForest


@dataclass(frozen=True)
class PredictionWithVariance:
    """A point estimate with its variance decomposition.

    total == ij_variance + tree_variance / n_trees holds exactly;
    ij_variance and tree_variance are both non-negative by construction
    (a sum of squares and an empirical variance).
    """

    estimate: float
    ij_variance: float
    tree_variance: float
    total: float
    n_trees: int


def _as_matrix(values, name: str) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None]
    if v.ndim != 2:
        raise ValueError(f"{name} must be one or two dimensional")
    return v


def inclusion_covariances(inclusion, tree_values) -> np.ndarray:
    """c[i, j]: covariance over trees of inclusion row i and value column j.

    `inclusion` is (n, B); `tree_values` is (B,) or (B, q). Uses the 1/B
    population normalisation.
    """
    T = _as_matrix(tree_values, "tree_values")
    N = np.asarray(inclusion, dtype=np.float64)
    if N.ndim != 2 or N.shape[1] != T.shape[0]:
        raise ValueError(
            f"inclusion is {np.asarray(inclusion).shape}, incompatible with "
            f"{T.shape[0]} tree values")
    B = T.shape[0]
    if B < 2:
        raise ValueError("need at least two trees for a covariance")
    # centred form: exact zeros for constant columns, no cancellation
    Nc = N - N.mean(axis=1, keepdims=True)
    Tc = T - T.mean(axis=0, keepdims=True)
    return Nc @ Tc / B


def ij_variance_single(inclusion, tree_values) -> float:
    """Variance estimate for one forest at one point: sum_i c_i^2."""
    c = inclusion_covariances(inclusion, np.asarray(tree_values).ravel())
    return float(np.sum(c * c))


def ij_covariance_pair(inclusion0, inclusion1, values0, values1) -> float:
    """Covariance estimate across two forests: sum_i c_i^(0) * c_i^(1).

    May be negative. Both forests must have the same tree count and the
    same training rows.
    """
    if np.asarray(inclusion0).shape[1] != np.asarray(inclusion1).shape[1]:
        raise ValueError("the two forests have different tree counts")
    c0 = inclusion_covariances(inclusion0, np.asarray(values0).ravel())
    c1 = inclusion_covariances(inclusion1, np.asarray(values1).ravel())
    if c0.shape != c1.shape:
        raise ValueError("the two forests index different training rows")
    return float(np.sum(c0 * c1))


def ij_covariance_matrix(stage: ForestStage, test_points) -> np.ndarray:
    """q-by-q covariance matrix of one forest across q query points.

    Entry (s, t) is sum_i c_i(x_s) * c_i(x_t); the result is symmetric
    positive semidefinite by construction (a sum of outer products).
    """
    pts = np.asarray(test_points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.shape[0] < 1:
        raise ValueError("need at least one test point")
    if stage.n_trees < 2:
        raise ValueError("need at least two trees for a covariance")
    c = inclusion_covariances(stage.inclusion, tree_matrix(stage, pts))
    return c.T @ c


def _pattern_groups(pattern: Sequence[int]) -> dict[int, list[int]]:
    groups: dict[int, list[int]] = {}
    for j, label in enumerate(pattern):
        groups.setdefault(int(label), []).append(j)
    return groups


def variance_components(model: "BoostedForest", X) -> tuple[np.ndarray, ...]:
    """Vectorised decomposition at query rows X: (estimate, v_ij,
    tree_variance, total), each of length m."""
    Xq = np.asarray(X, dtype=np.float64)
    if Xq.ndim == 1:
        Xq = Xq[None, :]
    B = model.stages[0].n_trees
    if B < 2:
        raise ValueError("variance estimation needs at least two trees")
    m = Xq.shape[0]
    estimate = np.zeros(m)
    zeta = np.zeros(m)
    cov_sum = np.zeros((model.training_n, m))
    for label, stage_ids in _pattern_groups(model.pattern).items():
        S = np.zeros((B, m))
        for j in stage_ids:
            Tj = tree_matrix(model.stages[j], Xq)
            S += Tj
            estimate += Tj.mean(axis=0)
        cov_sum += inclusion_covariances(model.stages[stage_ids[0]].inclusion,
                                         S)
        zeta += S.var(axis=0)
    v_ij = np.sum(cov_sum * cov_sum, axis=0)
    return estimate, v_ij, zeta, v_ij + zeta / B


def _single(model: "BoostedForest", x) -> PredictionWithVariance:
    xa = np.asarray(x, dtype=np.float64)
    if xa.ndim != 1:
        raise ValueError("expected a single feature vector")
    est, v_ij, zeta, total = variance_components(model, xa[None, :])
    return PredictionWithVariance(float(est[0]), float(v_ij[0]),
                                  float(zeta[0]), float(total[0]),
                                  model.stages[0].n_trees)


def predict_with_variance(model: "BoostedForest", x) -> PredictionWithVariance:
    """Estimate and total variance at x for any sample-sharing pattern."""
    return _single(model, x)


def variance_variant1(model: "BoostedForest", x) -> PredictionWithVariance:
    """Same-samples form: all stages must share one sample index set."""
    if len(set(model.pattern)) != 1:
        raise ValueError(
            f"variance_variant1 requires a shared-sample pattern, got "
            f"{model.pattern}")
    return _single(model, x)


def variance_variant2(model: "BoostedForest", x) -> PredictionWithVariance:
    """Independent/mixed-samples form: at least two distinct sample groups."""
    if len(set(model.pattern)) < 2:
        raise ValueError(
            f"variance_variant2 requires at least two sample groups, got "
            f"{model.pattern}")
    return _single(model, x)
