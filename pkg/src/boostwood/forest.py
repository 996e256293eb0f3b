"""One forest stage: B trees on random samples, with inclusion bookkeeping.

Each tree is grown on a size-k index set drawn without replacement
(`subsample` mode) or a size-n multiset drawn with replacement
(`bootstrap` mode). The stage records how often each training row entered
each tree's sample — the n-by-B inclusion matrix that the variance engine
consumes — and supports out-of-bag prediction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from ._rng import TAG_GROW, TAG_SAMPLE, mix_key, stream_seeds
from .data import Dataset
from .tree import TreeConfig, TreeModel, max_node_count

SUBSAMPLE = "subsample"
BOOTSTRAP = "bootstrap"


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 500
    subsample_size: int | None = None  # required in subsample mode
    resampling: str = SUBSAMPLE
    tree: TreeConfig = field(default_factory=TreeConfig)
    seed: int = 0

    def validate(self, n: int, d: int) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        if self.resampling not in (SUBSAMPLE, BOOTSTRAP):
            raise ValueError(f"unknown resampling mode {self.resampling!r}")
        if self.resampling == SUBSAMPLE:
            if self.subsample_size is None:
                raise ValueError("subsample_size is required in subsample "
                                 "mode")
            if not 1 <= self.subsample_size <= n:
                raise ValueError(
                    f"subsample_size must be in [1, {n}], got "
                    f"{self.subsample_size}")
        self.tree.validate(d)

    def sample_size(self, n: int) -> int:
        return n if self.resampling == BOOTSTRAP else int(self.subsample_size)


@dataclass(frozen=True)
class ForestStage:
    """A fitted stage: packed trees plus the inclusion-count matrix.

    `inclusion[i, b]` counts how many times training row i entered the
    sample for tree b (0/1 under subsampling). Columns sum to the sample
    size (k, or n under bootstrap).
    """

    feature: np.ndarray    # (B, max_nodes), -1 marks leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_nodes: np.ndarray    # (B,)
    inclusion: np.ndarray  # (n, B) int32
    config: ForestConfig
    n_features: int

    @property
    def n_trees(self) -> int:
        return self.feature.shape[0]

    @property
    def n_train(self) -> int:
        return self.inclusion.shape[0]

    def tree(self, b: int) -> TreeModel:
        m = int(self.n_nodes[b])
        return TreeModel(self.feature[b, :m].copy(),
                         self.threshold[b, :m].copy(),
                         self.left[b, :m].copy(), self.right[b, :m].copy(),
                         self.value[b, :m].copy(),
                         int(self.inclusion[:, b].sum()), self.n_features)

    @property
    def trees(self) -> list[TreeModel]:
        return [self.tree(b) for b in range(self.n_trees)]


@dataclass(frozen=True)
class OobPrediction:
    """Out-of-bag predictions; `fallback[i]` flags rows that were in-bag for
    every tree and therefore received the full-forest prediction instead."""

    values: np.ndarray
    fallback: np.ndarray


def _inclusion_from_indices(indices: np.ndarray, n: int) -> np.ndarray:
    B, _ = indices.shape
    inclusion = np.zeros((n, B), dtype=np.int32)
    np.add.at(inclusion, (indices.ravel(),
                          np.repeat(np.arange(B), indices.shape[1])), 1)
    inclusion.setflags(write=False)
    return inclusion


def fit_forest_from_indices(data: Dataset, indices, config: ForestConfig,
                            grow_key: int | None = None) -> ForestStage:
    """Fit a stage on caller-chosen per-tree index sets.

    This is the deterministic core behind `fit_forest`; it also serves
    complete-enumeration oracles and alternative sampling harnesses. Each
    row of `indices` is the sample multiset for one tree.
    """
    idx = np.ascontiguousarray(indices, dtype=np.int64)
    if idx.ndim != 2 or idx.shape[0] < 1 or idx.shape[1] < 1:
        raise ValueError("indices must be a non-empty (B, k) array")
    if idx.min() < 0 or idx.max() >= data.n:
        raise ValueError("sample indices out of range")
    config.tree.validate(data.d)
    B, ksz = idx.shape
    # default key = stage 0 of a boosted fit, so a plain forest and the base
    # stage of a boosted model with the same seed are bitwise identical
    key = mix_key(config.seed, TAG_GROW, 0) if grow_key is None else grow_key
    seeds = stream_seeds(key, B)
    cap = max_node_count(ksz, config.tree.min_leaf)
    feat, thr, left, right, value, n_nodes = _kernels.grow_forest(
        data.features, data.response, idx, seeds,
        config.tree.resolved_mtry(data.d), config.tree.min_leaf,
        config.tree.max_depth or 0, config.tree.split_tries, cap)
    for a in (feat, thr, left, right, value, n_nodes):
        a.setflags(write=False)
    return ForestStage(feat, thr, left, right, value, n_nodes,
                       _inclusion_from_indices(idx, data.n), config, data.d)


def draw_indices(data_n: int, config: ForestConfig,
                 sample_key: int | None = None) -> np.ndarray:
    """Draw the per-tree index sets for a stage (counter-seeded per tree)."""
    key = mix_key(config.seed, TAG_SAMPLE, 0) if sample_key is None \
        else sample_key
    seeds = stream_seeds(key, config.n_trees)
    if config.resampling == BOOTSTRAP:
        return _kernels.draw_bootstraps(data_n, seeds)
    return _kernels.draw_subsamples(data_n, config.sample_size(data_n), seeds)


def fit_forest(data: Dataset, config: ForestConfig) -> ForestStage:
    """Draw exactly B samples and fit one tree per sample."""
    config.validate(data.n, data.d)
    return fit_forest_from_indices(data, draw_indices(data.n, config), config)


def _check_query(stage: ForestStage, x) -> tuple[np.ndarray, bool]:
    xa = np.asarray(x, dtype=np.float64)
    single = xa.ndim == 1
    if single:
        xa = xa[None, :]
    if xa.ndim != 2 or xa.shape[1] != stage.n_features:
        raise ValueError(
            f"query has {xa.shape[-1]} features, forest expects "
            f"{stage.n_features}")
    if not np.all(np.isfinite(xa)):
        raise ValueError("query contains non-finite values")
    return np.ascontiguousarray(xa), single


def tree_matrix(stage: ForestStage, x) -> np.ndarray:
    """Per-tree predictions: (B,) for a single query, else (B, m)."""
    xa, single = _check_query(stage, x)
    out = _kernels.predict_matrix(stage.feature, stage.threshold, stage.left,
                                  stage.right, stage.value, xa)
    return out[:, 0] if single else out


def predict_forest(stage: ForestStage, x) -> float | np.ndarray:
    """Arithmetic mean of the per-tree predictions."""
    xa, single = _check_query(stage, x)
    out = _kernels.predict_matrix(stage.feature, stage.threshold, stage.left,
                                  stage.right, stage.value, xa).mean(axis=0)
    return float(out[0]) if single else out


def predict_oob(stage: ForestStage, data: Dataset) -> OobPrediction:
    """Per-row mean over trees whose sample excluded the row.

    Rows in-bag for every tree fall back to the full-forest prediction and
    are flagged. `data` must be the stage's training dataset.
    """
    if data.n != stage.n_train:
        raise ValueError(
            f"dataset has {data.n} rows, stage was trained on "
            f"{stage.n_train}")
    if data.d != stage.n_features:
        raise ValueError("dataset width does not match the stage")
    oob_sum, oob_cnt, full_sum = _kernels.oob_accumulate(
        stage.feature, stage.threshold, stage.left, stage.right, stage.value,
        stage.inclusion, data.features)
    fallback = oob_cnt == 0
    values = np.where(fallback, full_sum / stage.n_trees,
                      oob_sum / np.maximum(oob_cnt, 1))
    return OobPrediction(values, fallback)


def permuted_stage(stage: ForestStage, permutation) -> ForestStage:
    """The same stage with trees reordered (for invariance checks)."""
    p = np.asarray(permutation, dtype=np.int64)
    if sorted(p.tolist()) != list(range(stage.n_trees)):
        raise ValueError("not a permutation of the tree indices")
    return replace(stage, feature=stage.feature[p],
                   threshold=stage.threshold[p], left=stage.left[p],
                   right=stage.right[p], value=stage.value[p],
                   n_nodes=stage.n_nodes[p], inclusion=stage.inclusion[:, p])


def bernoulli_subsets(n: int, k: int, expected_trees: int,
                      seed: int) -> np.ndarray:
    """Keep each of the C(n, k) subsets independently with probability
    expected_trees / C(n, k). Test harness for comparing sampling schemes;
    only feasible for small n."""
    from itertools import combinations
    from math import comb
    total = comb(n, k)
    if expected_trees > total:
        raise ValueError("expected_trees exceeds the number of subsets")
    rng = np.random.default_rng([seed, 0x4245524E])
    keep = rng.random(total) < expected_trees / total
    subsets = [c for c, keep_it in zip(combinations(range(n), k), keep)
               if keep_it]
    if not subsets:
        return np.empty((0, k), dtype=np.int64)
    return np.asarray(subsets, dtype=np.int64)


def distinct_subsets(n: int, k: int, count: int, seed: int) -> np.ndarray:
    """Sample `count` distinct k-subsets uniformly (small n only); the
    exactly-B counterpart to `bernoulli_subsets`."""
    from itertools import combinations
    from math import comb
    total = comb(n, k)
    if count > total:
        raise ValueError("count exceeds the number of distinct subsets")
    rng = np.random.default_rng([seed, 0x44495354])
    chosen = rng.choice(total, size=count, replace=False)
    all_subsets = list(combinations(range(n), k))
    return np.asarray([all_subsets[i] for i in chosen], dtype=np.int64)
