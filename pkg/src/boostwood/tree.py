"""Least-squares regression trees grown on a sample multiset.

The tree is the base learner averaged by every forest stage. Growth is
greedy CART: at each node, `mtry` candidate features are drawn and the
split minimising the summed child squared error is taken, with thresholds
at midpoints between consecutive distinct sorted values. Routing is
"left iff feature value <= threshold".
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._rng import TAG_GROW, mix_key, stream_seeds
from .data import Dataset


@dataclass(frozen=True)
class TreeConfig:
    """Growth controls.

    mtry=None means ceil(d/3), the usual regression default. min_leaf is a
    hard lower bound on leaf size (nodes below 2*min_leaf are never split).
    max_depth=None is unlimited. split_tries=0 examines every midpoint;
    a positive value samples that many candidate midpoints per feature.
    """

    mtry: int | None = None
    min_leaf: int = 5
    max_depth: int | None = None
    split_tries: int = 0
    seed: int = 0

    def resolved_mtry(self, d: int) -> int:
        m = self.mtry if self.mtry is not None else max(1, math.ceil(d / 3))
        if not 1 <= m <= d:
            raise ValueError(f"mtry must be in [1, {d}], got {m}")
        return m

    def validate(self, d: int) -> None:
        self.resolved_mtry(d)
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be at least 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be at least 1 when set")
        if self.split_tries < 0:
            raise ValueError("split_tries must be non-negative")


def max_node_count(k: int, min_leaf: int) -> int:
    # At most floor(k / min_leaf) leaves, hence 2*leaves - 1 nodes.
    return max(3, 2 * (k // max(1, min_leaf)) + 1)


@dataclass(frozen=True)
class TreeModel:
    """A fitted tree in flat-array form.

    feature[s] == -1 marks a leaf; value[s] is the node's training mean
    (stored for internal nodes too). k is the size of the sample multiset
    the tree was grown on.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    k: int
    n_features: int

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))


def fit_tree(data: Dataset, config: TreeConfig = TreeConfig(),
             indices=None) -> TreeModel:
    """Grow one tree on `data` (optionally restricted to `indices`).

    Deterministic for a fixed (index order, config.seed).
    """
    config.validate(data.d)
    idx = np.arange(data.n, dtype=np.int64) if indices is None \
        else np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("cannot fit a tree on an empty sample")
    if idx.min() < 0 or idx.max() >= data.n:
        raise ValueError("sample indices out of range")
    seeds = stream_seeds(mix_key(config.seed, TAG_GROW), 1)
    cap = max_node_count(idx.size, config.min_leaf)
    feat, thr, left, right, value, n_nodes = _kernels.grow_forest(
        data.features, data.response, idx[None, :], seeds,
        config.resolved_mtry(data.d), config.min_leaf,
        config.max_depth or 0, config.split_tries, cap)
    m = int(n_nodes[0])
    return TreeModel(feat[0, :m].copy(), thr[0, :m].copy(),
                     left[0, :m].copy(), right[0, :m].copy(),
                     value[0, :m].copy(), int(idx.size), data.d)


def predict_tree(model: TreeModel, x) -> float | np.ndarray:
    """Evaluate the tree at a query vector or matrix of query rows."""
    xa = np.asarray(x, dtype=np.float64)
    single = xa.ndim == 1
    if single:
        xa = xa[None, :]
    if xa.ndim != 2 or xa.shape[1] != model.n_features:
        raise ValueError(
            f"query has {xa.shape[-1]} features, tree expects "
            f"{model.n_features}")
    out = _kernels.predict_matrix(
        model.feature[None, :], model.threshold[None, :],
        model.left[None, :], model.right[None, :], model.value[None, :],
        np.ascontiguousarray(xa))[0]
    return float(out[0]) if single else out


def node_depths(model: TreeModel) -> np.ndarray:
    """Depth of every node (root = 0); useful for structural checks."""
    depths = np.zeros(model.n_nodes, dtype=np.int64)
    stack = [0]
    while stack:
        s = stack.pop()
        if model.feature[s] >= 0:
            for child in (model.left[s], model.right[s]):
                depths[child] = depths[s] + 1
                stack.append(int(child))
    return depths
