"""Versioned JSON persistence for boosted models.

The archive stores the full configuration, training metadata, per-tree
sample multisets and flat tree arrays. Floats round-trip through JSON via
repr, so a saved model reproduces its predictions and variance estimates
bit for bit.
"""

from __future__ import annotations

import json

import numpy as np

from .boost import BoostConfig, BoostedForest
from .forest import ForestConfig, ForestStage, _inclusion_from_indices
from .tree import TreeConfig

FORMAT_VERSION = 1


class ArchiveError(Exception):
    """Raised for unreadable, malformed or wrong-version archives."""


def _tree_config_dict(cfg: TreeConfig) -> dict:
    return {"mtry": cfg.mtry, "min_leaf": cfg.min_leaf,
            "max_depth": cfg.max_depth, "split_tries": cfg.split_tries,
            "seed": cfg.seed}


def _forest_config_dict(cfg: ForestConfig) -> dict:
    return {"n_trees": cfg.n_trees, "subsample_size": cfg.subsample_size,
            "resampling": cfg.resampling, "tree": _tree_config_dict(cfg.tree),
            "seed": cfg.seed}


def _tree_config_from(d: dict) -> TreeConfig:
    return TreeConfig(mtry=d["mtry"], min_leaf=d["min_leaf"],
                      max_depth=d["max_depth"],
                      split_tries=d["split_tries"], seed=d["seed"])


def _forest_config_from(d: dict) -> ForestConfig:
    return ForestConfig(n_trees=d["n_trees"],
                        subsample_size=d["subsample_size"],
                        resampling=d["resampling"],
                        tree=_tree_config_from(d["tree"]), seed=d["seed"])


def _stage_dict(stage: ForestStage) -> dict:
    samples = []
    trees = []
    n = stage.n_train
    rows = np.arange(n)
    for b in range(stage.n_trees):
        counts = stage.inclusion[:, b]
        samples.append(np.repeat(rows, counts).tolist())
        m = int(stage.n_nodes[b])
        trees.append({
            "feature": stage.feature[b, :m].tolist(),
            "threshold": stage.threshold[b, :m].tolist(),
            "left": stage.left[b, :m].tolist(),
            "right": stage.right[b, :m].tolist(),
            "value": stage.value[b, :m].tolist(),
        })
    return {"samples": samples, "trees": trees}


def _stage_from(d: dict, config: ForestConfig, n: int,
                n_features: int) -> ForestStage:
    trees = d["trees"]
    B = len(trees)
    if B < 1:
        raise ArchiveError("stage has no trees")
    sizes = [len(t["feature"]) for t in trees]
    cap = max(max(sizes), 1)
    feat = np.full((B, cap), -1, dtype=np.int64)
    thr = np.zeros((B, cap), dtype=np.float64)
    left = np.full((B, cap), -1, dtype=np.int64)
    right = np.full((B, cap), -1, dtype=np.int64)
    value = np.zeros((B, cap), dtype=np.float64)
    n_nodes = np.zeros(B, dtype=np.int64)
    for b, t in enumerate(trees):
        m = sizes[b]
        n_nodes[b] = m
        feat[b, :m] = t["feature"]
        thr[b, :m] = t["threshold"]
        left[b, :m] = t["left"]
        right[b, :m] = t["right"]
        value[b, :m] = t["value"]
    samples = d["samples"]
    if len(samples) != B:
        raise ArchiveError("sample list count does not match tree count")
    ksizes = {len(s) for s in samples}
    if len(ksizes) != 1:
        raise ArchiveError("trees with unequal sample sizes in one stage")
    idx = np.asarray(samples, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ArchiveError("sample indices out of range")
    for a in (feat, thr, left, right, value, n_nodes):
        a.setflags(write=False)
    return ForestStage(feat, thr, left, right, value, n_nodes,
                       _inclusion_from_indices(idx, n), config, n_features)


def model_to_dict(model: BoostedForest) -> dict:
    cfg = model.config
    return {
        "format_version": FORMAT_VERSION,
        "config": {
            "steps": cfg.steps,
            "pattern": list(cfg.resolved_pattern()),
            "residual_mode": cfg.residual_mode,
            "forest": _forest_config_dict(cfg.forest),
            "stage_forests": None if cfg.stage_forests is None else
                [_forest_config_dict(c) for c in cfg.stage_forests],
        },
        "training": {
            "n": model.training_n,
            "d": model.n_features,
            "feature_names": None if model.feature_names is None else
                list(model.feature_names),
            "stage_residual_mse": None if model.stage_residual_mse is None
                else list(model.stage_residual_mse),
            "seed": cfg.seed,
        },
        "stages": [_stage_dict(s) for s in model.stages],
    }


def model_from_dict(doc: dict) -> BoostedForest:
    try:
        version = doc["format_version"]
        if version != FORMAT_VERSION:
            raise ArchiveError(
                f"archive format_version {version} is not supported "
                f"(this build reads version {FORMAT_VERSION})")
        c = doc["config"]
        config = BoostConfig(
            forest=_forest_config_from(c["forest"]),
            steps=c["steps"],
            pattern=tuple(c["pattern"]),
            residual_mode=c["residual_mode"],
            stage_forests=None if c["stage_forests"] is None else
                tuple(_forest_config_from(s) for s in c["stage_forests"]))
        t = doc["training"]
        stages = tuple(
            _stage_from(sd, config.stage_config(j), t["n"], t["d"])
            for j, sd in enumerate(doc["stages"]))
        if len(stages) != config.n_stages:
            raise ArchiveError("stage count does not match the config")
        mses = t["stage_residual_mse"]
        return BoostedForest(stages, config, t["n"], t["d"],
                             None if t["feature_names"] is None else
                             tuple(t["feature_names"]),
                             None if mses is None else tuple(mses))
    except ArchiveError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ArchiveError(f"malformed archive: {exc}") from None


def save_model(model: BoostedForest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> BoostedForest:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ArchiveError(f"no such archive: {path}") from None
    except json.JSONDecodeError as exc:
        raise ArchiveError(f"archive is not valid JSON: {exc}") from None
    return model_from_dict(doc)
