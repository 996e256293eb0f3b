"""Datasets, CSV ingestion and cross-validation folds."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np


class DataError(Exception):
    """Raised for malformed input files or invalid dataset shapes."""


@dataclass(frozen=True)
class Dataset:
    """A numeric regression dataset: features (n, d) and response (n,).

    Arrays are made read-only on construction; instances are safe to share
    across workers.
    """

    features: np.ndarray
    response: np.ndarray
    feature_names: tuple[str, ...] | None = None
    response_name: str | None = None

    def __post_init__(self):
        X = np.ascontiguousarray(self.features, dtype=np.float64)
        y = np.ascontiguousarray(self.response, dtype=np.float64)
        if X.ndim != 2:
            raise DataError("features must be a 2-d matrix")
        if y.ndim != 1:
            raise DataError("response must be a 1-d vector")
        if X.shape[0] != y.shape[0]:
            raise DataError(
                f"row mismatch: {X.shape[0]} feature rows, "
                f"{y.shape[0]} response values")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise DataError("dataset needs at least one row and one feature")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise DataError("dataset contains non-finite values")
        if self.feature_names is not None and \
                len(self.feature_names) != X.shape[1]:
            raise DataError("feature_names length does not match d")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "response", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices)
        return Dataset(self.features[idx], self.response[idx],
                       self.feature_names, self.response_name)

    def with_response(self, response) -> "Dataset":
        """Same features, different response (used for residual stages)."""
        return Dataset(self.features, response, self.feature_names,
                       self.response_name)


def _parse_cell(text: str, row: int, col_label: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise DataError(
            f"non-numeric cell {text!r} at data row {row}, "
            f"column {col_label}") from None
    if not math.isfinite(v):
        raise DataError(
            f"non-finite cell {text!r} at data row {row}, column {col_label}")
    return v


def load_csv(path, target_column, has_header: bool = True) -> Dataset:
    """Read a numeric CSV and split off the target column.

    `target_column` is a header name (requires `has_header`) or a 0-based
    column index. Row order is preserved; every cell must parse as a finite
    float. Errors name the offending data row (1-based) and column.
    """
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"empty file: {path}")

    header: list[str] | None = None
    if has_header:
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise DataError(f"no data rows in {path}")

    width = len(rows[0])
    if width < 2:
        raise DataError("need at least two columns (features and target)")

    if isinstance(target_column, str) and not has_header:
        raise DataError("target given by name but the file has no header")
    if isinstance(target_column, str):
        if target_column not in header:
            raise DataError(
                f"target column {target_column!r} not in header {header}")
        tcol = header.index(target_column)
    else:
        tcol = int(target_column)
        if not 0 <= tcol < width:
            raise DataError(
                f"target column index {tcol} out of range for {width} columns")

    names = header if header is not None else [str(i) for i in range(width)]
    X = np.empty((len(rows), width - 1), dtype=np.float64)
    y = np.empty(len(rows), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(
                f"data row {i + 1} has {len(row)} cells, expected {width}")
        fj = 0
        for j, cell in enumerate(row):
            v = _parse_cell(cell.strip(), i + 1, names[j])
            if j == tcol:
                y[i] = v
            else:
                X[i, fj] = v
                fj += 1
    feature_names = tuple(nm for j, nm in enumerate(names) if j != tcol) \
        if header is not None else None
    response_name = names[tcol] if header is not None else None
    return Dataset(X, y, feature_names, response_name)


def save_csv(data: Dataset, path, with_header: bool = True) -> None:
    """Write a dataset back to CSV; floats use repr so a reload is exact."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if with_header:
            names = data.feature_names or tuple(
                f"x{j}" for j in range(data.d))
            w.writerow(list(names) + [data.response_name or "y"])
        for i in range(data.n):
            w.writerow([repr(float(v)) for v in data.features[i]] +
                       [repr(float(data.response[i]))])


def load_query_csv(path, has_header: bool = True) -> np.ndarray:
    """Read a feature-only CSV (prediction queries): all columns numeric."""
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"empty file: {path}")
    if has_header:
        rows = rows[1:]
        if not rows:
            raise DataError(f"no data rows in {path}")
    width = len(rows[0])
    X = np.empty((len(rows), width), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(
                f"data row {i + 1} has {len(row)} cells, expected {width}")
        for j, cell in enumerate(row):
            X[i, j] = _parse_cell(cell.strip(), i + 1, str(j))
    return X


@dataclass(frozen=True)
class FoldPlan:
    """Balanced k-fold assignment: fold index in [0, n_folds) per row."""

    assignments: np.ndarray
    n_folds: int

    def __post_init__(self):
        a = np.asarray(self.assignments, dtype=np.int64)
        a.setflags(write=False)
        object.__setattr__(self, "assignments", a)

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def make_folds(n: int, n_folds: int, seed: int) -> FoldPlan:
    """Deterministic balanced folds: sizes differ by at most one."""
    if n_folds < 1:
        raise ValueError("fold count must be at least 1")
    if n_folds > n:
        raise ValueError(f"cannot make {n_folds} folds from {n} rows")
    rng = np.random.default_rng([seed, 0x464F4C44])
    perm = rng.permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    base = n // n_folds
    extra = n % n_folds
    pos = 0
    for f in range(n_folds):
        size = base + (1 if f < extra else 0)
        assignments[perm[pos:pos + size]] = f
        pos += size
    return FoldPlan(assignments, n_folds)
