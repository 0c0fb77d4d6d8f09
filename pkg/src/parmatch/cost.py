"""Pairwise transport costs between two populations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NormalizationError
from .matrixio import TuningMatrix

COSINE = "cosine_distance"
SQEUCLIDEAN = "squared_euclidean"


@dataclass(frozen=True)
class CostMatrix:
    data: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim != 2 or min(data.shape) < 1:
            raise ValueError(f"cost matrix must be a non-empty 2-D array, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("cost matrix has non-finite entries")
        if np.any(data < 0):
            raise ValueError("cost matrix has negative entries")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def shape(self):
        return self.data.shape

    @property
    def max_entry(self) -> float:
        return float(self.data.max())

    def scaled(self, factor: float) -> "CostMatrix":
        return CostMatrix(self.data * factor, self.kind)


def _check_pair(x: TuningMatrix, y: TuningMatrix):
    if x.stimulus_count != y.stimulus_count:
        raise DimensionMismatch(
            f"stimulus counts differ: {x.stimulus_count} vs {y.stimulus_count}"
        )


def _pairwise(x: np.ndarray, y: np.ndarray, term) -> np.ndarray:
    # Accumulate one stimulus at a time in a fixed order.  Each term is
    # symmetric in its arguments, so cost(x, y) == cost(y, x).T bit for bit,
    # which a BLAS matmul does not guarantee.
    out = np.zeros((x.shape[1], y.shape[1]))
    for k in range(x.shape[0]):
        out += term(x[k][:, None], y[k][None, :])
    return out


def cosine_cost(x: TuningMatrix, y: TuningMatrix) -> CostMatrix:
    """``C_ij = 1 - x_i . y_j`` on centered, unit-norm columns, clamped to [0, 2]."""
    _check_pair(x, y)
    for name, m in (("x", x), ("y", y)):
        if not m.is_normalized:
            raise NormalizationError(f"{name} must be centered and unit-normalized")
    inner = _pairwise(x.data, y.data, np.multiply)
    return CostMatrix(np.clip(1.0 - inner, 0.0, 2.0), COSINE)


def squared_euclidean_cost(x: TuningMatrix, y: TuningMatrix) -> CostMatrix:
    """``C_ij = ||x_i - y_j||^2``."""
    _check_pair(x, y)
    sq = _pairwise(x.data, y.data, lambda a, b: np.square(a - b))
    return CostMatrix(sq, SQEUCLIDEAN)


def build_cost(x: TuningMatrix, y: TuningMatrix, kind: str) -> CostMatrix:
    if kind in (COSINE, "cosine"):
        return cosine_cost(x, y)
    if kind in (SQEUCLIDEAN, "sqeuclidean"):
        return squared_euclidean_cost(x, y)
    raise ValueError(f"unknown cost kind {kind!r}")


def inner_products(x: TuningMatrix, y: TuningMatrix) -> np.ndarray:
    """Matrix of ``x_i . y_j`` (Pearson correlations for normalized inputs)."""
    _check_pair(x, y)
    return _pairwise(x.data, y.data, np.multiply)
