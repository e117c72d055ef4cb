"""
Dense tensor operations used by every other package.
Tensors are float64 numpy arrays, row-major and batch-first (samples are rows).
Every public operation returns a fresh array and rejects non-finite results.
"""

from typing import Sequence, Union

import numpy as np

from core.exceptions import (
    AmbiguityException,
    DimensionException,
    IndexRangeException,
    NonFiniteException,
)

IndexSet = Union[Sequence[int], np.ndarray]


def as_tensor(values, name: str = "tensor") -> np.ndarray:
    """Copy ``values`` into a finite float64 array"""
    array = np.array(values, dtype=np.float64)
    return ensure_finite(array, name)


def ensure_finite(array: np.ndarray, name: str = "tensor") -> np.ndarray:
    if not np.all(np.isfinite(array)):
        raise NonFiniteException(f"{name} contains NaN or Inf")
    return array


def _as_index(idx: IndexSet, rows: int) -> np.ndarray:
    index = np.asarray(idx, dtype=np.int64).reshape(-1)
    if index.size and (index.min() < 0 or index.max() >= rows):
        raise IndexRangeException(
            f"Row index outside [0, {rows}): min={int(index.min())}, max={int(index.max())}"
        )
    return index


def _require_matrix(x: np.ndarray, name: str) -> None:
    if x.ndim != 2:
        raise DimensionException(f"{name} must be 2-D, got shape {tuple(x.shape)}")


# =============================================================================
# ARITHMETIC
# =============================================================================

def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product a[m×k] · b[k×n]"""
    _require_matrix(a, "left operand")
    _require_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise DimensionException(
            f"Cannot multiply {tuple(a.shape)} by {tuple(b.shape)}: inner extents differ",
            details={"left": list(a.shape), "right": list(b.shape)}
        )
    return ensure_finite(a @ b, "matmul result")


def frobenius_sq(x: np.ndarray) -> float:
    """Sum of squared elements"""
    flat = np.asarray(x, dtype=np.float64).reshape(-1)
    return float(ensure_finite(np.asarray(flat @ flat), "squared norm"))


# =============================================================================
# ROW ACCESS
# =============================================================================

def gather_rows(x: np.ndarray, idx: IndexSet) -> np.ndarray:
    """Rows ``idx`` of ``x`` in the order given; ``x`` is left untouched"""
    _require_matrix(x, "source")
    index = _as_index(idx, x.shape[0])
    return x[index].copy()


def scatter_rows(x: np.ndarray, idx: IndexSet, rows: np.ndarray) -> np.ndarray:
    """Copy of ``x`` with rows ``idx`` replaced by ``rows``"""
    _require_matrix(x, "target")
    index = _as_index(idx, x.shape[0])
    rows = np.asarray(rows, dtype=np.float64)
    if index.size == 0:
        return x.copy()
    _require_matrix(rows, "rows")
    if rows.shape != (index.size, x.shape[1]):
        raise DimensionException(
            f"Scatter of {tuple(rows.shape)} rows into {tuple(x.shape)} at {index.size} indices"
        )
    if np.unique(index).size != index.size:
        raise AmbiguityException("Scatter index set contains duplicates")
    out = x.copy()
    out[index] = ensure_finite(rows, "scattered rows")
    return out

