"""Input validation helpers.

Every public entry point funnels array-likes through these so the numeric
core can assume float64, finiteness, and agreeing shapes.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DimMismatchError, NonFiniteError, ZeroVectorError

ZERO_NORM_EPS = 1e-12


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Coerce to a 1-D float64 array and reject NaN/Inf and empty input."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        arr = arr.reshape(-1) if arr.size == max(arr.shape, default=0) else arr
    if arr.ndim != 1 or arr.size == 0:
        raise DimMismatchError(f"{name} must be a non-empty 1-D sequence, got shape {np.shape(v)}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return arr


def as_matrix(x, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array (a single vector becomes one row)."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] == 0:
        raise DimMismatchError(f"{name} must be 2-D with at least one column, got shape {np.shape(x)}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return arr


def check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-1] != b.shape[-1]:
        raise DimMismatchError(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")


def check_nonzero_norm(v: np.ndarray, name: str = "vector") -> float:
    norm = float(np.linalg.norm(v))
    if norm < ZERO_NORM_EPS:
        raise ZeroVectorError(f"{name} has near-zero norm ({norm:.3e})")
    return norm


def check_labels(labels, n: int) -> np.ndarray:
    """Coerce labels to an int64 array of length n."""
    arr = np.asarray(labels, dtype=np.int64)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise DimMismatchError(f"labels must be 1-D of length {n}, got shape {arr.shape}")
    return arr
