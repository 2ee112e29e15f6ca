"""Vector primitives: normalization, distances, binarization, Hamming.

All functions are pure and operate on immutable inputs; they are safe to
call concurrently. Binary codes pack one bit per dimension into 64-bit
subcodes (LSB-first within each word) so Hamming distances reduce to
XOR + popcount over machine words.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..exceptions import DimMismatchError, WidthMismatchError, ZeroVectorError
from ..validation import ZERO_NORM_EPS, as_matrix, as_vector, check_same_dim

SUBCODE_WIDTH = 64


class Metric(str, Enum):
    SQUARED_EUCLIDEAN = "squared_euclidean"
    EUCLIDEAN = "euclidean"
    COSINE = "cosine"


def normalize(v) -> np.ndarray:
    """Scale v to unit L2 norm, preserving direction."""
    arr = as_vector(v)
    norm = float(np.linalg.norm(arr))
    if norm < ZERO_NORM_EPS:
        raise ZeroVectorError(f"cannot normalize near-zero vector (norm {norm:.3e})")
    return arr / norm


def normalize_rows(x) -> np.ndarray:
    """Row-wise unit normalization of a matrix."""
    arr = as_matrix(x)
    norms = np.linalg.norm(arr, axis=1)
    if np.any(norms < ZERO_NORM_EPS):
        raise ZeroVectorError("matrix contains a near-zero row")
    return arr / norms[:, None]


def distance(a, b, metric: Metric | str = Metric.SQUARED_EUCLIDEAN) -> float:
    """Distance between two vectors under the given metric.

    Cosine distance is 1 - a.b / (|a||b|); both Euclidean forms use the
    plain difference norm. Always non-negative.
    """
    metric = Metric(metric)
    va, vb = as_vector(a, "a"), as_vector(b, "b")
    check_same_dim(va, vb)
    if metric is Metric.COSINE:
        na = float(np.linalg.norm(va))
        nb = float(np.linalg.norm(vb))
        if na < ZERO_NORM_EPS or nb < ZERO_NORM_EPS:
            raise ZeroVectorError("cosine distance undefined for near-zero vector")
        return max(0.0, 1.0 - float(np.dot(va, vb)) / (na * nb))
    diff = va - vb
    sq = float(np.dot(diff, diff))
    if metric is Metric.SQUARED_EUCLIDEAN:
        return sq
    return float(np.sqrt(sq))


def squared_distances(x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
    """Pairwise squared Euclidean distances between rows of x and y.

    Uses the |x|^2 + |y|^2 - 2xy expansion; negatives from cancellation
    are clamped to zero. With y=None computes the symmetric self-distance
    matrix with an exactly zero diagonal.
    """
    x = np.asarray(x, dtype=np.float64)
    symmetric = y is None
    y = x if symmetric else np.asarray(y, dtype=np.float64)
    nx = np.einsum("ij,ij->i", x, x)
    ny = nx if symmetric else np.einsum("ij,ij->i", y, y)
    d2 = nx[:, None] + ny[None, :] - 2.0 * (x @ y.T)
    np.maximum(d2, 0.0, out=d2)
    if symmetric:
        np.fill_diagonal(d2, 0.0)
    return d2


@dataclass(frozen=True)
class BinaryCode:
    """Fixed-width bit string stored as 64-bit subcodes.

    width is the number of meaningful bits (the source dimensionality);
    storage is padded to a whole number of subcodes with zero bits.
    """

    words: np.ndarray = field(repr=False)
    width: int
    subcode_width: int = SUBCODE_WIDTH

    def __post_init__(self):
        if self.width < 1:
            raise WidthMismatchError("width must be >= 1")
        expected = -(-self.width // self.subcode_width)
        if self.words.shape != (expected,) or self.words.dtype != np.uint64:
            raise WidthMismatchError(
                f"expected {expected} uint64 words for width {self.width}, got {self.words.shape} {self.words.dtype}"
            )

    @property
    def bits(self) -> np.ndarray:
        """Unpacked bit array of length width."""
        return np.unpackbits(self.words.view(np.uint8), bitorder="little")[: self.width]


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a boolean array into little-endian uint64 words, zero-padded."""
    width = bits.shape[0]
    n_words = -(-width // SUBCODE_WIDTH)
    padded = np.zeros(n_words * SUBCODE_WIDTH, dtype=np.uint8)
    padded[:width] = bits.astype(np.uint8)
    return np.packbits(padded, bitorder="little").view("<u8").astype(np.uint64, copy=False)


def binarize(v, thresholds) -> BinaryCode:
    """Threshold each dimension: bit i is 1 iff v[i] > thresholds[i] (strict)."""
    va = as_vector(v)
    ta = as_vector(thresholds, "thresholds")
    check_same_dim(va, ta)
    return BinaryCode(words=pack_bits(va > ta), width=va.shape[0])


def binarize_rows(x: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Binarize each row of a matrix; returns an (n, n_words) uint64 array."""
    x = as_matrix(x)
    ta = as_vector(thresholds, "thresholds")
    check_same_dim(x, ta)
    bits = (x > ta[None, :]).astype(np.uint8)
    n, width = bits.shape
    n_words = -(-width // SUBCODE_WIDTH)
    padded = np.zeros((n, n_words * SUBCODE_WIDTH), dtype=np.uint8)
    padded[:, :width] = bits
    return np.packbits(padded, axis=1, bitorder="little").view("<u8").astype(np.uint64, copy=False)


def hamming(a: BinaryCode, b: BinaryCode) -> int:
    """Number of differing bits, via per-subcode XOR + popcount."""
    if a.width != b.width or a.subcode_width != b.subcode_width:
        raise WidthMismatchError(f"code widths differ: {a.width}/{a.subcode_width} vs {b.width}/{b.subcode_width}")
    return int(np.bitwise_count(np.bitwise_xor(a.words, b.words)).sum())


def hamming_to_many(query_words: np.ndarray, code_matrix: np.ndarray) -> np.ndarray:
    """Hamming distance from one packed code to each row of a code matrix."""
    return np.bitwise_count(np.bitwise_xor(code_matrix, query_words[None, :])).sum(axis=1).astype(np.int64)
