"""Small feed-forward embedding head with L2-normalized output.

Stands in for a large pretrained backbone at desk scale: affine layers with
ReLU between them, final activations projected onto the unit sphere. All
math is float64 so gradient checks are meaningful.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..exceptions import (
    CorruptSnapshotError,
    DegenerateActivationError,
    DimMismatchError,
    IoError,
    NonFiniteError,
    VersionUnsupportedError,
)
from ..validation import as_matrix

_MAGIC = b"SMDL"
_VERSION = 1


@dataclass
class EmbeddingModel:
    """Affine layer stack; weights[i] has shape (fan_in, fan_out)."""

    weights: list[np.ndarray] = field(repr=False)
    biases: list[np.ndarray] = field(repr=False)

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise DimMismatchError("need one bias per weight matrix")
        for w, b in zip(self.weights, self.biases):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise DimMismatchError(f"layer shapes disagree: {w.shape} vs {b.shape}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise NonFiniteError("model parameters contain NaN/Inf")

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]

    def params(self) -> list[np.ndarray]:
        """Flat parameter list: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


def init_model(in_dim: int, hidden_dims=(64,), out_dim: int = 32, seed: int = 0) -> EmbeddingModel:
    """Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases."""
    rng = np.random.default_rng(seed)
    dims = [in_dim, *hidden_dims, out_dim]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return EmbeddingModel(weights=weights, biases=biases)


def forward_cached(model: EmbeddingModel, features) -> tuple[np.ndarray, dict]:
    """Forward pass returning unit-norm embeddings and backprop caches."""
    x = as_matrix(features, "features")
    if x.shape[1] != model.in_dim:
        raise DimMismatchError(f"feature dim {x.shape[1]} != model in_dim {model.in_dim}")
    activations = [x]
    h = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        h = h @ w + b
        if i < last:
            h = np.maximum(h, 0.0)
        activations.append(h)
    z = activations[-1]
    norms = np.linalg.norm(z, axis=1)
    if np.any(norms < 1e-12):
        raise DegenerateActivationError("pre-normalization activation collapsed to zero")
    y = z / norms[:, None]
    if not np.all(np.isfinite(y)):
        raise NonFiniteError("forward produced NaN/Inf")
    return y, {"activations": activations, "norms": norms, "embeddings": y}


def forward(model: EmbeddingModel, features) -> np.ndarray:
    """Unit-norm embeddings for a batch of feature rows."""
    y, _ = forward_cached(model, features)
    return y


def backprop(model: EmbeddingModel, cache: dict, grad_embeddings: np.ndarray) -> list[np.ndarray]:
    """Gradients w.r.t. params() given dLoss/dEmbeddings."""
    y = cache["embeddings"]
    norms = cache["norms"]
    activations = cache["activations"]
    # Through row normalization y = z / |z|.
    g = grad_embeddings
    dz = (g - np.einsum("ij,ij->i", g, y)[:, None] * y) / norms[:, None]
    grads: list[np.ndarray] = []
    dh = dz
    last = len(model.weights) - 1
    for i in range(last, -1, -1):
        a_in = activations[i]
        if i < last:
            dh = dh * (activations[i + 1] > 0.0)
        grads.append(np.sum(dh, axis=0))  # bias
        grads.append(a_in.T @ dh)  # weight
        if i > 0:
            dh = dh @ model.weights[i].T
    grads.reverse()
    return grads


def save_model(model: EmbeddingModel, path) -> int:
    """Serialize to the SMDL checkpoint format; returns bytes written."""
    buf = bytearray(_MAGIC)
    buf += struct.pack("<BI", _VERSION, len(model.weights))
    for w, b in zip(model.weights, model.biases):
        buf += struct.pack("<II", w.shape[0], w.shape[1])
        buf += np.ascontiguousarray(w, dtype="<f8").tobytes()
        buf += np.ascontiguousarray(b, dtype="<f8").tobytes()
    buf += struct.pack("<I", zlib.crc32(bytes(buf)))
    try:
        Path(path).write_bytes(bytes(buf))
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return len(buf)


def load_model(path) -> EmbeddingModel:
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    if len(buf) < 13:
        raise CorruptSnapshotError("checkpoint shorter than header")
    if buf[:4] != _MAGIC:
        raise CorruptSnapshotError(f"bad magic {buf[:4]!r}")
    (stated_crc,) = struct.unpack_from("<I", buf, len(buf) - 4)
    if zlib.crc32(buf[:-4]) != stated_crc:
        raise CorruptSnapshotError("checksum mismatch")
    version, n_layers = struct.unpack_from("<BI", buf, 4)
    if version != _VERSION:
        raise VersionUnsupportedError(f"checkpoint version {version} not supported")
    offset = 9
    weights, biases = [], []
    for _ in range(n_layers):
        if offset + 8 > len(buf) - 4:
            raise CorruptSnapshotError("checkpoint truncated")
        rows, cols = struct.unpack_from("<II", buf, offset)
        offset += 8
        need = 8 * (rows * cols + cols)
        if offset + need > len(buf) - 4:
            raise CorruptSnapshotError("checkpoint truncated")
        weights.append(np.frombuffer(buf, dtype="<f8", count=rows * cols, offset=offset).reshape(rows, cols).copy())
        offset += 8 * rows * cols
        biases.append(np.frombuffer(buf, dtype="<f8", count=cols, offset=offset).copy())
        offset += 8 * cols
    if offset != len(buf) - 4:
        raise CorruptSnapshotError("trailing bytes in checkpoint")
    return EmbeddingModel(weights=weights, biases=biases)
