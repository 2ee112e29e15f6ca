"""Synthetic clustered data so the whole pipeline runs with zero assets.

Class centers are placed at radius `sep` from the origin with unit per-
coordinate noise, so `sep` is the separation in noise standard deviations.
"""

from __future__ import annotations

import numpy as np


def make_clusters(
    n_classes: int = 5,
    n: int = 500,
    dim: int = 32,
    sep: float = 5.0,
    seed: int = 0,
    rank: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Return (features, labels): n samples around n_classes Gaussian centers.

    rank=None gives isotropic within-cluster noise. An integer rank < dim
    confines each cluster's variation to a random rank-dimensional subspace,
    mimicking the low intrinsic dimensionality of trained embeddings.
    """
    if n_classes < 1 or n < 1 or dim < 1:
        raise ValueError("n_classes, n, dim must all be >= 1")
    if rank is not None and not 1 <= rank <= dim:
        raise ValueError(f"rank must be in [1, {dim}]")
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((n_classes, dim))
    centers *= sep / np.linalg.norm(centers, axis=1, keepdims=True)
    labels = np.arange(n) % n_classes
    rng.shuffle(labels)
    if rank is None:
        noise = rng.standard_normal((n, dim))
    else:
        bases = np.array([np.linalg.qr(rng.standard_normal((dim, rank)))[0] for _ in range(n_classes)])
        noise = np.einsum("ndr,nr->nd", bases[labels], rng.standard_normal((n, rank)))
    features = centers[labels] + noise
    return features, labels.astype(np.int64)


def parse_synthetic_spec(spec: str) -> dict:
    """Parse 'synthetic:classes=5,n=500,dim=32,sep=5,seed=0' into kwargs."""
    body = spec.split(":", 1)[1] if ":" in spec else ""
    kwargs = {}
    aliases = {"classes": "n_classes"}
    casts = {"n_classes": int, "n": int, "dim": int, "sep": float, "seed": int, "rank": int}
    if body:
        for part in body.split(","):
            if "=" not in part:
                raise ValueError(f"bad synthetic spec fragment {part!r}")
            key, value = part.split("=", 1)
            key = aliases.get(key.strip(), key.strip())
            if key not in casts:
                raise ValueError(f"unknown synthetic spec key {key!r}")
            kwargs[key] = casts[key](value)
    return kwargs
