"""Momentum SGD and the stepped learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import DimMismatchError, NonFiniteError


@dataclass
class TrainerConfig:
    margin: float = 1.0
    base_lr: float = 0.05
    lr_boundaries: tuple[int, ...] = ()
    lr_factor: float = 10.0
    momentum: float = 0.9
    batch_size: int = 32
    max_epochs: int = 40
    patience: int = 5
    seed: int = 0
    split_fraction: float = 0.85
    hidden_dims: tuple[int, ...] = (64,)
    out_dim: int = 32

    def __post_init__(self):
        self.lr_boundaries = tuple(int(b) for b in self.lr_boundaries)
        if any(b2 <= b1 for b1, b2 in zip(self.lr_boundaries, self.lr_boundaries[1:])):
            raise ValueError("lr_boundaries must be strictly increasing")
        if not 0.0 < self.split_fraction < 1.0:
            raise ValueError("split_fraction must be in (0, 1)")
        if self.margin <= 0 or self.base_lr <= 0:
            raise ValueError("margin and base_lr must be positive")


def lr_at(config: TrainerConfig, epoch: int) -> float:
    """Piecewise-constant rate: base_lr decayed once per boundary <= epoch."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    drops = sum(1 for b in config.lr_boundaries if b <= epoch)
    return config.base_lr / config.lr_factor**drops


def sgd_momentum_step(params, grads, velocity, lr: float, momentum: float):
    """One update: v' = momentum * v + g; theta' = theta - lr * v'.

    Operates on parallel lists of arrays and returns (new_params,
    new_velocity) without mutating the inputs. momentum=0 reduces to the
    plain SGD update.
    """
    if not (len(params) == len(grads) == len(velocity)):
        raise DimMismatchError("params, grads, velocity lengths differ")
    new_params, new_velocity = [], []
    for p, g, v in zip(params, grads, velocity):
        p, g, v = np.asarray(p, dtype=np.float64), np.asarray(g, dtype=np.float64), np.asarray(v, dtype=np.float64)
        if p.shape != g.shape or p.shape != v.shape:
            raise DimMismatchError(f"shape mismatch: {p.shape} vs {g.shape} vs {v.shape}")
        v_next = momentum * v + g
        p_next = p - lr * v_next
        if not (np.all(np.isfinite(v_next)) and np.all(np.isfinite(p_next))):
            raise NonFiniteError("optimizer state diverged to NaN/Inf")
        new_params.append(p_next)
        new_velocity.append(v_next)
    return new_params, new_velocity
