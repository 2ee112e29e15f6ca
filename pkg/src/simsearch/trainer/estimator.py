"""sklearn-style estimator facade over the triplet trainer."""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin

from .loop import train
from .model import forward
from .optim import TrainerConfig


class TripletEmbedder(BaseEstimator, TransformerMixin):
    """Metric-learning transformer: fit(X, y) trains the embedding head,
    transform(X) maps features to unit-norm embeddings.

    Parameters mirror TrainerConfig; see that dataclass for semantics.
    """

    def __init__(
        self,
        margin: float = 1.0,
        base_lr: float = 0.05,
        lr_boundaries: tuple[int, ...] = (),
        lr_factor: float = 10.0,
        momentum: float = 0.9,
        batch_size: int = 32,
        max_epochs: int = 40,
        patience: int = 5,
        seed: int = 0,
        split_fraction: float = 0.85,
        hidden_dims: tuple[int, ...] = (64,),
        out_dim: int = 32,
    ):
        self.margin = margin
        self.base_lr = base_lr
        self.lr_boundaries = lr_boundaries
        self.lr_factor = lr_factor
        self.momentum = momentum
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.seed = seed
        self.split_fraction = split_fraction
        self.hidden_dims = hidden_dims
        self.out_dim = out_dim

    def _config(self) -> TrainerConfig:
        return TrainerConfig(**self.get_params())

    def fit(self, X, y):
        result = train(X, y, self._config())
        self.model_ = result.model
        self.log_ = result.log
        self.stop_reason_ = result.stop_reason
        self.best_epoch_ = result.best_epoch
        return self

    def transform(self, X):
        if not hasattr(self, "model_"):
            raise RuntimeError("TripletEmbedder is not fitted")
        return forward(self.model_, X)
