from .estimator import TripletEmbedder
from .gradients import loss_embedding_grad, loss_gradient
from .loop import (
    TrainLogRow,
    TrainResult,
    export_embeddings,
    format_log_rows,
    train,
    write_train_log,
)
from .mining import TripletBatchState, mine_semi_hard, pair_terms, triplet_semi_hard_loss
from .model import EmbeddingModel, forward, init_model, load_model, save_model
from .optim import TrainerConfig, lr_at, sgd_momentum_step

__all__ = [
    "EmbeddingModel",
    "TrainLogRow",
    "TrainResult",
    "TrainerConfig",
    "TripletBatchState",
    "TripletEmbedder",
    "export_embeddings",
    "format_log_rows",
    "forward",
    "init_model",
    "load_model",
    "loss_embedding_grad",
    "loss_gradient",
    "lr_at",
    "mine_semi_hard",
    "pair_terms",
    "save_model",
    "sgd_momentum_step",
    "train",
    "triplet_semi_hard_loss",
    "write_train_log",
]
