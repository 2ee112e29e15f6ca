"""Embedding similarity search: exact KNN, Hamming shortlists, and a
desk-scale triplet metric-learning trainer, served over HTTP."""

from .core import (
    BinaryCode,
    Metric,
    PcaBasis,
    PrincipalComponents,
    binarize,
    distance,
    hamming,
    normalize,
    pca_fit,
    pca_project,
)
from .emb1 import EmbeddingRecord, read_emb1, read_records, write_emb1
from .evaluation import LatencyReport, RetrievalReport, latency_bench, recall_precision_at_k, scatter_export
from .index import IndexEntry, IndexStats, QueryResult, StreamIngestor, VectorIndex
from .synthetic import make_clusters
from .trainer import (
    EmbeddingModel,
    TrainerConfig,
    TripletEmbedder,
    export_embeddings,
    forward,
    loss_gradient,
    lr_at,
    mine_semi_hard,
    sgd_momentum_step,
    train,
    triplet_semi_hard_loss,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryCode",
    "EmbeddingModel",
    "EmbeddingRecord",
    "IndexEntry",
    "IndexStats",
    "LatencyReport",
    "Metric",
    "PcaBasis",
    "PrincipalComponents",
    "QueryResult",
    "RetrievalReport",
    "StreamIngestor",
    "TrainerConfig",
    "TripletEmbedder",
    "VectorIndex",
    "binarize",
    "distance",
    "export_embeddings",
    "forward",
    "hamming",
    "latency_bench",
    "loss_gradient",
    "lr_at",
    "make_clusters",
    "mine_semi_hard",
    "normalize",
    "pca_fit",
    "pca_project",
    "read_emb1",
    "read_records",
    "recall_precision_at_k",
    "scatter_export",
    "sgd_momentum_step",
    "train",
    "triplet_semi_hard_loss",
    "write_emb1",
]
