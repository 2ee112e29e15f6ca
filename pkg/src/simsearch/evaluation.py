"""Retrieval-quality metrics, latency benchmarking, and scatter export."""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Metric, pca_fit, pca_project_rows
from .emb1 import EmbeddingRecord
from .exceptions import EmptyIndexError, UnlabeledDataError
from .index import VectorIndex


@dataclass
class RetrievalReport:
    k_values: tuple[int, ...]
    recall_at_k: dict[int, float]
    precision_at_k: dict[int, float]
    n_queries: int

    def to_dict(self) -> dict:
        return {
            "k_values": list(self.k_values),
            "recall_at_k": {str(k): v for k, v in self.recall_at_k.items()},
            "precision_at_k": {str(k): v for k, v in self.precision_at_k.items()},
            "n_queries": self.n_queries,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass
class LatencyReport:
    n_items: int
    dim: int
    n_queries: int
    mode: str
    k: int
    latencies_s: list[float] = field(repr=False)
    median_s: float = 0.0
    p99_s: float = 0.0
    mean_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "dim": self.dim,
            "n_queries": self.n_queries,
            "mode": self.mode,
            "k": self.k,
            "median_s": self.median_s,
            "p99_s": self.p99_s,
            "mean_s": self.mean_s,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def recall_precision_at_k(
    index: VectorIndex,
    queries: list[EmbeddingRecord],
    k_values=(1, 5, 10),
    metric: Metric | str = Metric.COSINE,
) -> RetrievalReport:
    """Leave-one-out retrieval quality; relevant = same label.

    Each query is excluded from its own results by id. recall@k divides by
    min(k, class_size - 1) so small classes can still reach 1.0; queries
    whose class has no other indexed member are skipped (no relevant docs).
    """
    k_values = tuple(int(k) for k in k_values)
    if not k_values or min(k_values) < 1:
        raise ValueError("k_values must be positive")
    if any(rec.label is None for rec in queries):
        raise UnlabeledDataError("every evaluation query needs a label")
    if not queries:
        raise ValueError("queries must be non-empty")

    index_labels = index.labels()
    if np.any(index_labels == -1):
        raise UnlabeledDataError("index contains unlabeled entries")
    class_sizes = {int(lab): int(cnt) for lab, cnt in zip(*np.unique(index_labels, return_counts=True))}

    max_k = max(k_values)
    recall_sums = {k: 0.0 for k in k_values}
    recall_counts = {k: 0 for k in k_values}
    precision_sums = {k: 0.0 for k in k_values}
    n_scored = 0
    for rec in queries:
        hits = [h for h in index.query_exact(rec.vector, max_k + 1, metric) if h.id != rec.id]
        hits = hits[:max_k]
        n_scored += 1
        matches = np.array([1 if h.label == rec.label else 0 for h in hits])
        n_relevant = class_sizes.get(int(rec.label), 0) - (1 if rec.id in index else 0)
        for k in k_values:
            matched = int(matches[:k].sum()) if matches.size else 0
            precision_sums[k] += matched / k
            denom = min(k, n_relevant)
            if denom > 0:
                recall_sums[k] += matched / denom
                recall_counts[k] += 1

    recall = {k: (recall_sums[k] / recall_counts[k] if recall_counts[k] else 0.0) for k in k_values}
    precision = {k: precision_sums[k] / n_scored for k in k_values}
    return RetrievalReport(
        k_values=k_values, recall_at_k=recall, precision_at_k=precision, n_queries=n_scored
    )


def bench_queries(dim: int, n: int, seed: int) -> np.ndarray:
    """The benchmark's query set; a pure function of (dim, n, seed)."""
    return np.random.default_rng(seed).normal(size=(n, dim))


def latency_bench(
    index: VectorIndex,
    n_queries: int = 100,
    k: int = 10,
    mode: str = "exact",
    metric: Metric | str = Metric.COSINE,
    warmup: int = 10,
    seed: int = 0,
) -> LatencyReport:
    """Wall-clock per query on the monotonic clock; warm-up runs excluded.

    The query set is deterministic given the seed. Single-threaded so the
    timings stay clean.
    """
    stats = index.stats()
    if stats.count == 0:
        raise EmptyIndexError("cannot benchmark an empty index")
    if mode not in ("exact", "hamming", "two_stage"):
        raise ValueError(f"unknown mode {mode!r}")
    queries = bench_queries(stats.dim, warmup + n_queries, seed)

    def run(q):
        if mode == "exact":
            return index.query_exact(q, k, metric)
        if mode == "hamming":
            return index.query_hamming(q, k)
        return index.query_two_stage(q, k, metric=metric)

    for i in range(warmup):
        run(queries[i])
    latencies = []
    for i in range(warmup, warmup + n_queries):
        t0 = time.perf_counter()
        run(queries[i])
        latencies.append(time.perf_counter() - t0)

    arr = np.asarray(latencies)
    return LatencyReport(
        n_items=stats.count,
        dim=stats.dim,
        n_queries=n_queries,
        mode=mode,
        k=k,
        latencies_s=latencies,
        median_s=float(np.median(arr)),
        p99_s=float(np.percentile(arr, 99)),
        mean_s=float(arr.mean()),
    )


def scatter_export(records: list[EmbeddingRecord], path) -> int:
    """Project labeled embeddings to 2-D via PCA and write id,label,x,y.

    Rank-deficient inputs (e.g. collinear points) get zero-padded
    coordinates. Returns the number of data rows written.
    """
    if len(records) < 2:
        raise ValueError("need at least 2 points for a scatter export")
    x = np.vstack([np.asarray(r.vector, dtype=np.float64) for r in records])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        basis = pca_fit(x, k=min(2, x.shape[1]))
    proj = pca_project_rows(basis, x)
    if proj.shape[1] < 2:
        proj = np.hstack([proj, np.zeros((proj.shape[0], 2 - proj.shape[1]))])
    lines = ["id,label,x,y"]
    for rec, (px, py) in zip(records, proj):
        label = "" if rec.label is None else str(rec.label)
        lines.append(f"{rec.id},{label},{px:.10g},{py:.10g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return len(records)
