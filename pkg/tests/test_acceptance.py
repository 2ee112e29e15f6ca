"""Acceptance gate: one test per release criterion, at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion with the measured numbers.
"""

import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from simsearch.cli import main as cli_main
from simsearch.core import Metric, normalize
from simsearch.emb1 import EmbeddingRecord, write_emb1
from simsearch.evaluation import latency_bench, recall_precision_at_k
from simsearch.exceptions import CorruptSnapshotError
from simsearch.index import StreamIngestor, VectorIndex
from simsearch.service import ServiceConfig, create_app
from simsearch.synthetic import make_clusters
from simsearch.trainer import (
    TrainerConfig,
    forward,
    loss_gradient,
    lr_at,
    mine_semi_hard,
    train,
    triplet_semi_hard_loss,
)

from test_gradients import finite_diff_grads, make_config, rel_error
from test_mining_loss import brute_force_loss, random_batch


def report(line: str) -> None:
    print(f"\nPASS: {line}")


class TestAcceptance:
    def test_loss_oracle_equivalence(self):
        """200 random batches: loss equals independent brute force within 1e-9."""
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(200):
            emb, labels = random_batch(rng, n_max=32, d_max=16, n_classes_max=5)
            margin = float(rng.uniform(0.3, 1.5))
            state = mine_semi_hard(emb, labels, margin)
            ours = triplet_semi_hard_loss(state)
            oracle = brute_force_loss(emb, labels, margin)
            worst = max(worst, abs(ours - oracle))
            assert abs(ours - oracle) <= 1e-9
        report(f"loss oracle equivalence: 200 batches, max |diff| = {worst:.2e} (tol 1e-9)")

    def test_gradient_correctness(self):
        """>= 100 configs: analytic vs central FD (h=1e-5), max rel err < 1e-4."""
        rng = np.random.default_rng(777)
        worst = 0.0
        n_configs = 100
        for _ in range(n_configs):
            margin = float(rng.uniform(0.2, 1.2))
            model, features, labels = make_config(rng, margin)
            _, analytic = loss_gradient(model, features, labels, margin)
            fd = finite_diff_grads(model, features, labels, margin, h=1e-5)
            for a, f in zip(analytic, fd):
                worst = max(worst, float(rel_error(a, f).max()))
        assert worst < 1e-4
        report(f"gradient correctness: {n_configs} configs, max rel err = {worst:.2e} (tol 1e-4)")

    def test_training_behavior(self):
        """5-class clusters (n=500, d=32, 5 sigma): loss halves, holdout
        recall@1 >= 0.95, runtime < 60 s."""
        feats, labels = make_clusters(n_classes=5, n=500, dim=32, sep=5.0, seed=42)
        t0 = time.perf_counter()
        result = train(feats, labels, TrainerConfig(seed=42))
        elapsed = time.perf_counter() - t0
        assert elapsed < 60.0
        ratio = result.log[-1].train_loss / result.log[0].train_loss
        assert result.log[-1].train_loss < 0.5 * result.log[0].train_loss

        hold_f, hold_l = feats[result.val_indices], labels[result.val_indices]
        emb = forward(result.model, hold_f)
        idx = VectorIndex()
        for i in range(len(emb)):
            idx.insert(i, emb[i], label=int(hold_l[i]))
        queries = [EmbeddingRecord(id=i, vector=emb[i], label=int(hold_l[i]), timestamp=1) for i in range(len(emb))]
        recall1 = recall_precision_at_k(idx, queries, k_values=(1,)).recall_at_k[1]
        assert recall1 >= 0.95
        report(
            f"training behavior: loss {result.log[0].train_loss:.3f}->{result.log[-1].train_loss:.3f} "
            f"(ratio {ratio:.3f} < 0.5), holdout recall@1 = {recall1:.3f} (>= 0.95), "
            f"runtime {elapsed:.1f}s (< 60s)"
        )

    def test_knn_exactness(self):
        """query_exact matches the full-sort oracle on 100 random corpora
        (n <= 2000, dim <= 256): zero mismatches in ids and order."""
        rng = np.random.default_rng(515)
        metrics = list(Metric)
        checked = 0
        for corpus_i in range(100):
            n = int(rng.integers(20, 2001))
            dim = int(rng.integers(4, 257))
            vecs = rng.normal(size=(n, dim))
            idx = VectorIndex()
            for i in range(n):
                idx.insert(i, vecs[i], timestamp=i)
            metric = metrics[corpus_i % len(metrics)]
            stored = idx.vectors().astype(np.float64)
            ids = idx.ids()
            for _ in range(3):
                q = rng.normal(size=dim)
                k = int(rng.integers(1, 25))
                hits = idx.query_exact(q, k, metric)
                qn = normalize(q).astype(np.float32).astype(np.float64)
                if metric is Metric.COSINE:
                    d = 1.0 - (stored @ qn) / (np.linalg.norm(stored, axis=1) * np.linalg.norm(qn))
                else:
                    d = np.sum((stored - qn) ** 2, axis=1)
                    if metric is Metric.EUCLIDEAN:
                        d = np.sqrt(d)
                d = np.maximum(d, 0.0)
                oracle = sorted(zip(d, ids))[:k]
                assert [h.id for h in hits] == [int(i) for _, i in oracle]
                checked += 3
        report(f"KNN exactness: 100 corpora x 3 queries, zero order mismatches")

    def test_two_stage_recall(self):
        """5-cluster corpus n=1000 d=64, R=10k: recall@10 >= 0.9 over 100
        queries; R=count gives exact equality."""
        feats, labels = make_clusters(n_classes=5, n=1100, dim=64, sep=5.0, seed=24, rank=8)
        idx = VectorIndex()
        for i in range(1000):
            idx.insert(i, feats[i], label=int(labels[i]))
        idx.refresh_thresholds()
        recalls = []
        for q in feats[1000:]:
            exact_ids = {h.id for h in idx.query_exact(q, k=10)}
            two_ids = {h.id for h in idx.query_two_stage(q, k=10, shortlist_size=100)}
            recalls.append(len(exact_ids & two_ids) / 10)
        mean_recall = float(np.mean(recalls))
        assert mean_recall >= 0.9

        for q in feats[1000:1010]:
            exact = [(h.id, h.distance) for h in idx.query_exact(q, k=10)]
            full = [(h.id, h.distance) for h in idx.query_two_stage(q, k=10, shortlist_size=idx.count)]
            assert exact == full
        report(f"two-stage recall: recall@10 = {mean_recall:.3f} (>= 0.9) at R=10k; R=count exactly equals exact")

    def test_latency_550_dim128(self):
        """Exact-mode median latency on a 550-item, dim-128 index < 5 ms."""
        rng = np.random.default_rng(99)
        idx = VectorIndex()
        for i in range(550):
            idx.insert(i, rng.normal(size=128), timestamp=i)
        rep = latency_bench(idx, n_queries=100, k=10, mode="exact", seed=7)
        assert rep.median_s < 0.005
        report(
            f"latency: 550 items dim 128 exact-mode median = {rep.median_s * 1e6:.0f} us "
            f"(p99 {rep.p99_s * 1e6:.0f} us, tol < 5 ms)"
        )

    def test_normalization_invariant_all_paths(self, tmp_path):
        """Every ingestion path stores unit-norm embeddings (within 1e-6)."""
        rng = np.random.default_rng(31)

        def check(index, path_name):
            assert index.count > 0
            for e in index.entries():
                norm = float(np.linalg.norm(e.embedding.astype(np.float64)))
                assert abs(norm - 1.0) < 1e-6, f"{path_name}: id {e.id} norm {norm}"

        # HTTP ingestion, random magnitudes across 6 orders of magnitude.
        http_index = VectorIndex()
        app = create_app(http_index, ServiceConfig(snapshot_dir=tmp_path))
        with TestClient(app) as client:
            records = [
                {"id": i, "vec": list(rng.normal(size=16) * 10.0 ** rng.uniform(-3, 3))} for i in range(60)
            ]
            assert client.post("/v1/items", json=records).status_code == 200
        check(http_index, "http")

        # Streamed ingestion.
        stream_index = VectorIndex()
        feed = tmp_path / "feed.jsonl"
        with open(feed, "w") as fh:
            for i in range(60):
                vec = list(rng.normal(size=12) * 10.0 ** rng.uniform(-3, 3))
                fh.write(json.dumps({"id": i, "vec": vec, "ts": i}) + "\n")
        ing = StreamIngestor(stream_index, feed)
        ing.poll_once()
        assert ing.ingested == 60
        check(stream_index, "stream")

        # CLI build from an EMB1 file of unnormalized vectors.
        emb_path = tmp_path / "raw.emb1"
        write_emb1(
            emb_path,
            [
                EmbeddingRecord(id=i, vector=rng.normal(size=8) * 10.0 ** rng.uniform(-3, 3), label=i % 2, timestamp=i)
                for i in range(60)
            ],
        )
        out_idx = tmp_path / "built.simidx"
        assert cli_main(["build", "--emb", str(emb_path), "--out", str(out_idx)]) == 0
        check(VectorIndex.load(out_idx), "cli-build")
        report("normalization invariant: http + stream + cli-build paths, 180 entries all unit norm (tol 1e-6)")

    def test_snapshot_round_trip_and_fuzz(self, tmp_path):
        """Round-trip gives identical results for 50 random queries; 100
        single-byte flips always raise CorruptSnapshot."""
        rng = np.random.default_rng(46)
        idx = VectorIndex()
        for i in range(300):
            label = None if i % 7 == 0 else int(i % 5)
            idx.insert(i, rng.normal(size=32), label=label, timestamp=1_700_000_000 + i)
        path = tmp_path / "fuzz.simidx"
        idx.snapshot(path)
        restored = VectorIndex.load(path)
        for _ in range(50):
            q = rng.normal(size=32)
            a = [(h.id, h.distance, h.similarity, h.label) for h in idx.query_exact(q, k=10)]
            b = [(h.id, h.distance, h.similarity, h.label) for h in restored.query_exact(q, k=10)]
            assert a == b
            assert idx.query_hamming(q, r=10) == restored.query_hamming(q, r=10)

        original = path.read_bytes()
        for _ in range(100):
            pos = int(rng.integers(0, len(original)))
            bit = 1 << int(rng.integers(0, 8))
            corrupted = bytearray(original)
            corrupted[pos] ^= bit
            path.write_bytes(bytes(corrupted))
            with pytest.raises(CorruptSnapshotError):
                VectorIndex.load(path)
        report("snapshot round-trip: 50 queries identical; 100/100 byte flips raised CorruptSnapshot")

    def test_lr_schedule_and_early_stopping(self):
        """lr_at matches the documented table; plateau training stops early
        with the best epoch minimal over the log."""
        config = TrainerConfig(base_lr=0.003, lr_boundaries=(30, 60))
        assert lr_at(config, 10) == pytest.approx(0.003, rel=1e-12)
        assert lr_at(config, 45) == pytest.approx(0.0003, rel=1e-12)
        assert lr_at(config, 70) == pytest.approx(0.00003, rel=1e-12)

        rng = np.random.default_rng(12)
        a = rng.normal(size=(40, 8)) * 0.01 + np.array([8.0] + [0.0] * 7)
        b = rng.normal(size=(40, 8)) * 0.01 - np.array([8.0] + [0.0] * 7)
        feats = np.vstack([a, b])
        labels = np.array([0] * 40 + [1] * 40)
        result = train(feats, labels, TrainerConfig(seed=2, max_epochs=60, patience=5, margin=0.01, base_lr=0.001))
        assert result.stop_reason == "early_stopped"
        assert len(result.log) <= 60
        vals = [r.val_loss for r in result.log]
        assert result.log[result.best_epoch].val_loss == min(vals)
        report(
            f"lr schedule exact at epochs 10/45/70; plateau run early-stopped after {len(result.log)} epochs "
            f"with best epoch {result.best_epoch} minimal over log"
        )
