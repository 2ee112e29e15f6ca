"""HTTP facade over the index: ingestion, search, feedback, snapshots.

Sync endpoints run in the server threadpool; the index's reader-writer
lock keeps concurrent search and ingestion consistent. Every search
response carries an opaque query_ref so checkbox feedback can be tied
back to the exact result list that was served.
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
import uuid
from collections import OrderedDict
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

import anyio
import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .core import Metric, pca_fit, pca_project
from .exceptions import (
    CorruptSnapshotError,
    DimMismatchError,
    IoError,
    NonFiniteError,
    SimSearchError,
    VersionUnsupportedError,
    ZeroVectorError,
)
from .index import VectorIndex

DEFAULT_RETENTION_S = 90 * 24 * 3600  # "last 3 months"
_QUERY_MEMORY = 1000


@dataclass
class ServiceConfig:
    snapshot_dir: Path | None = None
    retention_s: float = DEFAULT_RETENTION_S
    evict_interval_s: float | None = None
    feedback_log: Path | None = None

    @classmethod
    def from_env(cls) -> "ServiceConfig":
        snap = os.environ.get("SIMSEARCH_SNAPSHOT_DIR")
        retention = float(os.environ.get("SIMSEARCH_RETENTION_S", DEFAULT_RETENTION_S))
        return cls(snapshot_dir=Path(snap) if snap else None, retention_s=retention)


@dataclass
class _ServedQuery:
    result_ids: set[int]
    feedback_seen: set[int] = field(default_factory=set)


class _ApiError(Exception):
    def __init__(self, status: int, message: str):
        self.status = status
        self.message = message


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def _parse_vector(raw) -> np.ndarray:
    if not isinstance(raw, list) or not raw:
        raise _ApiError(400, "vec must be a non-empty array of numbers")
    try:
        vec = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError):
        raise _ApiError(400, "vec must contain only numbers") from None
    if vec.ndim != 1 or not np.all(np.isfinite(vec)):
        raise _ApiError(400, "vec must be a flat array of finite numbers")
    return vec


class SearchService:
    """State shared by the endpoint handlers."""

    def __init__(self, index: VectorIndex, config: ServiceConfig):
        self.index = index
        self.config = config
        self.served: OrderedDict[str, _ServedQuery] = OrderedDict()
        self._served_lock = threading.Lock()
        self._feedback_lock = threading.Lock()
        self._pca_cache: tuple[int, object] | None = None
        log = config.feedback_log
        if log is None:
            base = config.snapshot_dir or Path.cwd()
            log = Path(base) / "feedback.jsonl"
        self.feedback_path = Path(log)

    # -- search ------------------------------------------------------------

    def remember(self, hits: list[dict]) -> str:
        ref = uuid.uuid4().hex
        with self._served_lock:
            self.served[ref] = _ServedQuery(result_ids={h["id"] for h in hits})
            while len(self.served) > _QUERY_MEMORY:
                self.served.popitem(last=False)
        return ref

    def swatch_basis(self):
        stats = self.index.stats()
        if stats.count < 2:
            return None
        if self._pca_cache is not None and self._pca_cache[0] == stats.count:
            return self._pca_cache[1]
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            basis = pca_fit(self.index.vectors(), k=min(2, stats.dim))
        self._pca_cache = (stats.count, basis)
        return basis

    def hit_payload(self, result, basis) -> dict:
        payload = {
            "id": result.id,
            "label": result.label,
            "distance": result.distance,
            "similarity": result.similarity,
        }
        if basis is not None:
            entry = self.index.entry(result.id)
            if entry is not None:
                coords = pca_project(basis, entry.embedding.astype(np.float64))
                coords = list(coords) + [0.0] * (2 - len(coords))
                payload["pca"] = [float(coords[0]), float(coords[1])]
        return payload

    def search(self, body: dict) -> dict:
        if not isinstance(body, dict):
            raise _ApiError(400, "request body must be a JSON object")
        has_vec = body.get("vector") is not None
        has_id = body.get("item_id") is not None
        if has_vec == has_id:
            raise _ApiError(400, "exactly one of vector / item_id is required")
        k = body.get("k", 10)
        if not isinstance(k, int) or isinstance(k, bool) or k < 1:
            raise _ApiError(422, "k must be an integer >= 1")
        mode = body.get("mode", "exact")
        if mode not in ("exact", "hamming", "two_stage"):
            raise _ApiError(400, f"unknown mode {mode!r}")
        try:
            metric = Metric(body.get("metric", "cosine"))
        except ValueError:
            raise _ApiError(400, f"unknown metric {body.get('metric')!r}") from None

        exclude_id: int | None = None
        if has_id:
            entry = self.index.entry(int(body["item_id"]))
            if entry is None:
                raise _ApiError(404, f"item {body['item_id']} not indexed")
            qvec = entry.embedding.astype(np.float64)
            exclude_id = entry.id
        else:
            qvec = _parse_vector(body["vector"])

        fetch = k + 1 if exclude_id is not None else k
        t0 = time.perf_counter()
        try:
            if mode == "exact":
                raw_hits = self.index.query_exact(qvec, fetch, metric)
            elif mode == "two_stage":
                raw_hits = self.index.query_two_stage(qvec, fetch, metric=metric)
            else:
                dim = self.index.dim or len(qvec)
                raw_hits = [
                    _HammingHit(item_id, hd, dim, self.index) for item_id, hd in self.index.query_hamming(qvec, fetch)
                ]
        except (DimMismatchError, ZeroVectorError, NonFiniteError) as exc:
            raise _ApiError(400, str(exc)) from exc
        took = time.perf_counter() - t0

        hits = [h for h in raw_hits if h.id != exclude_id][:k]
        basis = self.swatch_basis()
        payload = [self.hit_payload(h, basis) for h in hits]
        return {"query_ref": self.remember(payload), "hits": payload, "took_s": took}

    # -- feedback ----------------------------------------------------------

    def store_feedback(self, records: list[dict]) -> int:
        cleaned = []
        for rec in records:
            if not isinstance(rec, dict) or "query_ref" not in rec or "result_id" not in rec:
                raise _ApiError(400, "feedback records need query_ref and result_id")
            if not isinstance(rec.get("relevant", True), bool):
                raise _ApiError(400, "relevant must be a boolean")
            cleaned.append(rec)
        with self._served_lock:
            for rec in cleaned:
                served = self.served.get(rec["query_ref"])
                if served is None:
                    raise _ApiError(404, f"unknown query_ref {rec['query_ref']!r}")
                if int(rec["result_id"]) not in served.result_ids:
                    raise _ApiError(400, f"result {rec['result_id']} was not served for this query")
            to_store = []
            for rec in cleaned:
                served = self.served[rec["query_ref"]]
                rid = int(rec["result_id"])
                if rid in served.feedback_seen:
                    continue
                served.feedback_seen.add(rid)
                to_store.append(
                    {
                        "query_ref": rec["query_ref"],
                        "result_id": rid,
                        "relevant": bool(rec.get("relevant", True)),
                        "ts": int(rec.get("ts", time.time())),
                    }
                )
        if to_store:
            with self._feedback_lock:
                self.feedback_path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.feedback_path, "a", encoding="utf-8") as fh:
                    for row in to_store:
                        fh.write(json.dumps(row) + "\n")
        return len(to_store)

    # -- persistence -------------------------------------------------------

    def resolve_path(self, raw: str) -> Path:
        path = Path(raw)
        if not path.is_absolute() and self.config.snapshot_dir is not None:
            path = Path(self.config.snapshot_dir) / path
        return path


class _HammingHit:
    """Adapter giving Hamming results the QueryResult surface."""

    def __init__(self, item_id: int, hd: int, width: int, index: VectorIndex):
        self.id = item_id
        self.distance = float(hd)
        self.similarity = max(0.0, 1.0 - hd / width)
        entry = index.entry(item_id)
        self.label = None if entry is None else entry.label


def create_app(index: VectorIndex | None = None, config: ServiceConfig | None = None) -> FastAPI:
    index = index if index is not None else VectorIndex()
    config = config or ServiceConfig.from_env()
    service = SearchService(index, config)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        stop = anyio.Event()

        async def evict_periodically():
            while not stop.is_set():
                with anyio.move_on_after(config.evict_interval_s):
                    await stop.wait()
                if stop.is_set():
                    break
                cutoff = time.time() - config.retention_s
                await anyio.to_thread.run_sync(index.evict_older_than, cutoff)

        if config.evict_interval_s:
            async with anyio.create_task_group() as tg:
                tg.start_soon(evict_periodically)
                yield
                stop.set()
        else:
            yield

    app = FastAPI(title="simsearch", lifespan=lifespan)
    app.state.service = service

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return _error(400, "malformed request body")

    @app.exception_handler(_ApiError)
    async def api_error(request: Request, exc: _ApiError):
        return _error(exc.status, exc.message)

    @app.post("/v1/items")
    def ingest_items(records: list[dict], strict: bool = Query(default=True)):
        prepared = []
        batch_dim: int | None = None
        for pos, rec in enumerate(records):
            try:
                if not isinstance(rec, dict) or "id" not in rec or "vec" not in rec:
                    raise _ApiError(400, f"record {pos} needs id and vec")
                vec = _parse_vector(rec["vec"])
                if index.dim is not None and vec.shape[0] != index.dim:
                    raise _ApiError(409, f"record {pos} has dim {vec.shape[0]}, index dim {index.dim}")
                if batch_dim is not None and vec.shape[0] != batch_dim:
                    raise _ApiError(409, f"record {pos} dim disagrees within batch")
                if float(np.linalg.norm(vec)) < 1e-12:
                    raise _ApiError(400, f"record {pos} vector has zero norm")
                label = rec.get("label")
                ts = rec.get("ts")
                prepared.append((int(rec["id"]), vec, None if label is None else int(label), ts))
                batch_dim = vec.shape[0]
            except _ApiError:
                if strict:
                    raise
                prepared.append(None)
        ingested = skipped = 0
        for item in prepared:
            if item is None:
                skipped += 1
                continue
            item_id, vec, label, ts = item
            try:
                index.insert(item_id, vec, label=label, timestamp=ts, upsert=True)
                ingested += 1
            except SimSearchError as exc:
                if strict:
                    raise _ApiError(409, str(exc)) from exc
                skipped += 1
        return {"ingested": ingested, "skipped": skipped}

    @app.post("/v1/search")
    def search(body: dict):
        return service.search(body)

    @app.post("/v1/feedback")
    def feedback(records: list[dict]):
        return {"stored": service.store_feedback(records)}

    @app.post("/v1/evict")
    def evict(body: dict | None = None):
        body = body or {}
        older_than = body.get("older_than")
        if older_than is None:
            older_than = time.time() - config.retention_s
        if not isinstance(older_than, (int, float)) or isinstance(older_than, bool) or math.isnan(older_than):
            raise _ApiError(400, "older_than must be a number")
        return {"evicted": index.evict_older_than(older_than)}

    @app.get("/v1/stats")
    def stats():
        s = index.stats()
        return {
            "count": s.count,
            "dim": s.dim,
            "oldest_timestamp": s.oldest_timestamp,
            "newest_timestamp": s.newest_timestamp,
            "snapshot_version": s.snapshot_version,
        }

    @app.get("/healthz")
    def healthz():
        if index.healthy(timeout=0.5):
            return {"status": "ok"}
        return _error(503, "index lock unavailable")

    @app.post("/v1/snapshot")
    def snapshot(body: dict):
        if "path" not in body:
            raise _ApiError(400, "path is required")
        path = service.resolve_path(str(body["path"]))
        try:
            written = index.snapshot(path)
        except IoError as exc:
            raise _ApiError(500, str(exc)) from exc
        return {"path": str(path), "bytes_written": written}

    @app.post("/v1/restore")
    def restore(body: dict):
        if "path" not in body:
            raise _ApiError(400, "path is required")
        path = service.resolve_path(str(body["path"]))
        try:
            from .index.snapshot import read_snapshot

            snap = read_snapshot(path)
            if index.dim is not None and index.count > 0 and snap.dim and snap.dim != index.dim:
                raise _ApiError(409, f"snapshot dim {snap.dim} conflicts with live index dim {index.dim}")
            stats = index.restore(path)
        except (CorruptSnapshotError, VersionUnsupportedError) as exc:
            raise _ApiError(400, str(exc)) from exc
        except IoError as exc:
            raise _ApiError(500, str(exc)) from exc
        return {
            "count": stats.count,
            "dim": stats.dim,
            "oldest_timestamp": stats.oldest_timestamp,
            "newest_timestamp": stats.newest_timestamp,
            "snapshot_version": stats.snapshot_version,
        }

    return app
