"""Time-aware embedding index: exact KNN, Hamming shortlist, two-stage search.

Entries live in flat numpy arrays (float32 vectors, packed uint64 codes)
behind a reader-writer lock; removal swaps with the last row so mutation is
O(1). Every query normalizes its input through the same float32 rounding as
the insert path, so querying with a stored entry's original vector finds it
at distance zero in every mode.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..core.vectorops import (
    SUBCODE_WIDTH,
    BinaryCode,
    Metric,
    binarize_rows,
    hamming_to_many,
)
from ..exceptions import (
    DimMismatchError,
    DuplicateIdError,
    EmptyIndexError,
    ShortlistTooSmallError,
    ZeroVectorError,
)
from ..validation import ZERO_NORM_EPS, as_vector
from .locking import RWLock
from .snapshot import read_snapshot, write_snapshot

_CHUNK_ROWS = 32768


@dataclass(frozen=True)
class QueryResult:
    id: int
    distance: float
    similarity: float
    label: int | None = None


@dataclass(frozen=True)
class IndexEntry:
    id: int
    embedding: np.ndarray = field(repr=False)
    code: BinaryCode = field(repr=False)
    label: int | None = None
    timestamp: int = 0


@dataclass(frozen=True)
class IndexStats:
    count: int
    dim: int | None
    oldest_timestamp: int | None
    newest_timestamp: int | None
    snapshot_version: int | None


def similarity_from_distance(metric: Metric, dist: float) -> float:
    """Map a distance to a similarity in [0, 1] (1 - d/2 for cosine,
    exp(-d) for the Euclidean family)."""
    if metric is Metric.COSINE:
        return max(0.0, 1.0 - dist / 2.0)
    return float(np.exp(-dist))


class VectorIndex:
    """Rolling similarity index over unit-norm embeddings.

    The first insert fixes the dimensionality. Binarization thresholds
    start at zero and are refrozen to per-dimension corpus medians at
    snapshot time; entries streamed in afterwards are coded against the
    frozen thresholds.
    """

    def __init__(self, shortlist_factor: int = 10):
        if shortlist_factor < 1:
            raise ValueError("shortlist_factor must be >= 1")
        self.shortlist_factor = shortlist_factor
        self._lock = RWLock()
        self._dim: int | None = None
        self._n = 0
        self._ids = np.zeros(0, dtype=np.uint64)
        self._labels = np.zeros(0, dtype=np.int32)
        self._ts = np.zeros(0, dtype=np.uint64)
        self._vectors = np.zeros((0, 0), dtype=np.float32)
        self._codes = np.zeros((0, 0), dtype=np.uint64)
        self._thresholds = np.zeros(0, dtype=np.float32)
        self._pos: dict[int, int] = {}
        self._snapshot_version: int | None = None

    # -- basic accessors ---------------------------------------------------

    @property
    def dim(self) -> int | None:
        return self._dim

    @property
    def count(self) -> int:
        with self._lock.read_locked():
            return self._n

    @property
    def thresholds(self) -> np.ndarray | None:
        with self._lock.read_locked():
            return None if self._dim is None else self._thresholds.copy()

    def __len__(self) -> int:
        return self.count

    def __contains__(self, item_id: int) -> bool:
        with self._lock.read_locked():
            return int(item_id) in self._pos

    def stats(self) -> IndexStats:
        with self._lock.read_locked():
            ts = self._ts[: self._n]
            return IndexStats(
                count=self._n,
                dim=self._dim,
                oldest_timestamp=int(ts.min()) if self._n else None,
                newest_timestamp=int(ts.max()) if self._n else None,
                snapshot_version=self._snapshot_version,
            )

    def entry(self, item_id: int) -> IndexEntry | None:
        with self._lock.read_locked():
            row = self._pos.get(int(item_id))
            if row is None:
                return None
            return self._entry_at(row)

    def entries(self) -> list[IndexEntry]:
        with self._lock.read_locked():
            return [self._entry_at(i) for i in range(self._n)]

    def vectors(self) -> np.ndarray:
        """Copy of the stored (float32) vectors, one row per entry."""
        with self._lock.read_locked():
            return self._vectors[: self._n].copy()

    def ids(self) -> np.ndarray:
        with self._lock.read_locked():
            return self._ids[: self._n].copy()

    def labels(self) -> np.ndarray:
        """Stored labels with -1 for unlabeled entries."""
        with self._lock.read_locked():
            return self._labels[: self._n].copy()

    def healthy(self, timeout: float = 0.5) -> bool:
        if self._lock.acquire_read(timeout):
            self._lock.release_read()
            return True
        return False

    def _entry_at(self, row: int) -> IndexEntry:
        n_words = self._codes.shape[1]
        label = int(self._labels[row])
        return IndexEntry(
            id=int(self._ids[row]),
            embedding=self._vectors[row].copy(),
            code=BinaryCode(words=self._codes[row].copy(), width=self._dim),
            label=None if label == -1 else label,
            timestamp=int(self._ts[row]),
        )

    # -- mutation ----------------------------------------------------------

    def _prepare_or_init(self, vector) -> np.ndarray:
        """Validate and normalize a vector; fixes the index dim on first use.

        Validation happens before dim initialization so a rejected first
        insert leaves the index untouched.
        """
        v = as_vector(vector)
        if self._dim is not None and v.shape[0] != self._dim:
            raise DimMismatchError(f"vector dim {v.shape[0]} != index dim {self._dim}")
        norm = float(np.linalg.norm(v))
        if norm < ZERO_NORM_EPS:
            raise ZeroVectorError("cannot index a near-zero vector")
        if self._dim is None:
            self._init_dim(v.shape[0])
        return (v / norm).astype(np.float32)

    def _ensure_capacity(self, extra: int) -> None:
        need = self._n + extra
        cap = self._vectors.shape[0]
        if need <= cap:
            return
        new_cap = max(need, max(16, cap * 2))
        n_words = -(-self._dim // SUBCODE_WIDTH)
        for name, width, dtype in (
            ("_ids", None, np.uint64),
            ("_labels", None, np.int32),
            ("_ts", None, np.uint64),
            ("_vectors", self._dim, np.float32),
            ("_codes", n_words, np.uint64),
        ):
            old = getattr(self, name)
            shape = (new_cap,) if width is None else (new_cap, width)
            grown = np.zeros(shape, dtype=dtype)
            grown[: self._n] = old[: self._n]
            setattr(self, name, grown)

    def _init_dim(self, dim: int) -> None:
        self._dim = dim
        self._thresholds = np.zeros(dim, dtype=np.float32)
        self._vectors = np.zeros((0, dim), dtype=np.float32)
        self._codes = np.zeros((0, -(-dim // SUBCODE_WIDTH)), dtype=np.uint64)

    def _encode(self, vecs32: np.ndarray) -> np.ndarray:
        return binarize_rows(vecs32.astype(np.float64), self._thresholds.astype(np.float64))

    def insert(self, id, vector, label=None, timestamp=None, upsert: bool = False) -> IndexEntry:
        """Normalize and store one vector; visible to queries on return."""
        item_id = int(id)
        ts = int(time.time()) if timestamp is None else int(timestamp)
        with self._lock.write_locked():
            v32 = self._prepare_or_init(vector)
            if item_id in self._pos:
                if not upsert:
                    raise DuplicateIdError(f"id {item_id} already indexed")
                self._remove_row(self._pos[item_id])
            self._append_row(item_id, v32, label, ts)
            return self._entry_at(self._pos[item_id])

    def insert_many(self, records, upsert: bool = False) -> int:
        """Bulk insert of EmbeddingRecord-like objects; returns count inserted."""
        inserted = 0
        with self._lock.write_locked():
            for rec in records:
                v32 = self._prepare_or_init(rec.vector)
                item_id = int(rec.id)
                if item_id in self._pos:
                    if not upsert:
                        raise DuplicateIdError(f"id {item_id} already indexed")
                    self._remove_row(self._pos[item_id])
                self._append_row(item_id, v32, rec.label, int(rec.timestamp))
                inserted += 1
        return inserted

    def _append_row(self, item_id: int, v32: np.ndarray, label, ts: int) -> None:
        self._ensure_capacity(1)
        row = self._n
        self._ids[row] = item_id
        self._labels[row] = -1 if label is None else int(label)
        self._ts[row] = ts
        self._vectors[row] = v32
        self._codes[row] = self._encode(v32[None, :])[0]
        self._pos[item_id] = row
        self._n += 1

    def _remove_row(self, row: int) -> None:
        last = self._n - 1
        removed_id = int(self._ids[row])
        if row != last:
            for arr in (self._ids, self._labels, self._ts, self._vectors, self._codes):
                arr[row] = arr[last]
            self._pos[int(self._ids[row])] = row
        del self._pos[removed_id]
        self._n = last

    def remove(self, id) -> bool:
        with self._lock.write_locked():
            row = self._pos.get(int(id))
            if row is None:
                return False
            self._remove_row(row)
            return True

    def evict_older_than(self, cutoff) -> int:
        """Remove every entry with timestamp < cutoff; returns the count."""
        with self._lock.write_locked():
            if self._n == 0:
                return 0
            doomed = np.flatnonzero(self._ts[: self._n].astype(np.float64) < float(cutoff))
            # Remove from the end so swap-with-last never disturbs a doomed row.
            for row in sorted((int(r) for r in doomed), reverse=True):
                self._remove_row(row)
            return int(doomed.size)

    def refresh_thresholds(self) -> None:
        """Refreeze thresholds to per-dimension corpus medians and recode."""
        with self._lock.write_locked():
            self._refresh_thresholds_unlocked()

    def _refresh_thresholds_unlocked(self) -> None:
        if self._dim is None or self._n == 0:
            return
        med = np.median(self._vectors[: self._n].astype(np.float64), axis=0)
        self._thresholds = med.astype(np.float32)
        self._codes[: self._n] = self._encode(self._vectors[: self._n])

    # -- queries -----------------------------------------------------------

    def _check_query(self, q) -> np.ndarray:
        if self._dim is None:
            raise EmptyIndexError("index has no dimensionality yet")
        v = as_vector(q, "query")
        if v.shape[0] != self._dim:
            raise DimMismatchError(f"query dim {v.shape[0]} != index dim {self._dim}")
        norm = float(np.linalg.norm(v))
        if norm < ZERO_NORM_EPS:
            raise ZeroVectorError("query vector has near-zero norm")
        # Round through float32 exactly like the stored side.
        return (v / norm).astype(np.float32).astype(np.float64)

    def _scores(self, q: np.ndarray, rows: np.ndarray | None, metric: Metric) -> np.ndarray:
        """Distances from q to the selected rows, computed in float64."""
        mat = self._vectors[: self._n] if rows is None else self._vectors[rows]
        n = mat.shape[0]
        dots = np.empty(n, dtype=np.float64)
        norms2 = np.empty(n, dtype=np.float64)
        for start in range(0, n, _CHUNK_ROWS):
            chunk = mat[start : start + _CHUNK_ROWS].astype(np.float64)
            dots[start : start + _CHUNK_ROWS] = chunk @ q
            norms2[start : start + _CHUNK_ROWS] = np.einsum("ij,ij->i", chunk, chunk)
        if metric is Metric.COSINE:
            d = 1.0 - dots / (np.sqrt(norms2) * float(np.linalg.norm(q)))
        else:
            d = norms2 + float(q @ q) - 2.0 * dots
            if metric is Metric.EUCLIDEAN:
                np.maximum(d, 0.0, out=d)
                d = np.sqrt(d)
        np.maximum(d, 0.0, out=d)
        return d

    def _top_by(self, values: np.ndarray, ids: np.ndarray, k: int) -> np.ndarray:
        """Indices of the k smallest values, ties broken by ascending id."""
        order = np.lexsort((ids, values))
        return order[:k]

    def query_exact(self, q, k: int, metric: Metric | str = Metric.COSINE) -> list[QueryResult]:
        """Exact k-nearest-neighbor scan; ascending distance, ties by id."""
        if k < 1:
            raise ValueError("k must be >= 1")
        metric = Metric(metric)
        with self._lock.read_locked():
            if self._n == 0:
                if self._dim is None:
                    return []
                self._check_query(q)
                return []
            qv = self._check_query(q)
            d = self._scores(qv, None, metric)
            ids = self._ids[: self._n]
            pick = self._top_by(d, ids, k)
            return [self._result(row, float(d[row]), metric) for row in pick]

    def _result(self, row: int, dist: float, metric: Metric) -> QueryResult:
        label = int(self._labels[row])
        return QueryResult(
            id=int(self._ids[row]),
            distance=dist,
            similarity=similarity_from_distance(metric, dist),
            label=None if label == -1 else label,
        )

    def query_hamming(self, q, r: int) -> list[tuple[int, int]]:
        """The r entries whose binary codes are closest to binarize(q)."""
        if r < 1:
            raise ValueError("r must be >= 1")
        with self._lock.read_locked():
            if self._n == 0:
                if self._dim is None:
                    return []
                self._check_query(q)
                return []
            qv = self._check_query(q)
            qcode = binarize_rows(qv[None, :], self._thresholds.astype(np.float64))[0]
            hd = hamming_to_many(qcode, self._codes[: self._n])
            ids = self._ids[: self._n]
            pick = self._top_by(hd.astype(np.float64), ids, r)
            return [(int(ids[row]), int(hd[row])) for row in pick]

    def query_two_stage(
        self,
        q,
        k: int,
        shortlist_size: int | None = None,
        metric: Metric | str = Metric.COSINE,
    ) -> list[QueryResult]:
        """Hamming shortlist of size R, then exact rerank; top-k returned."""
        if k < 1:
            raise ValueError("k must be >= 1")
        metric = Metric(metric)
        r = self.shortlist_factor * k if shortlist_size is None else int(shortlist_size)
        if r < k:
            raise ShortlistTooSmallError(f"shortlist {r} < k {k}")
        with self._lock.read_locked():
            if self._n == 0:
                if self._dim is None:
                    return []
                self._check_query(q)
                return []
            qv = self._check_query(q)
            qcode = binarize_rows(qv[None, :], self._thresholds.astype(np.float64))[0]
            hd = hamming_to_many(qcode, self._codes[: self._n])
            ids = self._ids[: self._n]
            shortlist = self._top_by(hd.astype(np.float64), ids, r)
            d = self._scores(qv, shortlist, metric)
            pick = self._top_by(d, ids[shortlist], k)
            return [self._result(int(shortlist[j]), float(d[j]), metric) for j in pick]

    # -- persistence -------------------------------------------------------

    def snapshot(self, path) -> int:
        """Refreeze thresholds, recode, and serialize; returns bytes written."""
        with self._lock.write_locked():
            self._refresh_thresholds_unlocked()
            n_words = self._codes.shape[1] if self._dim is not None else 0
            written = write_snapshot(
                path,
                dim=self._dim or 0,
                thresholds=self._thresholds,
                ids=self._ids[: self._n],
                labels=self._labels[: self._n],
                timestamps=self._ts[: self._n],
                vectors=self._vectors[: self._n].reshape(self._n, self._dim or 0),
                codes=self._codes[: self._n].reshape(self._n, n_words),
            )
            self._snapshot_version = 1
            return written

    def restore(self, path) -> IndexStats:
        """Replace all contents from a snapshot file."""
        snap = read_snapshot(path)
        with self._lock.write_locked():
            if snap.dim == 0:
                self._dim = None
                self._thresholds = np.zeros(0, dtype=np.float32)
                self._vectors = np.zeros((0, 0), dtype=np.float32)
                self._codes = np.zeros((0, 0), dtype=np.uint64)
            else:
                self._dim = snap.dim
                self._thresholds = snap.thresholds.copy()
                self._vectors = snap.vectors.copy()
                self._codes = snap.codes.copy()
            self._ids = snap.ids.copy()
            self._labels = snap.labels.copy()
            self._ts = snap.timestamps.copy()
            self._n = snap.ids.shape[0]
            self._pos = {int(item_id): row for row, item_id in enumerate(self._ids[: self._n])}
            self._snapshot_version = snap.version
        return self.stats()

    @classmethod
    def load(cls, path, shortlist_factor: int = 10) -> "VectorIndex":
        idx = cls(shortlist_factor=shortlist_factor)
        idx.restore(path)
        return idx
