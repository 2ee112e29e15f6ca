"""Append-only file tailing that feeds the index with upsert semantics.

Replaces a message-bus consumer at desk scale: a producer appends embedding
records (EMB1 binary or JSON-lines) to a file and the ingestor polls it,
inserting whatever complete records have appeared. Malformed records are
skipped and counted, never fatal; a partial binary record at the tail just
waits for the rest.
"""

from __future__ import annotations

import threading
import time

from .. import emb1
from ..exceptions import SimSearchError
from .store import VectorIndex


class StreamIngestor:
    """Background tailer inserting records from `path` into `index`."""

    def __init__(self, index: VectorIndex, path, poll_interval: float = 0.2):
        self.index = index
        self.path = str(path)
        self.poll_interval = poll_interval
        self._offset = 0
        self._mode: str | None = None  # "emb1" | "jsonl"
        self._dim: int | None = None
        self._line_buf = b""
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self.ingested = 0
        self.skipped = 0

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> "StreamIngestor":
        if self._thread is not None:
            raise RuntimeError("ingestor already started")
        self._thread = threading.Thread(target=self._run, name="simsearch-ingest", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
            self._thread = None

    def __enter__(self) -> "StreamIngestor":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    def wait_for(self, ingested: int, timeout: float = 10.0) -> bool:
        """Block until the cumulative ingested count reaches a target."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            if self.ingested >= ingested:
                return True
            time.sleep(0.02)
        return self.ingested >= ingested

    def _run(self) -> None:
        while not self._stop.is_set():
            self.poll_once()
            self._stop.wait(self.poll_interval)
        self.poll_once()

    # -- polling ------------------------------------------------------------

    def poll_once(self) -> None:
        """Read and ingest whatever new complete records are available."""
        with self._lock:
            try:
                with open(self.path, "rb") as fh:
                    fh.seek(self._offset)
                    data = fh.read()
            except OSError:
                return
            if not data and self._mode is not None:
                return
            if self._mode is None:
                if not self._sniff(data):
                    return
                data = data[self._offset :] if self._offset else data
            if self._mode == "emb1":
                self._consume_emb1(data)
            else:
                self._consume_jsonl(data)

    def _sniff(self, data: bytes) -> bool:
        if len(data) < 4:
            return False
        if data[:4] == emb1.MAGIC:
            if len(data) < emb1.HEADER_SIZE:
                return False
            self._dim, _ = emb1.unpack_header(data)
            self._mode = "emb1"
            self._offset = emb1.HEADER_SIZE
            return True
        self._mode = "jsonl"
        return True

    def _consume_emb1(self, data: bytes) -> None:
        rec_size = emb1.record_size(self._dim)
        n_complete = len(data) // rec_size
        for i in range(n_complete):
            rec = emb1.unpack_record(data, i * rec_size, self._dim)
            self._upsert(rec)
        self._offset += n_complete * rec_size

    def _consume_jsonl(self, data: bytes) -> None:
        self._offset += len(data)
        buf = self._line_buf + data
        lines = buf.split(b"\n")
        self._line_buf = lines.pop()  # trailing partial line waits
        for raw in lines:
            raw = raw.strip()
            if not raw:
                continue
            try:
                rec = emb1.parse_jsonl_record(raw.decode("utf-8"))
            except (ValueError, UnicodeDecodeError):
                self.skipped += 1
                continue
            self._upsert(rec)

    def _upsert(self, rec: emb1.EmbeddingRecord) -> None:
        try:
            self.index.insert(rec.id, rec.vector, label=rec.label, timestamp=rec.timestamp, upsert=True)
            self.ingested += 1
        except SimSearchError:
            self.skipped += 1
