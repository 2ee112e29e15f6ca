"""EMB1 embedding-record file format, plus its JSON-lines equivalent.

Layout (little-endian):
    magic   "EMB1"
    version u8 = 1
    dtype   u8 = 0 (float32)
    reserved u16
    dim     u32
    count   u64
    records: {id u64, label i32 (-1 = none), ts u64, dim x f32}

JSON-lines records look like {"id": 7, "label": 2, "ts": 1690000000,
"vec": [...]}; label and ts are optional.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import CorruptSnapshotError, IoError, VersionUnsupportedError

MAGIC = b"EMB1"
VERSION = 1
DTYPE_F32 = 0
_HEADER = struct.Struct("<4sBBHIQ")
_REC_FIXED = struct.Struct("<QiQ")


@dataclass
class EmbeddingRecord:
    id: int
    vector: np.ndarray = field(repr=False)
    label: int | None = None
    timestamp: int = 0

    @property
    def dim(self) -> int:
        return self.vector.shape[0]


def record_size(dim: int) -> int:
    return _REC_FIXED.size + 4 * dim


def pack_header(dim: int, count: int) -> bytes:
    return _HEADER.pack(MAGIC, VERSION, DTYPE_F32, 0, dim, count)


def unpack_header(buf: bytes) -> tuple[int, int]:
    """Validate an EMB1 header and return (dim, count)."""
    if len(buf) < _HEADER.size:
        raise CorruptSnapshotError("EMB1 header truncated")
    magic, version, dtype, _, dim, count = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise CorruptSnapshotError(f"bad EMB1 magic {magic!r}")
    if version != VERSION:
        raise VersionUnsupportedError(f"EMB1 version {version} not supported")
    if dtype != DTYPE_F32:
        raise VersionUnsupportedError(f"EMB1 dtype {dtype} not supported")
    return dim, count


HEADER_SIZE = _HEADER.size


def pack_record(rec: EmbeddingRecord) -> bytes:
    label = -1 if rec.label is None else int(rec.label)
    vec = np.ascontiguousarray(rec.vector, dtype="<f4")
    return _REC_FIXED.pack(int(rec.id), label, int(rec.timestamp)) + vec.tobytes()


def unpack_record(buf: bytes, offset: int, dim: int) -> EmbeddingRecord:
    rid, label, ts = _REC_FIXED.unpack_from(buf, offset)
    vec = np.frombuffer(buf, dtype="<f4", count=dim, offset=offset + _REC_FIXED.size).astype(np.float64)
    return EmbeddingRecord(id=rid, vector=vec, label=None if label == -1 else label, timestamp=ts)


def write_emb1(path, records: list[EmbeddingRecord], dim: int | None = None) -> int:
    """Write records to an EMB1 file; returns bytes written.

    dim must be given for an empty record list.
    """
    if dim is None:
        if not records:
            raise ValueError("dim is required when writing zero records")
        dim = records[0].dim
    payload = bytearray(pack_header(dim, len(records)))
    for rec in records:
        if rec.dim != dim:
            raise IoError(f"record {rec.id} has dim {rec.dim}, expected {dim}")
        payload += pack_record(rec)
    try:
        Path(path).write_bytes(bytes(payload))
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return len(payload)


def read_emb1(path) -> list[EmbeddingRecord]:
    """Read a complete EMB1 file (count taken from the header)."""
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    dim, count = unpack_header(buf)
    rec_size = record_size(dim)
    if len(buf) < HEADER_SIZE + count * rec_size:
        raise CorruptSnapshotError(f"EMB1 truncated: {len(buf)} bytes for {count} records of dim {dim}")
    out = []
    offset = HEADER_SIZE
    for _ in range(count):
        out.append(unpack_record(buf, offset, dim))
        offset += rec_size
    return out


def parse_jsonl_record(line: str) -> EmbeddingRecord:
    """Parse one JSON-lines ingestion record; raises ValueError on bad input."""
    obj = json.loads(line)
    if not isinstance(obj, dict) or "id" not in obj or "vec" not in obj:
        raise ValueError("record must be an object with id and vec")
    vec = np.asarray(obj["vec"], dtype=np.float64)
    if vec.ndim != 1 or vec.size == 0 or not np.all(np.isfinite(vec)):
        raise ValueError("vec must be a non-empty finite array")
    label = obj.get("label")
    if label is not None:
        label = int(label)
    ts = int(obj.get("ts", time.time()))
    return EmbeddingRecord(id=int(obj["id"]), vector=vec, label=label, timestamp=ts)


def read_jsonl(path) -> list[EmbeddingRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(parse_jsonl_record(line))
    return records


def read_records(path) -> list[EmbeddingRecord]:
    """Read embedding records from EMB1 or JSON-lines, sniffed by magic."""
    p = Path(path)
    try:
        with open(p, "rb") as fh:
            head = fh.read(4)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    if head == MAGIC:
        return read_emb1(p)
    return read_jsonl(p)
