"""SIDX snapshot format for the vector index.

Layout (little-endian):
    magic         "SIDX"
    version       u8 = 1
    dim           u32 (0 = uninitialized empty index)
    count         u64
    subcode_width u16
    thresholds    dim x f32
    records       {id u64, label i32 (-1 = none), ts u64,
                   vector dim x f32, code ceil(dim/64) x u64}
    crc32         u32 over every preceding byte

The CRC is checked before any field besides the magic is interpreted, so a
corrupted file can never be partially read as valid data.
"""

from __future__ import annotations

import os
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core.vectorops import SUBCODE_WIDTH
from ..exceptions import CorruptSnapshotError, IoError, VersionUnsupportedError

MAGIC = b"SIDX"
VERSION = 1
_HEADER = struct.Struct("<4sBIQH")
_CRC = struct.Struct("<I")


@dataclass
class SnapshotData:
    version: int
    dim: int
    thresholds: np.ndarray = field(repr=False)
    ids: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    timestamps: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)
    codes: np.ndarray = field(repr=False)


def _record_size(dim: int) -> int:
    n_words = -(-dim // SUBCODE_WIDTH) if dim else 0
    return 8 + 4 + 8 + 4 * dim + 8 * n_words


def write_snapshot(path, dim, thresholds, ids, labels, timestamps, vectors, codes) -> int:
    n = ids.shape[0]
    buf = bytearray(_HEADER.pack(MAGIC, VERSION, dim, n, SUBCODE_WIDTH))
    buf += np.ascontiguousarray(thresholds, dtype="<f4").tobytes()
    for i in range(n):
        buf += struct.pack("<QiQ", int(ids[i]), int(labels[i]), int(timestamps[i]))
        buf += np.ascontiguousarray(vectors[i], dtype="<f4").tobytes()
        buf += np.ascontiguousarray(codes[i], dtype="<u8").tobytes()
    buf += _CRC.pack(zlib.crc32(bytes(buf)))
    tmp = Path(str(path) + ".tmp")
    try:
        tmp.write_bytes(bytes(buf))
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return len(buf)


def read_snapshot(path) -> SnapshotData:
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    if len(buf) < _HEADER.size + _CRC.size:
        raise CorruptSnapshotError("snapshot shorter than header")
    if buf[:4] != MAGIC:
        raise CorruptSnapshotError(f"bad magic {buf[:4]!r}")
    (stated_crc,) = _CRC.unpack_from(buf, len(buf) - _CRC.size)
    if zlib.crc32(buf[: -_CRC.size]) != stated_crc:
        raise CorruptSnapshotError("checksum mismatch")

    _, version, dim, count, subcode_width = _HEADER.unpack_from(buf)
    if version != VERSION:
        raise VersionUnsupportedError(f"snapshot version {version} not supported")
    if subcode_width != SUBCODE_WIDTH:
        raise VersionUnsupportedError(f"subcode width {subcode_width} not supported")

    n_words = -(-dim // SUBCODE_WIDTH) if dim else 0
    expected = _HEADER.size + 4 * dim + count * _record_size(dim) + _CRC.size
    if len(buf) != expected:
        raise CorruptSnapshotError(f"size {len(buf)} != expected {expected}")

    offset = _HEADER.size
    thresholds = np.frombuffer(buf, dtype="<f4", count=dim, offset=offset).astype(np.float32)
    offset += 4 * dim

    ids = np.zeros(count, dtype=np.uint64)
    labels = np.zeros(count, dtype=np.int32)
    timestamps = np.zeros(count, dtype=np.uint64)
    vectors = np.zeros((count, dim), dtype=np.float32)
    codes = np.zeros((count, n_words), dtype=np.uint64)
    for i in range(count):
        ids[i], labels[i], timestamps[i] = struct.unpack_from("<QiQ", buf, offset)
        offset += 20
        vectors[i] = np.frombuffer(buf, dtype="<f4", count=dim, offset=offset)
        offset += 4 * dim
        codes[i] = np.frombuffer(buf, dtype="<u8", count=n_words, offset=offset)
        offset += 8 * n_words

    seen = set()
    for item_id in ids:
        if int(item_id) in seen:
            raise CorruptSnapshotError(f"duplicate id {int(item_id)} in snapshot")
        seen.add(int(item_id))

    return SnapshotData(
        version=version,
        dim=dim,
        thresholds=thresholds,
        ids=ids,
        labels=labels,
        timestamps=timestamps,
        vectors=vectors,
        codes=codes,
    )
