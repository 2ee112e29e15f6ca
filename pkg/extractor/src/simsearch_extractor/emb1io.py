"""EMB1 writer implementing the engine's embedding-record file interface.

Layout (little-endian): magic "EMB1", version u8=1, dtype u8=0 (f32),
reserved u16, dim u32, count u64, then records
{id u64, label i32 (-1 = none), ts u64, dim x f32}.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"EMB1"
_HEADER = struct.Struct("<4sBBHIQ")
_REC = struct.Struct("<QiQ")


def write_emb1(path, records: list[tuple[int, np.ndarray, int | None, int]], dim: int) -> int:
    """records are (id, vector, label, timestamp) tuples; returns bytes written."""
    buf = bytearray(_HEADER.pack(MAGIC, 1, 0, 0, dim, len(records)))
    for item_id, vector, label, ts in records:
        if vector.shape != (dim,):
            raise ValueError(f"record {item_id} has shape {vector.shape}, expected ({dim},)")
        buf += _REC.pack(item_id, -1 if label is None else label, ts)
        buf += np.ascontiguousarray(vector, dtype="<f4").tobytes()
    Path(path).write_bytes(bytes(buf))
    return len(buf)
