from .locking import RWLock
from .snapshot import read_snapshot, write_snapshot
from .store import IndexEntry, IndexStats, QueryResult, VectorIndex, similarity_from_distance
from .stream import StreamIngestor

__all__ = [
    "IndexEntry",
    "IndexStats",
    "QueryResult",
    "RWLock",
    "StreamIngestor",
    "VectorIndex",
    "read_snapshot",
    "similarity_from_distance",
    "write_snapshot",
]
