"""Flat exact cosine index, two-stage topic routing, and index persistence."""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .corpus import Chunk
from .errors import DimensionMismatchError, IndexFormatError, ZeroVectorError
from .fileio import atomic_write
from .kernels import dot_scores
from .topics import TopicEmbedding, TransformMethod, transform_entries

MAGIC = b"TPIX"
FORMAT_VERSION = 1

_METHOD_TAG = {
    TransformMethod.ORIGINAL: 0,
    TransformMethod.AVERAGE: 1,
    TransformMethod.APPEND: 2,
}
_TAG_METHOD = {tag: method for method, tag in _METHOD_TAG.items()}

_UNIT_TOL = 1e-6


class Hit(NamedTuple):
    chunk_id: str
    topic: str
    score: float


@dataclass(frozen=True)
class SearchResult:
    """Ranked hits, scores non-increasing, at most ``k`` of them."""

    hits: tuple[Hit, ...]
    k: int


@dataclass(frozen=True, eq=False)
class VectorIndex:
    """Immutable flat collection of (chunk_id, topic, unit vector) records.

    Rows of ``matrix`` are float32 unit vectors in insertion order;
    ``topic_vectors`` holds one unit vector per topic for the coarse stage
    of two-stage search.
    """

    method: TransformMethod
    dim: int
    ids: tuple[str, ...]
    topics: tuple[str, ...]
    matrix: np.ndarray
    topic_vectors: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        n = len(self.ids)
        if n == 0:
            raise ValueError("index must contain at least one record")
        if len(self.topics) != n or self.matrix.shape != (n, self.dim):
            raise ValueError("index fields have inconsistent lengths")
        if self.matrix.dtype != np.float32:
            raise ValueError("index matrix must be float32")
        if len(set(self.ids)) != n:
            raise ValueError("chunk ids must be unique")
        norms = np.linalg.norm(self.matrix.astype(np.float64), axis=1)
        if not np.all(np.abs(norms - 1.0) <= _UNIT_TOL):
            raise ValueError("index rows must be unit vectors")
        if self.method is TransformMethod.APPEND and self.dim % 2:
            raise ValueError("append index dimension must be even")
        # append doubles the record dim; topic vectors keep the base dim
        base_dim = self.dim // 2 if self.method is TransformMethod.APPEND else self.dim
        for topic, vec in self.topic_vectors.items():
            if vec.shape != (base_dim,):
                raise ValueError(f"topic {topic!r}: bad vector shape {vec.shape}")
            if abs(float(np.linalg.norm(vec.astype(np.float64))) - 1.0) > _UNIT_TOL:
                raise ValueError(f"topic {topic!r}: vector is not unit length")
        missing = set(self.topics) - set(self.topic_vectors)
        if missing:
            raise ValueError(f"records reference topics with no vector: {sorted(missing)}")

    def __len__(self) -> int:
        return len(self.ids)

    @cached_property
    def _ids_array(self) -> np.ndarray:
        return np.array(self.ids)

    @cached_property
    def _row_norms(self) -> np.ndarray:
        return np.linalg.norm(self.matrix.astype(np.float64), axis=1)

    @cached_property
    def _topic_table(self) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
        names = tuple(self.topic_vectors)
        mat = np.stack([self.topic_vectors[name] for name in names])
        return names, mat, np.linalg.norm(mat.astype(np.float64), axis=1)


def build_index(
    entries: Sequence[tuple[Chunk, np.ndarray]],
    topics: Mapping[str, TopicEmbedding],
    method: TransformMethod,
) -> VectorIndex:
    """Transform, normalize, and pack entries into a searchable index.

    ``topics`` should be the centroids of the *normalized* chunk vectors
    (see :func:`topicvec.topics.compute_topic_embeddings`); records keep
    input order.
    """
    entries = list(entries)
    if not entries:
        raise ValueError("cannot build an index from no entries")
    ids = [chunk.id for chunk, _ in entries]
    seen: set[str] = set()
    for chunk_id in ids:
        if chunk_id in seen:
            raise ValueError(f"duplicate chunk id {chunk_id!r}")
        seen.add(chunk_id)
    finals = transform_entries(entries, topics, method)
    topic_vectors: dict[str, np.ndarray] = {}
    for name, topic in topics.items():
        vec = np.asarray(topic.vector, dtype=np.float64)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise ZeroVectorError(f"topic {name!r} has a zero vector")
        topic_vectors[name] = (vec / norm).astype(np.float32)
    return VectorIndex(
        method=method,
        dim=finals.shape[1],
        ids=tuple(ids),
        topics=tuple(chunk.topic for chunk, _ in entries),
        matrix=finals.astype(np.float32),
        topic_vectors=topic_vectors,
    )


def _prepare_query(index: VectorIndex, q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != index.dim:
        got = q.shape[0] if q.ndim == 1 else q.shape
        raise DimensionMismatchError(
            f"query dim {got} != index dim {index.dim} (method {index.method.value!r}); "
            "apply transform_query for this method first"
        )
    norm = float(np.linalg.norm(q))
    if norm == 0.0:
        raise ZeroVectorError("cannot search with a zero query vector")
    return q / norm


def _top_hits(
    index: VectorIndex, scores: np.ndarray, candidates: np.ndarray, k: int
) -> tuple[Hit, ...]:
    # ties broken by lexicographically smaller chunk id for a total order
    order = np.lexsort((index._ids_array[candidates], -scores[candidates]))
    top = candidates[order[: min(k, candidates.shape[0])]]
    return tuple(Hit(index.ids[i], index.topics[i], float(scores[i])) for i in top)


def search(index: VectorIndex, q: np.ndarray, k: int) -> SearchResult:
    """Exact top-k records by cosine score, deterministic under ties."""
    if k < 1:
        raise ValueError("k must be >= 1")
    unit = _prepare_query(index, q)
    scores = dot_scores(index.matrix, unit) / index._row_norms
    np.clip(scores, -1.0, 1.0, out=scores)
    return SearchResult(hits=_top_hits(index, scores, np.arange(len(index)), k), k=k)


def two_stage_search(
    index: VectorIndex, q: np.ndarray, k: int, top_m_topics: int = 1
) -> SearchResult:
    """Rank topics first, then search only chunks of the surviving topics.

    Stage 1 keeps the ``top_m_topics`` topics closest to the query (ties by
    topic name); stage 2 is an exact top-k search restricted to them. Only
    indexes built with the original method support this: the topic stage
    compares the raw query against per-topic centroids.
    """
    if index.method is not TransformMethod.ORIGINAL:
        raise ValueError(
            f"two-stage search requires an 'original' index, got {index.method.value!r}"
        )
    if k < 1:
        raise ValueError("k must be >= 1")
    if top_m_topics < 1:
        raise ValueError("top_m_topics must be >= 1")
    if not index.topic_vectors:
        raise ValueError("index has no topic vectors")
    unit = _prepare_query(index, q)
    names, topic_matrix, topic_norms = index._topic_table
    topic_scores = dot_scores(topic_matrix, unit) / topic_norms
    topic_order = np.lexsort((np.array(names), -topic_scores))
    survivors = {names[i] for i in topic_order[: min(top_m_topics, len(names))]}
    candidates = np.flatnonzero(np.fromiter(
        (topic in survivors for topic in index.topics), dtype=bool, count=len(index)
    ))
    scores = dot_scores(index.matrix, unit) / index._row_norms
    np.clip(scores, -1.0, 1.0, out=scores)
    return SearchResult(hits=_top_hits(index, scores, candidates, k), k=k)


# On-disk layout (all little-endian), checksummed:
#   magic "TPIX"
#   payload:
#     u16 format version, u8 method tag, u32 dim, u64 record count,
#     u32 topic count,
#     per topic:  u32 name length, name utf-8, dim(base) * f32
#     per record: u32 id length, id utf-8, u32 topic table ref, dim * f32
#   u32 crc32 of the payload


def save_index(index: VectorIndex, path: str | Path) -> None:
    """Serialize the index; the write is atomic."""
    payload = bytearray()
    payload += struct.pack(
        "<HBIQI",
        FORMAT_VERSION,
        _METHOD_TAG[index.method],
        index.dim,
        len(index),
        len(index.topic_vectors),
    )
    topic_ref = {}
    for pos, (name, vec) in enumerate(index.topic_vectors.items()):
        topic_ref[name] = pos
        encoded = name.encode("utf-8")
        payload += struct.pack("<I", len(encoded))
        payload += encoded
        payload += vec.astype("<f4", copy=False).tobytes()
    for chunk_id, topic, row in zip(index.ids, index.topics, index.matrix):
        encoded = chunk_id.encode("utf-8")
        payload += struct.pack("<I", len(encoded))
        payload += encoded
        payload += struct.pack("<I", topic_ref[topic])
        payload += row.astype("<f4", copy=False).tobytes()
    with atomic_write(path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(payload)
        handle.write(struct.pack("<I", zlib.crc32(bytes(payload))))


class _Reader:
    def __init__(self, data: bytes, start: int, end: int) -> None:
        self.data = data
        self.pos = start
        self.end = end

    def take(self, count: int, what: str) -> bytes:
        if self.pos + count > self.end:
            raise IndexFormatError(f"truncated index file while reading {what}")
        chunk = self.data[self.pos : self.pos + count]
        self.pos += count
        return chunk

    def unpack(self, fmt: str, what: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def load_index(path: str | Path) -> VectorIndex:
    """Load a saved index; corrupt or truncated files raise without partial state."""
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC):
        raise IndexFormatError("truncated index file: missing magic")
    if data[: len(MAGIC)] != MAGIC:
        raise IndexFormatError("bad magic: not an index file")
    if len(data) < len(MAGIC) + 4:
        raise IndexFormatError("truncated index file: missing checksum")
    reader = _Reader(data, len(MAGIC), len(data) - 4)
    version, tag, dim, count, n_topics = reader.unpack("<HBIQI", "header")
    if version != FORMAT_VERSION:
        raise IndexFormatError(f"unsupported index format version {version}")
    if tag not in _TAG_METHOD:
        raise IndexFormatError(f"unknown method tag {tag}")
    method = _TAG_METHOD[tag]
    if dim < 1:
        raise IndexFormatError("index dimension must be >= 1")
    if count * (8 + 4 * dim) > len(data):
        raise IndexFormatError("truncated index file: record count exceeds file size")
    base_dim = dim // 2 if method is TransformMethod.APPEND else dim
    topic_vectors: dict[str, np.ndarray] = {}
    topic_names: list[str] = []
    for _ in range(n_topics):
        (name_len,) = reader.unpack("<I", "topic name length")
        name = reader.take(name_len, "topic name").decode("utf-8")
        vec = np.frombuffer(
            reader.take(4 * base_dim, f"topic {name!r} vector"), dtype="<f4"
        ).copy()
        topic_vectors[name] = vec
        topic_names.append(name)
    ids: list[str] = []
    topics: list[str] = []
    matrix = np.empty((count, dim), dtype=np.float32)
    for row in range(count):
        (id_len,) = reader.unpack("<I", "record id length")
        chunk_id = reader.take(id_len, "record id").decode("utf-8")
        (ref,) = reader.unpack("<I", "record topic ref")
        if ref >= len(topic_names):
            raise IndexFormatError(f"record {chunk_id!r}: topic ref {ref} out of range")
        matrix[row] = np.frombuffer(
            reader.take(4 * dim, f"record {chunk_id!r} vector"), dtype="<f4"
        )
        ids.append(chunk_id)
        topics.append(topic_names[ref])
    if reader.pos != reader.end:
        raise IndexFormatError("trailing bytes after the last record")
    (stored_crc,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(data[len(MAGIC) : -4]) != stored_crc:
        raise IndexFormatError("checksum failure: index payload is corrupt")
    try:
        return VectorIndex(
            method=method,
            dim=dim,
            ids=tuple(ids),
            topics=tuple(topics),
            matrix=matrix,
            topic_vectors=topic_vectors,
        )
    except ValueError as exc:
        raise IndexFormatError(f"index file violates invariants: {exc}") from exc
