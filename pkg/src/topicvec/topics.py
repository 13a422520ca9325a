"""Topic centroids and the document/query embedding transforms."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Chunk
from .embedding import TfIdfModel, embed_tfidf
from .errors import DimensionMismatchError, ZeroVectorError


class TransformMethod(Enum):
    """How document vectors are combined with their topic vector."""

    ORIGINAL = "original"
    AVERAGE = "average"
    APPEND = "append"

    @classmethod
    def parse(cls, name: str) -> "TransformMethod":
        for method in cls:
            if method.value == name.lower():
                return method
        raise ValueError(
            f"unknown method {name!r}; expected one of "
            f"{', '.join(m.value for m in cls)}"
        )


@dataclass(frozen=True)
class TopicEmbedding:
    """Per-topic centroid: element-wise mean of member chunk vectors."""

    topic: str
    vector: np.ndarray
    member_count: int


def _as_vector(topic: "TopicEmbedding | np.ndarray") -> np.ndarray:
    vec = topic.vector if isinstance(topic, TopicEmbedding) else topic
    return np.asarray(vec, dtype=np.float64)


def _check_dims(doc: np.ndarray, topic: np.ndarray) -> None:
    if doc.shape != topic.shape:
        raise DimensionMismatchError(
            f"document dim {doc.shape[0]} != topic dim {topic.shape[0]}"
        )


def compute_topic_embeddings(
    entries: Sequence[tuple[Chunk, np.ndarray]],
) -> dict[str, TopicEmbedding]:
    """Element-wise mean of member vectors per topic, uniform weights.

    Callers that want cosine-consistent topic centroids should normalize the
    chunk vectors first; this function averages exactly what it is given.
    """
    entries = list(entries)
    if not entries:
        raise ValueError("cannot compute topic embeddings from an empty corpus")
    dim = np.asarray(entries[0][1]).shape[0]
    members: dict[str, list[np.ndarray]] = {}
    for chunk, vec in entries:
        arr = np.asarray(vec, dtype=np.float64)
        if arr.shape[0] != dim:
            raise DimensionMismatchError(
                f"chunk {chunk.id!r}: dim {arr.shape[0]} != expected {dim}"
            )
        members.setdefault(chunk.topic, []).append(arr)
    return {
        topic: TopicEmbedding(
            topic=topic,
            vector=np.mean(np.stack(vecs), axis=0),
            member_count=len(vecs),
        )
        for topic, vecs in members.items()
    }


def compute_topic_embeddings_tfidf(
    model: TfIdfModel, chunks: Iterable[Chunk]
) -> dict[str, TopicEmbedding]:
    """Alternative topic vectors: TF-IDF of each topic's concatenated text.

    Only meaningful when the chunk vectors come from the same TF-IDF model;
    the statistical embedding has no length limit, so the whole topic can be
    embedded in one shot instead of averaging member vectors.
    """
    grouped: dict[str, list[str]] = {}
    counts: dict[str, int] = {}
    for chunk in chunks:
        grouped.setdefault(chunk.topic, []).append(chunk.text)
        counts[chunk.topic] = counts.get(chunk.topic, 0) + 1
    if not grouped:
        raise ValueError("cannot compute topic embeddings from an empty corpus")
    return {
        topic: TopicEmbedding(
            topic=topic,
            vector=embed_tfidf(model, "\n".join(texts)),
            member_count=counts[topic],
        )
        for topic, texts in grouped.items()
    }


def transform_average(doc: np.ndarray, topic: "TopicEmbedding | np.ndarray") -> np.ndarray:
    """Element-wise mean of the document vector and its topic vector."""
    doc = np.asarray(doc, dtype=np.float64)
    topic_vec = _as_vector(topic)
    _check_dims(doc, topic_vec)
    return (doc + topic_vec) / 2.0


def transform_append(doc: np.ndarray, topic: "TopicEmbedding | np.ndarray") -> np.ndarray:
    """Concatenate the document and topic vectors, doubling the dimension.

    Both halves are L2-normalized independently first, so neither side
    dominates by magnitude and query duplication keeps scores an equal
    blend of document and topic similarity.
    """
    doc = np.asarray(doc, dtype=np.float64)
    topic_vec = _as_vector(topic)
    _check_dims(doc, topic_vec)
    doc_norm = float(np.linalg.norm(doc))
    topic_norm = float(np.linalg.norm(topic_vec))
    if doc_norm == 0.0:
        raise ZeroVectorError("append transform: document vector is zero")
    if topic_norm == 0.0:
        raise ZeroVectorError("append transform: topic vector is zero")
    return np.concatenate([doc / doc_norm, topic_vec / topic_norm])


def transform_query(q: np.ndarray, method: TransformMethod) -> np.ndarray:
    """Prepare a query vector for an index built with ``method``.

    Original and average indexes keep the query dimension; the append
    method doubles it by stacking the normalized query with itself.
    """
    q = np.asarray(q, dtype=np.float64)
    norm = float(np.linalg.norm(q))
    if norm == 0.0:
        raise ZeroVectorError("cannot transform a zero query vector")
    unit = q / norm
    if method is TransformMethod.APPEND:
        return np.concatenate([unit, unit])
    return unit


def transform_entries(
    entries: Sequence[tuple[Chunk, np.ndarray]],
    topics: Mapping[str, TopicEmbedding],
    method: TransformMethod,
) -> np.ndarray:
    """Apply ``method`` to every chunk vector and return unit row vectors.

    Chunk vectors are normalized before the transform and the transformed
    vectors are normalized again, matching what a cosine index stores.
    Raises when a chunk's topic is missing from ``topics``, on dimension
    mismatches, and when a vector (before or after transform) is zero.
    """
    rows: list[np.ndarray] = []
    for chunk, vec in entries:
        doc = np.asarray(vec, dtype=np.float64)
        norm = float(np.linalg.norm(doc))
        if norm == 0.0:
            raise ZeroVectorError(f"chunk {chunk.id!r}: zero embedding cannot be indexed")
        doc = doc / norm
        if chunk.topic not in topics:
            raise ValueError(f"chunk {chunk.id!r}: topic {chunk.topic!r} not in topic map")
        if method is TransformMethod.ORIGINAL:
            out = doc
        elif method is TransformMethod.AVERAGE:
            out = transform_average(doc, topics[chunk.topic])
        else:
            out = transform_append(doc, topics[chunk.topic])
        out_norm = float(np.linalg.norm(out))
        if out_norm == 0.0:
            raise ZeroVectorError(
                f"chunk {chunk.id!r}: zero vector after {method.value} transform"
            )
        rows.append(out / out_norm)
    if not rows:
        raise ValueError("no entries to transform")
    return np.vstack(rows)
