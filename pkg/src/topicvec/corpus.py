"""Labeled corpora: loading, fixed-size chunking, and integrity checks."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import CorpusFormatError
from .fileio import atomic_write


@dataclass(frozen=True, slots=True)
class Document:
    """A source text with a stable id and a topic label."""

    id: str
    topic: str
    text: str

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("document id must be non-empty")
        if not self.topic:
            raise ValueError(f"document {self.id!r}: topic must be non-empty")


@dataclass(frozen=True, slots=True)
class Chunk:
    """A retrievable slice of a document; the id is ``<doc_id>#<ordinal>``."""

    id: str
    doc_id: str
    topic: str
    text: str
    ordinal: int


@dataclass(frozen=True, slots=True)
class ChunkingConfig:
    """Fixed-size splitting policy, measured in unicode code points."""

    chunk_size: int = 2000

    def __post_init__(self) -> None:
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")


def _parse_line(path: Path, lineno: int, line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"{path}: line {lineno}: invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise CorpusFormatError(f"{path}: line {lineno}: expected a JSON object")
    return obj


def _require_str(path: Path, lineno: int, obj: dict, field: str) -> str:
    if field not in obj:
        raise CorpusFormatError(f"{path}: line {lineno}: missing field {field!r}")
    value = obj[field]
    if not isinstance(value, str):
        raise CorpusFormatError(f"{path}: line {lineno}: field {field!r} must be a string")
    return value


def load_corpus(path: str | Path) -> list[Document]:
    """Load a corpus file (one ``{"id", "topic", "text"}`` object per line).

    Documents are returned in file order. Malformed lines, missing fields,
    empty ids/topics, and duplicate ids are reported with their line number.
    """
    path = Path(path)
    docs: list[Document] = []
    seen: dict[str, int] = {}
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            obj = _parse_line(path, lineno, line)
            doc_id = _require_str(path, lineno, obj, "id")
            topic = _require_str(path, lineno, obj, "topic")
            text = _require_str(path, lineno, obj, "text")
            if not doc_id:
                raise CorpusFormatError(f"{path}: line {lineno}: empty document id")
            if not topic:
                raise CorpusFormatError(f"{path}: line {lineno}: empty topic for id {doc_id!r}")
            if doc_id in seen:
                raise CorpusFormatError(
                    f"{path}: line {lineno}: duplicate document id {doc_id!r} "
                    f"(first seen at line {seen[doc_id]})"
                )
            seen[doc_id] = lineno
            docs.append(Document(id=doc_id, topic=topic, text=text))
    return docs


def chunk_document(doc: Document, cfg: ChunkingConfig = ChunkingConfig()) -> list[Chunk]:
    """Split a document into consecutive chunks of ``cfg.chunk_size`` code points.

    Every chunk except possibly the last has exactly ``chunk_size`` characters,
    so concatenating the chunk texts in ordinal order reproduces the document
    text exactly. Empty text yields no chunks.
    """
    size = cfg.chunk_size
    n_chunks = math.ceil(len(doc.text) / size)
    return [
        Chunk(
            id=f"{doc.id}#{ordinal}",
            doc_id=doc.id,
            topic=doc.topic,
            text=doc.text[ordinal * size : (ordinal + 1) * size],
            ordinal=ordinal,
        )
        for ordinal in range(n_chunks)
    ]


def corpus_stats(chunks: list[Chunk]) -> dict[str, int]:
    """Per-topic chunk counts, keyed in first-seen order."""
    return dict(Counter(chunk.topic for chunk in chunks))


def save_corpus(docs: list[Document], path: str | Path) -> None:
    """Write documents as JSON lines (id, topic, text)."""
    with atomic_write(path) as handle:
        for doc in docs:
            handle.write(json.dumps(asdict(doc), ensure_ascii=False) + "\n")


def save_chunks(chunks: list[Chunk], path: str | Path) -> None:
    """Write chunks as JSON lines (id, doc_id, topic, text, ordinal)."""
    with atomic_write(path) as handle:
        for chunk in chunks:
            handle.write(json.dumps(asdict(chunk), ensure_ascii=False) + "\n")


def load_chunks(path: str | Path) -> list[Chunk]:
    """Read a chunks file produced by :func:`save_chunks`."""
    path = Path(path)
    chunks: list[Chunk] = []
    seen: dict[str, int] = {}
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            obj = _parse_line(path, lineno, line)
            chunk_id = _require_str(path, lineno, obj, "id")
            doc_id = _require_str(path, lineno, obj, "doc_id")
            topic = _require_str(path, lineno, obj, "topic")
            text = _require_str(path, lineno, obj, "text")
            ordinal = obj.get("ordinal")
            if not isinstance(ordinal, int) or isinstance(ordinal, bool) or ordinal < 0:
                raise CorpusFormatError(
                    f"{path}: line {lineno}: field 'ordinal' must be a non-negative integer"
                )
            if chunk_id in seen:
                raise CorpusFormatError(
                    f"{path}: line {lineno}: duplicate chunk id {chunk_id!r} "
                    f"(first seen at line {seen[chunk_id]})"
                )
            seen[chunk_id] = lineno
            chunks.append(Chunk(id=chunk_id, doc_id=doc_id, topic=topic, text=text, ordinal=ordinal))
    return chunks
