"""Vector providers and vector math: built-in TF-IDF, vector files, cosine."""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .corpus import Chunk
from .errors import CorpusFormatError, DimensionMismatchError, ZeroVectorError
from .fileio import atomic_write

# Unicode letters and digits, lowercased; underscore is a separator.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric unicode characters."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class TfIdfModel:
    """Fitted vocabulary and inverse-document-frequency weights.

    ``vocabulary`` maps token -> column index in lexicographic token order;
    ``idf`` holds one weight per column, all strictly positive.
    """

    vocabulary: dict[str, int]
    idf: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.vocabulary)


def fit_tfidf(chunks: Iterable[Chunk]) -> TfIdfModel:
    """Fit a TF-IDF model over chunk texts.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1, with N the chunk count and
    df(t) the number of chunks containing token t (smooth variant, never
    divides by zero).
    """
    texts = [chunk.text for chunk in chunks]
    if not texts:
        raise ValueError("cannot fit TF-IDF on an empty corpus")
    df: Counter[str] = Counter()
    for text in texts:
        df.update(set(tokenize(text)))
    if not df:
        raise ValueError("corpus contains no tokens")
    vocabulary = {token: i for i, token in enumerate(sorted(df))}
    n = len(texts)
    idf = np.array(
        [math.log((1 + n) / (1 + df[token])) + 1.0 for token in vocabulary],
        dtype=np.float64,
    )
    return TfIdfModel(vocabulary=vocabulary, idf=idf)


def embed_tfidf(model: TfIdfModel, text: str) -> np.ndarray:
    """Raw term counts times idf, L2-normalized.

    Out-of-vocabulary tokens are ignored; a text with no in-vocabulary
    tokens embeds to the zero vector (returned unnormalized).
    """
    vec = np.zeros(model.dim)
    for token, count in Counter(tokenize(text)).items():
        col = model.vocabulary.get(token)
        if col is not None:
            vec[col] = count * model.idf[col]
    return l2_normalize(vec)


def save_tfidf_model(model: TfIdfModel, path: str | Path) -> None:
    payload = {"vocabulary": list(model.vocabulary), "idf": model.idf.tolist()}
    with atomic_write(path) as handle:
        json.dump(payload, handle, ensure_ascii=False)
        handle.write("\n")


def load_tfidf_model(path: str | Path) -> TfIdfModel:
    path = Path(path)
    with path.open(encoding="utf-8") as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"{path}: invalid JSON: {exc}") from exc
    tokens = payload.get("vocabulary")
    idf = payload.get("idf")
    if not isinstance(tokens, list) or not isinstance(idf, list) or len(tokens) != len(idf):
        raise CorpusFormatError(f"{path}: expected matching 'vocabulary' and 'idf' lists")
    return TfIdfModel(
        vocabulary={token: i for i, token in enumerate(tokens)},
        idf=np.asarray(idf, dtype=np.float64),
    )


def l2_normalize(v: np.ndarray) -> np.ndarray:
    """Scale ``v`` to unit L2 norm; the zero vector is returned unchanged.

    Input that is already unit-length (to the precision of its dtype) is
    returned as-is, which makes normalization exactly idempotent.
    """
    arr = np.asarray(v)
    if arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(np.float64)
    norm = float(np.linalg.norm(arr.astype(np.float64, copy=False)))
    if norm == 0.0:
        return arr
    tol = 1e-6 if arr.dtype == np.float32 else 1e-12
    if abs(norm - 1.0) <= tol:
        return arr
    return arr / arr.dtype.type(norm)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two nonzero vectors, clamped to [-1, 1]."""
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise DimensionMismatchError(
            f"cosine_similarity: dimensions differ ({va.shape} vs {vb.shape})"
        )
    norm_a = float(np.linalg.norm(va))
    norm_b = float(np.linalg.norm(vb))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVectorError("cosine_similarity is undefined for zero vectors")
    return float(min(1.0, max(-1.0, float(va @ vb) / (norm_a * norm_b))))


@dataclass(frozen=True)
class EmbeddingsFile:
    """Parsed per-line vector file: id -> vector map plus the shared dimension."""

    vectors: dict[str, np.ndarray]
    dim: int
    method: str | None = None


def load_embeddings_file(path: str | Path) -> EmbeddingsFile:
    """Read a ``{"id", "vector"}`` JSON-lines file.

    An optional first line ``{"method": ..., "dim": ...}`` (written for
    transformed vectors) is recognized as a header. All vectors must share
    one dimension and contain only finite components; offending records are
    reported by id.
    """
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    method: str | None = None
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}: line {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise CorpusFormatError(f"{path}: line {lineno}: expected a JSON object")
            if not vectors and dim is None and "id" not in obj and "method" in obj:
                header_dim = obj.get("dim")
                if not isinstance(header_dim, int) or header_dim < 1:
                    raise CorpusFormatError(f"{path}: line {lineno}: header 'dim' must be >= 1")
                if not isinstance(obj["method"], str):
                    raise CorpusFormatError(f"{path}: line {lineno}: header 'method' must be a string")
                dim = header_dim
                method = obj["method"]
                continue
            rec_id = obj.get("id")
            raw = obj.get("vector")
            if not isinstance(rec_id, str) or not rec_id:
                raise CorpusFormatError(f"{path}: line {lineno}: missing or empty 'id'")
            if not isinstance(raw, list) or not raw:
                raise CorpusFormatError(f"{path}: id {rec_id!r}: 'vector' must be a non-empty list")
            try:
                vec = np.asarray(raw, dtype=np.float64)
            except (TypeError, ValueError) as exc:
                raise CorpusFormatError(f"{path}: id {rec_id!r}: non-numeric component") from exc
            if vec.ndim != 1:
                raise CorpusFormatError(f"{path}: id {rec_id!r}: 'vector' must be flat")
            if not np.all(np.isfinite(vec)):
                raise CorpusFormatError(f"{path}: id {rec_id!r}: non-finite component")
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise CorpusFormatError(
                    f"{path}: id {rec_id!r}: dimension {vec.shape[0]} != expected {dim}"
                )
            if rec_id in vectors:
                raise CorpusFormatError(f"{path}: duplicate id {rec_id!r}")
            vectors[rec_id] = vec.astype(np.float32)
    if not vectors:
        raise CorpusFormatError(f"{path}: no vector records found")
    assert dim is not None
    return EmbeddingsFile(vectors=vectors, dim=dim, method=method)


def save_embeddings_file(
    path: str | Path,
    vectors: Mapping[str, np.ndarray],
    method: str | None = None,
) -> None:
    """Write vectors as JSON lines at 32-bit precision, in mapping order.

    When ``method`` is given, a header line ``{"method", "dim"}`` is written
    first (the format used for transformed embeddings).
    """
    if not vectors:
        raise ValueError("refusing to write an empty embeddings file")
    dims = {np.asarray(v).shape[0] for v in vectors.values()}
    if len(dims) != 1:
        raise DimensionMismatchError(f"vectors have mixed dimensions: {sorted(dims)}")
    dim = dims.pop()
    with atomic_write(path) as handle:
        if method is not None:
            handle.write(json.dumps({"method": method, "dim": int(dim)}) + "\n")
        for rec_id, vec in vectors.items():
            values = [float(x) for x in np.asarray(vec, dtype=np.float32)]
            handle.write(json.dumps({"id": rec_id, "vector": values}) + "\n")
