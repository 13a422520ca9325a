"""Deterministic synthetic labeled corpora with controllable cluster overlap."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Document


@dataclass(frozen=True)
class SyntheticConfig:
    """Shape of a generated corpus.

    Topic centers sit on the unit sphere around a common hub direction;
    ``inter_spread`` is the displacement pulling centers apart and
    ``intra_spread`` the displacement of members around their center, both
    roughly in units of the unit center length. Each member vector is
    re-normalized, so all embeddings live on the sphere.
    """

    n_topics: int
    counts: tuple[int, ...]
    dim: int = 64
    intra_spread: float = 1.0
    inter_spread: float = 1.0
    seed: int = 42
    topic_prefix: str = "topic"

    def __post_init__(self) -> None:
        if self.n_topics < 1:
            raise ValueError("n_topics must be >= 1")
        if len(self.counts) != self.n_topics:
            raise ValueError(
                f"counts length {len(self.counts)} != n_topics {self.n_topics}"
            )
        if any(count < 1 for count in self.counts):
            raise ValueError("every topic count must be >= 1")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.intra_spread <= 0 or self.inter_spread <= 0:
            raise ValueError("spreads must be > 0")


def _unit(vec: np.ndarray) -> np.ndarray:
    return vec / np.linalg.norm(vec)


def generate_corpus(cfg: SyntheticConfig) -> tuple[list[Document], dict[str, np.ndarray]]:
    """Labeled documents plus one embedding per single-chunk document.

    Embeddings are keyed by the chunk id the documents will get after
    ingestion (``<doc_id>#0``; each text is far below the default chunk
    size). Output is a pure function of the config.
    """
    rng = np.random.default_rng(cfg.seed)
    scale = 1.0 / np.sqrt(cfg.dim)
    hub = _unit(rng.normal(size=cfg.dim))
    docs: list[Document] = []
    vectors: dict[str, np.ndarray] = {}
    for topic_pos, count in enumerate(cfg.counts):
        topic = f"{cfg.topic_prefix}-{topic_pos:02d}"
        center = _unit(hub + cfg.inter_spread * scale * rng.normal(size=cfg.dim))
        for member in range(count):
            doc_id = f"{topic}-{member:04d}"
            docs.append(
                Document(
                    id=doc_id,
                    topic=topic,
                    text=f"{topic} document {member} clause {member % 97}",
                )
            )
            noise = cfg.intra_spread * scale * rng.normal(size=cfg.dim)
            vectors[f"{doc_id}#0"] = _unit(center + noise).astype(np.float32)
    return docs, vectors
