"""Cluster validity indices and retrieval-quality metrics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateClustersError
from .kernels import cluster_distance_sums
from .retrieval import SearchResult
from .topics import TransformMethod


@dataclass(frozen=True)
class LabeledPoints:
    """Points with one cluster label each; at least 2 points and 2 labels.

    Labels are mapped to integer codes in sorted-name order, so the indices
    are invariant under label renaming by construction.
    """

    points: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-D array")
        labels = tuple(self.labels)
        if len(labels) != pts.shape[0]:
            raise ValueError("one label per point is required")
        if pts.shape[0] < 2:
            raise ValueError("at least 2 points are required")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        names = tuple(sorted(set(labels)))
        if len(names) < 2:
            raise ValueError("at least 2 distinct labels are required")
        by_name = {name: code for code, name in enumerate(names)}
        codes = np.array([by_name[label] for label in labels], dtype=np.int64)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "label_names", names)
        object.__setattr__(self, "codes", codes)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def k_clusters(self) -> int:
        return len(self.label_names)


def _centroids(data: LabeledPoints) -> tuple[np.ndarray, np.ndarray]:
    counts = np.bincount(data.codes, minlength=data.k_clusters).astype(np.float64)
    sums = np.zeros((data.k_clusters, data.points.shape[1]))
    np.add.at(sums, data.codes, data.points)
    return sums / counts[:, None], counts


def silhouette(data: LabeledPoints, metric: str = "euclidean") -> float:
    """Mean over points of ``(b - a) / max(a, b)``.

    ``a`` is the mean distance to the point's own cluster excluding itself;
    ``b`` is the smallest mean distance to any other cluster. Points in
    singleton clusters contribute 0.
    """
    if metric != "euclidean":
        raise ValueError(f"unsupported metric {metric!r} (only 'euclidean')")
    k = data.k_clusters
    sums = cluster_distance_sums(data.points, data.codes, k)
    counts = np.bincount(data.codes, minlength=k)
    idx = np.arange(data.n)
    own_count = counts[data.codes]
    a = sums[idx, data.codes] / np.maximum(own_count - 1, 1)
    mean_to_cluster = sums / counts[None, :].astype(np.float64)
    mean_to_cluster[idx, data.codes] = np.inf
    b = mean_to_cluster.min(axis=1)
    denom = np.maximum(a, b)
    safe = np.where(denom > 0.0, denom, 1.0)
    scores = np.where(denom > 0.0, (b - a) / safe, 0.0)
    scores = np.where(own_count == 1, 0.0, scores)
    return float(np.clip(scores, -1.0, 1.0).mean())


def davies_bouldin(data: LabeledPoints) -> float:
    """Mean over clusters of the worst ``(s_i + s_j) / d(c_i, c_j)`` ratio.

    ``s`` is the mean member distance to the cluster centroid. Coincident
    centroids make the ratio undefined and raise
    :class:`DegenerateClustersError`.
    """
    centroids, _ = _centroids(data)
    spread = np.zeros(data.k_clusters)
    member_dist = np.linalg.norm(data.points - centroids[data.codes], axis=1)
    np.add.at(spread, data.codes, member_dist)
    spread /= np.bincount(data.codes, minlength=data.k_clusters)
    diff = centroids[:, None, :] - centroids[None, :, :]
    center_dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    off_diag = ~np.eye(data.k_clusters, dtype=bool)
    if np.any(center_dist[off_diag] == 0.0):
        raise DegenerateClustersError("two clusters share a centroid")
    ratios = (spread[:, None] + spread[None, :]) / np.where(center_dist > 0, center_dist, 1.0)
    ratios[~off_diag] = -np.inf
    return float(ratios.max(axis=1).mean())


def calinski_harabasz(data: LabeledPoints) -> float:
    """Between/within scatter ratio ``(B / (k-1)) / (W / (n-k))``.

    ``W`` is the summed squared distance of points to their cluster
    centroid, ``B`` the count-weighted squared distance of centroids to the
    global mean. Zero within-cluster scatter with separated centroids
    returns ``inf`` (degenerate but ordered); zero scatter both ways raises.
    """
    n, k = data.n, data.k_clusters
    if n <= k:
        raise ValueError(f"requires more points than clusters (n={n}, k={k})")
    centroids, counts = _centroids(data)
    global_mean = data.points.mean(axis=0)
    within = float(np.sum((data.points - centroids[data.codes]) ** 2))
    between = float(np.sum(counts * np.sum((centroids - global_mean) ** 2, axis=1)))
    if within == 0.0:
        if between == 0.0:
            raise DegenerateClustersError("all points coincide; scatter ratio is 0/0")
        return math.inf
    return (between / (k - 1)) / (within / (n - k))


@dataclass(frozen=True)
class ClusterEvalReport:
    """The three validity indices for one transform method."""

    method: TransformMethod
    silhouette: float
    davies_bouldin: float
    calinski_harabasz: float
    n: int
    k: int
    degenerate_chi: bool = False

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "silhouette": self.silhouette,
            "davies_bouldin": self.davies_bouldin,
            "calinski_harabasz": self.calinski_harabasz,
            "n": self.n,
            "k": self.k,
            "degenerate_chi": self.degenerate_chi,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def evaluate_clustering(
    points: np.ndarray, labels: Sequence[str], method: TransformMethod
) -> ClusterEvalReport:
    """Compute all three indices over topic-labeled vectors."""
    data = LabeledPoints(points=np.asarray(points), labels=tuple(labels))
    chi = calinski_harabasz(data)
    return ClusterEvalReport(
        method=method,
        silhouette=silhouette(data),
        davies_bouldin=davies_bouldin(data),
        calinski_harabasz=chi,
        n=data.n,
        k=data.k_clusters,
        degenerate_chi=math.isinf(chi),
    )


def recall_at_k(results: SearchResult, relevant: set[str], k: int) -> float:
    """Fraction of the relevant ids found within the first ``k`` hits."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not relevant:
        raise ValueError("the relevant set must be non-empty")
    found = {hit.chunk_id for hit in results.hits[:k]} & relevant
    return len(found) / len(relevant)


def mean_reciprocal_rank(
    per_query_results: Iterable[tuple[SearchResult, set[str]]],
) -> float:
    """Mean of 1/rank of the first relevant hit; 0 when none is returned."""
    ranks: list[float] = []
    for result, relevant in per_query_results:
        value = 0.0
        for pos, hit in enumerate(result.hits, start=1):
            if hit.chunk_id in relevant:
                value = 1.0 / pos
                break
        ranks.append(value)
    if not ranks:
        raise ValueError("at least one query result is required")
    return sum(ranks) / len(ranks)
