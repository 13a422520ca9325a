"""Hot numeric kernels: numba-jitted loops with a pure-numpy fallback.

The jitted path is the default whenever numba imports; set
``TOPICVEC_NUMBA=0`` (or ``false``/``off``) before import to force the
numpy implementations. Both variants stay importable either way, which is
what ``benchmarks/bench_kernels.py`` compares.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "NUMBA_ENABLED",
    "active_backend",
    "cluster_distance_sums",
    "cluster_distance_sums_numba",
    "cluster_distance_sums_numpy",
    "dot_scores",
    "dot_scores_numba",
    "dot_scores_numpy",
]


def _numba_requested() -> bool:
    return os.environ.get("TOPICVEC_NUMBA", "1").strip().lower() not in {"0", "false", "off"}


try:
    from numba import njit, prange

    _HAVE_NUMBA = True
except ImportError:
    _HAVE_NUMBA = False

NUMBA_ENABLED = _HAVE_NUMBA and _numba_requested()


def active_backend() -> str:
    """Name of the backend the dispatching kernels will use."""
    return "numba" if NUMBA_ENABLED else "numpy"


def dot_scores_numpy(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Row-wise dot products of `matrix` with `query`, accumulated in float64."""
    return matrix @ np.asarray(query, dtype=np.float64)


def cluster_distance_sums_numpy(
    points: np.ndarray,
    codes: np.ndarray,
    n_clusters: int,
    block_rows: int = 512,
) -> np.ndarray:
    """Summed euclidean distances from every point to each labeled group.

    Entry ``[i, c]`` is the sum over all points ``j`` with code ``c`` of
    ``||p_i - p_j||`` (the ``j == i`` term contributes zero). Points are
    centered before the squared-norm expansion so a large global offset
    does not eat the mantissa.
    """
    pts = np.asarray(points, dtype=np.float64)
    pts = pts - pts.mean(axis=0)
    codes = np.asarray(codes, dtype=np.int64)
    n = pts.shape[0]
    onehot = np.zeros((n, n_clusters))
    onehot[np.arange(n), codes] = 1.0
    sq = np.einsum("ij,ij->i", pts, pts)
    out = np.empty((n, n_clusters))
    for start in range(0, n, block_rows):
        stop = min(start + block_rows, n)
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * (pts[start:stop] @ pts.T)
        np.maximum(d2, 0.0, out=d2)
        np.sqrt(d2, out=d2)
        out[start:stop] = d2 @ onehot
    return out


if _HAVE_NUMBA:

    @njit(parallel=True, cache=True)
    def _dot_scores_jit(matrix, query):  # pragma: no cover - thin jit wrapper
        n, d = matrix.shape
        out = np.empty(n)
        for i in prange(n):
            acc = 0.0
            for j in range(d):
                acc += matrix[i, j] * query[j]
            out[i] = acc
        return out

    @njit(parallel=True, cache=True)
    def _cluster_distance_sums_jit(pts, codes, n_clusters):  # pragma: no cover
        n, d = pts.shape
        out = np.zeros((n, n_clusters))
        for i in prange(n):
            for j in range(n):
                acc = 0.0
                for c in range(d):
                    diff = pts[i, c] - pts[j, c]
                    acc += diff * diff
                out[i, codes[j]] += np.sqrt(acc)
        return out


def dot_scores_numba(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Jitted variant of :func:`dot_scores_numpy`."""
    if not _HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    return _dot_scores_jit(
        np.ascontiguousarray(matrix), np.ascontiguousarray(query, dtype=np.float64)
    )


def cluster_distance_sums_numba(
    points: np.ndarray, codes: np.ndarray, n_clusters: int
) -> np.ndarray:
    """Jitted variant of :func:`cluster_distance_sums_numpy`."""
    if not _HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    pts = np.ascontiguousarray(points, dtype=np.float64)
    return _cluster_distance_sums_jit(
        pts, np.ascontiguousarray(codes, dtype=np.int64), int(n_clusters)
    )


def dot_scores(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    if NUMBA_ENABLED:
        return dot_scores_numba(matrix, query)
    return dot_scores_numpy(matrix, query)


def cluster_distance_sums(points: np.ndarray, codes: np.ndarray, n_clusters: int) -> np.ndarray:
    if NUMBA_ENABLED:
        return cluster_distance_sums_numba(points, codes, n_clusters)
    return cluster_distance_sums_numpy(points, codes, n_clusters)
