"""PCA projection to 2D for external plotting tools."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .fileio import atomic_write


@dataclass(frozen=True)
class PCAProjection:
    coords: np.ndarray              # (n, 2)
    components: np.ndarray          # (2, d) orthonormal rows
    mean: np.ndarray                # (d,)
    explained_variance: np.ndarray  # (2,)


def pca_2d(points: np.ndarray) -> PCAProjection:
    """Project points onto their top-2 principal components, mean-centered.

    The sign of each axis is fixed so that its largest-magnitude loading is
    positive, making the output fully deterministic.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("points must be a 2-D array")
    n, d = pts.shape
    if n < 3:
        raise ValueError(f"PCA export requires at least 3 points, got {n}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    mean = pts.mean(axis=0)
    centered = pts - mean
    tol = 1e-12 * max(1.0, float(np.abs(pts).max()))
    if not np.any(np.abs(centered) > tol):
        raise ValueError("zero-variance data: all points coincide")
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    components = np.zeros((2, d))
    variance = np.zeros(2)
    available = min(2, vt.shape[0])
    components[:available] = vt[:available]
    variance[:available] = singular[:available] ** 2 / (n - 1)
    for axis in range(available):
        pivot = int(np.argmax(np.abs(components[axis])))
        if components[axis, pivot] < 0:
            components[axis] = -components[axis]
    coords = centered @ components.T
    return PCAProjection(
        coords=coords, components=components, mean=mean, explained_variance=variance
    )


def export_2d(
    ids: Sequence[str],
    labels: Sequence[str],
    points: np.ndarray,
    out_path: str | Path,
) -> PCAProjection:
    """Write ``chunk_id, topic, x, y`` CSV rows of the top-2 PCA projection.

    Warns when the second component carries (near-)zero variance, e.g. for
    collinear points.
    """
    if len(ids) != len(labels) or len(ids) != np.asarray(points).shape[0]:
        raise ValueError("ids, labels, and points must have matching lengths")
    projection = pca_2d(points)
    top = projection.explained_variance[0]
    if projection.explained_variance[1] <= 1e-12 * max(top, 1.0):
        warnings.warn(
            "second principal component has (near-)zero variance; "
            "the y column is degenerate",
            RuntimeWarning,
            stacklevel=2,
        )
    with atomic_write(out_path) as handle:
        writer = csv.writer(handle)
        writer.writerow(["chunk_id", "topic", "x", "y"])
        for rec_id, label, (x, y) in zip(ids, labels, projection.coords):
            writer.writerow([rec_id, label, repr(float(x)), repr(float(y))])
    return projection
