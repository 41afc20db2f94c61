"""Cluster-count vs. feature-count curve and automatic cluster selection.

Sweeping the requested cluster count over a grid and summing the per-cluster
component counts traces a characteristic curve: rapid growth, a near-flat
plateau, then a unit-slope tail where every extra cluster contributes exactly
one feature. The recommended cluster count sits at the minimum of the
smoothed first derivative, i.e. the start of the plateau.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cluster import _cut_groups, feature_distances, ward_linkage
from .data import standardize_apply, standardize_fit, validate_matrix
from .horn import HornParams, horn_components


@dataclass(frozen=True, eq=False)
class CfCurve:
    """Sampled (cluster count, reduced feature count) pairs.

    ``derivative`` holds the finite-difference slope at every grid point
    (central in the interior, one-sided at the ends); ``selected`` is the
    recommended cluster count.
    """

    n_clusters: np.ndarray
    n_features: np.ndarray
    derivative: np.ndarray
    selected: int

    @property
    def points(self):
        return [
            (int(k), int(f)) for k, f in zip(self.n_clusters, self.n_features)
        ]

    @classmethod
    def from_points(cls, n_clusters, n_features, smoothing_window: int = 3):
        ks = np.asarray(n_clusters, dtype=np.int64)
        fs = np.asarray(n_features, dtype=np.int64)
        if ks.size != fs.size or ks.size < 1:
            raise ValueError("need matching, non-empty grids")
        if (np.diff(ks) <= 0).any():
            raise ValueError("cluster grid must be strictly increasing")
        deriv = _derivative(ks, fs)
        curve = cls(
            n_clusters=ks, n_features=fs, derivative=deriv, selected=int(ks[0])
        )
        if ks.size >= 3:
            selected = select_clusters(curve, smoothing_window)
            curve = cls(
                n_clusters=ks, n_features=fs, derivative=deriv, selected=selected
            )
        return curve


def _derivative(ks, fs):
    ks = ks.astype(np.float64)
    fs = fs.astype(np.float64)
    if ks.size == 1:
        return np.zeros(1)
    deriv = np.empty(ks.size)
    deriv[0] = (fs[1] - fs[0]) / (ks[1] - ks[0])
    deriv[-1] = (fs[-1] - fs[-2]) / (ks[-1] - ks[-2])
    if ks.size > 2:
        deriv[1:-1] = (fs[2:] - fs[:-2]) / (ks[2:] - ks[:-2])
    return deriv


def _smooth(values, window: int):
    if window <= 1:
        return values.copy()
    # Moving average; near the boundaries the window keeps its full width
    # and is anchored inside the array instead of shrinking.
    width = min(window, values.size)
    half = window // 2
    out = np.empty_like(values)
    for i in range(values.size):
        lo = min(max(i - half, 0), values.size - width)
        out[i] = values[lo : lo + width].mean()
    return out


def select_clusters(curve: CfCurve, smoothing_window: int = 3) -> int:
    """Grid value minimizing the smoothed derivative (ties: smallest count).

    This locates the smallest cluster count that reaches the plateau of the
    curve. Requires at least three grid points.
    """
    if curve.n_clusters.size < 3:
        raise ValueError("need at least 3 grid points to select")
    smoothed = _smooth(curve.derivative, smoothing_window)
    return int(curve.n_clusters[int(np.argmin(smoothed))])


def default_grid(n_features: int, n_points: int = 40):
    """Geometric grid from 2 to ``n_features`` (deduplicated, endpoint kept)."""
    if n_features < 2:
        return np.array([1], dtype=np.int64)
    grid = np.unique(
        np.rint(np.geomspace(2, n_features, n_points)).astype(np.int64)
    )
    grid[-1] = n_features
    return np.unique(grid)


def cf_curve(
    X,
    grid=None,
    horn_params: HornParams | None = None,
    smoothing_window: int = 3,
    n_threads: int | None = None,
) -> CfCurve:
    """Trace the cluster-feature curve over a grid of cluster counts.

    One Ward linkage is computed and cut at every grid value; the feature
    count at each cut is the sum of per-cluster component counts. Cuts are
    nested, so component counts are cached per dendrogram node and each
    distinct cluster is analyzed once.
    """
    X = validate_matrix(X)
    if horn_params is None:
        horn_params = HornParams()
    scaler = standardize_fit(X)
    Xs = standardize_apply(scaler, X)
    m = scaler.n_kept
    if grid is None:
        grid = default_grid(m)
    grid = np.asarray(grid, dtype=np.int64)
    if grid.size < 1:
        raise ValueError("grid is empty")
    if (np.diff(grid) <= 0).any():
        raise ValueError("grid must be strictly increasing")
    if grid[0] < 1 or grid[-1] > m:
        raise ValueError(f"grid values must lie in [1, {m}]")
    if m == 1:
        return CfCurve.from_points(grid, np.ones_like(grid), smoothing_window)
    linkage = ward_linkage(feature_distances(Xs), m)

    workers = n_threads or os.cpu_count() or 1
    cache: dict[int, int] = {}

    def count_for(node_and_cols):
        _, cols = node_and_cols
        return horn_components(Xs[:, cols], horn_params)

    counts = np.empty(grid.size, dtype=np.int64)
    for gi, k in enumerate(grid):
        node_ids, groups = _cut_groups(linkage, int(k))
        missing = [
            (node, cols)
            for node, cols in zip(node_ids, groups)
            if node not in cache
        ]
        if missing:
            if workers > 1 and len(missing) > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    results = list(pool.map(count_for, missing))
            else:
                results = [count_for(item) for item in missing]
            for (node, _), h in zip(missing, results):
                cache[node] = h
        counts[gi] = sum(cache[node] for node in node_ids)
    return CfCurve.from_points(grid, counts, smoothing_window)
