"""Agglomerative feature clustering under Ward's minimum-variance criterion.

Features are the *columns* of a standardized data matrix. The merge tree is
built with the nearest-neighbor-chain algorithm and the Lance-Williams update
for Ward distances, then sorted by merge distance and relabeled so node ids
follow creation order (leaves ``0..m-1``, internal nodes ``m..2m-2``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import validate_matrix


@dataclass(frozen=True, eq=False)
class Linkage:
    """Merge history over ``n_leaves`` features: ``n_leaves - 1`` records.

    ``left[i]``/``right[i]`` are child node ids of internal node
    ``n_leaves + i``; records are sorted by non-decreasing ``distance``.
    """

    left: np.ndarray
    right: np.ndarray
    distance: np.ndarray
    size: np.ndarray
    n_leaves: int

    @property
    def merges(self):
        """Merge records as ``(left_id, right_id, distance, merged_size)``."""
        return [
            (int(l), int(r), float(d), int(s))
            for l, r, d, s in zip(self.left, self.right, self.distance, self.size)
        ]


@dataclass(frozen=True, eq=False)
class ClusterAssignment:
    """Cluster id per feature column, ids ``0..n_clusters-1`` ordered by the
    smallest feature index each cluster contains."""

    labels: np.ndarray
    n_clusters: int

    def members(self, cluster_id) -> np.ndarray:
        return np.flatnonzero(self.labels == cluster_id)


def feature_distances(X_std):
    """Pairwise Euclidean distances between columns, condensed row-major.

    Entry order is the standard condensed layout: (0,1), (0,2), ...,
    (m-2,m-1). Requires at least two columns.
    """
    X = validate_matrix(X_std, name="X_std")
    m = X.shape[1]
    if m < 2:
        raise ValueError("need at least 2 features to compute distances")
    gram = X.T @ X
    sq = np.diag(gram)
    d2 = sq[:, None] + sq[None, :] - 2.0 * gram
    iu, ju = np.triu_indices(m, k=1)
    return np.sqrt(np.maximum(d2[iu, ju], 0.0))


def _condensed_to_square(d, m):
    D = np.zeros((m, m))
    iu, ju = np.triu_indices(m, k=1)
    D[iu, ju] = d
    D[ju, iu] = d
    return D


def ward_linkage(d, m: int) -> Linkage:
    """Ward merge tree from condensed pairwise distances over ``m`` features.

    Uses the nearest-neighbor-chain algorithm on squared distances with the
    Lance-Williams Ward update; the raw merge list is then sorted by distance
    (stable on ties) and node ids assigned in that order.
    """
    d = np.asarray(d, dtype=np.float64).ravel()
    if m < 2:
        raise ValueError("need at least 2 features")
    if d.size != m * (m - 1) // 2:
        raise ValueError(
            f"condensed array has {d.size} entries, expected {m * (m - 1) // 2}"
        )
    if not np.isfinite(d).all() or (d < 0).any():
        raise ValueError("distances must be finite and non-negative")

    # D holds *squared* Ward distances between active clusters; inactive rows
    # and the diagonal are +inf so argmin scans stay branch-free.
    D = _condensed_to_square(d, m) ** 2
    np.fill_diagonal(D, np.inf)
    size = np.ones(m, dtype=np.int64)
    active = np.ones(m, dtype=bool)

    raw_a = np.empty(m - 1, dtype=np.int64)
    raw_b = np.empty(m - 1, dtype=np.int64)
    raw_d2 = np.empty(m - 1)
    raw_sz = np.empty(m - 1, dtype=np.int64)

    chain = np.empty(m, dtype=np.int64)
    chain_len = 0
    for step in range(m - 1):
        if chain_len == 0:
            chain[0] = int(np.argmax(active))
            chain_len = 1
        while True:
            x = chain[chain_len - 1]
            row = D[x]
            y = int(np.argmin(row))
            if chain_len > 1:
                prev = chain[chain_len - 2]
                # Prefer the previous chain element on ties so reciprocal
                # nearest neighbors are always detected (termination).
                if row[prev] <= row[y]:
                    y = int(prev)
            if chain_len > 1 and y == chain[chain_len - 2]:
                break
            chain[chain_len] = y
            chain_len += 1
        chain_len -= 2

        a, b = int(x), int(y)
        d2_ab = D[a, b]
        sa, sb = size[a], size[b]
        raw_a[step], raw_b[step] = a, b
        raw_d2[step] = d2_ab
        raw_sz[step] = sa + sb

        # Lance-Williams Ward update into slot a; slot b is retired.
        sc = size
        new_row = ((sa + sc) * D[a] + (sb + sc) * D[b] - sc * d2_ab) / (
            sa + sb + sc
        )
        np.maximum(new_row, 0.0, out=new_row)
        new_row[~active] = np.inf
        D[a, :] = new_row
        D[:, a] = new_row
        D[a, a] = np.inf
        D[b, :] = np.inf
        D[:, b] = np.inf
        active[b] = False
        size[a] = sa + sb

    # Sort by merge distance (stable, so discovery order breaks ties) and
    # assign node ids in sorted order via union-find over leaf slots.
    order = np.argsort(raw_d2, kind="stable")
    parent = np.arange(2 * m - 1, dtype=np.int64)

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    left = np.empty(m - 1, dtype=np.int64)
    right = np.empty(m - 1, dtype=np.int64)
    distance = np.empty(m - 1)
    merged_size = np.empty(m - 1, dtype=np.int64)
    for new, idx in enumerate(order):
        ra, rb = find(raw_a[idx]), find(raw_b[idx])
        left[new], right[new] = min(ra, rb), max(ra, rb)
        distance[new] = np.sqrt(raw_d2[idx])
        merged_size[new] = raw_sz[idx]
        parent[ra] = parent[rb] = m + new
    return Linkage(
        left=left, right=right, distance=distance, size=merged_size, n_leaves=m
    )


def _cut_groups(linkage: Linkage, k: int):
    """Leaf groups after undoing the ``k - 1`` largest-distance merges.

    Returns ``(node_ids, groups)`` ordered by smallest contained leaf, where
    ``node_ids[i]`` is the dendrogram node spanning exactly ``groups[i]``.
    """
    m = linkage.n_leaves
    if not 1 <= k <= m:
        raise ValueError(f"cluster count {k} out of range [1, {m}]")
    parent = np.arange(m, dtype=np.int64)
    node_of_root = np.arange(m, dtype=np.int64)
    rep = np.empty(2 * m - 1, dtype=np.int64)
    rep[:m] = np.arange(m)

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    # Merges are stored sorted by distance, so keeping the first m-k replays
    # the tree with the last k-1 (largest) merges undone.
    for i in range(m - k):
        ra = find(rep[linkage.left[i]])
        rb = find(rep[linkage.right[i]])
        parent[rb] = ra
        node_of_root[ra] = m + i
        rep[m + i] = ra

    roots = np.array([find(i) for i in range(m)])
    order = []
    seen = set()
    for leaf in range(m):
        r = roots[leaf]
        if r not in seen:
            seen.add(r)
            order.append(r)
    node_ids = [int(node_of_root[r]) for r in order]
    groups = [np.flatnonzero(roots == r) for r in order]
    return node_ids, groups


def cut_to_k(linkage: Linkage, k: int) -> ClusterAssignment:
    """Partition the leaves into exactly ``k`` clusters.

    Cluster ids are assigned by the smallest feature index each cluster
    contains, so labels are stable and interpretable.
    """
    _, groups = _cut_groups(linkage, k)
    labels = np.empty(linkage.n_leaves, dtype=np.int64)
    for cid, group in enumerate(groups):
        labels[group] = cid
    return ClusterAssignment(labels=labels, n_clusters=k)
