"""Orthogonal matching pursuit for sparse approximation of score vectors.

Greedily selects the dictionary column most correlated with the residual,
re-fits all selected coefficients by least squares (maintained as a thin QR
factorization), and stops once the explained-variance ratio reaches the
requested threshold or the usable dictionary is exhausted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import validate_matrix

# Candidate atoms whose component orthogonal to the current selection falls
# below this relative norm are collinear with it and permanently rejected.
COLLINEAR_TOL = 1e-10


@dataclass(frozen=True)
class SparseComponent:
    """Sparse surrogate for one PCA score column of one cluster.

    ``entries`` holds ``(feature_index, weight)`` pairs sorted by feature
    index; indices refer to original data columns. ``full_support`` marks
    components that exhausted every usable atom before reaching the
    variance threshold.
    """

    entries: tuple
    achieved_evr: float
    cluster: int
    rank: int
    full_support: bool = False

    @property
    def source(self):
        return (self.cluster, self.rank)

    @property
    def feature_indices(self) -> np.ndarray:
        return np.array([i for i, _ in self.entries], dtype=np.int64)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.entries])

    @property
    def support_size(self) -> int:
        return len(self.entries)


def omp_fit(
    dictionary,
    target,
    variance_threshold: float,
    feature_indices=None,
    cluster: int = 0,
    rank: int = 0,
) -> SparseComponent:
    """Sparsely approximate ``target`` from the columns of ``dictionary``.

    Parameters
    ----------
    dictionary : array, shape (n_samples, n_atoms)
        Standardized cluster columns.
    target : array, shape (n_samples,)
        Score vector to approximate; must have nonzero centered norm.
    variance_threshold : float
        Stop once ``1 - ||residual||^2 / ||target - mean||^2`` reaches this
        value, in (0, 1].
    feature_indices : array, optional
        Original column index of each atom; defaults to ``0..n_atoms-1``.
    cluster, rank : int
        Provenance recorded on the returned component.

    Returns
    -------
    SparseComponent
        At least one atom is always selected; weights are the joint
        least-squares coefficients over the final support.
    """
    D = validate_matrix(dictionary, name="dictionary")
    t = np.asarray(target, dtype=np.float64).ravel()
    n, n_atoms = D.shape
    if t.size != n:
        raise ValueError("target length does not match dictionary rows")
    if not np.isfinite(t).all():
        raise ValueError("target contains NaN or infinite values")
    if not 0.0 < variance_threshold <= 1.0:
        raise ValueError("variance_threshold must be in (0, 1]")
    centered = t - t.mean()
    denom = float(centered @ centered)
    if denom <= 0.0:
        raise ValueError("target has no variance (all-zero or constant)")
    if feature_indices is None:
        feature_indices = np.arange(n_atoms)
    feature_indices = np.asarray(feature_indices, dtype=np.int64)
    if feature_indices.size != n_atoms:
        raise ValueError("feature_indices length does not match dictionary")

    atom_norms = np.linalg.norm(D, axis=0)
    usable = atom_norms > 0.0

    Q = np.empty((n_atoms, n))  # rows are the orthonormalized selected atoms
    rmat = np.zeros((n_atoms, n_atoms))
    qt_target = np.empty(n_atoms)
    selected = []
    selectable = usable.copy()
    residual = t.copy()
    evr = 0.0
    exhausted = False

    while True:
        corr = np.abs(D.T @ residual)
        corr[~selectable] = -1.0
        placed = False
        while True:
            j = int(np.argmax(corr))
            if corr[j] < 0.0:
                exhausted = True
                break
            k = len(selected)
            q = D[:, j].copy()
            if k:
                # Two rounds of classical Gram-Schmidt keep Q orthonormal.
                proj = Q[:k] @ q
                q -= Q[:k].T @ proj
                proj2 = Q[:k] @ q
                q -= Q[:k].T @ proj2
                rmat[:k, k] = proj + proj2
            norm = np.linalg.norm(q)
            if norm <= COLLINEAR_TOL * atom_norms[j]:
                # Collinear with current selection: adds nothing to the span.
                selectable[j] = False
                corr[j] = -1.0
                continue
            rmat[k, k] = norm
            Q[k] = q / norm
            coef = float(Q[k] @ residual)
            qt_target[k] = coef
            residual = residual - coef * Q[k]
            selected.append(j)
            selectable[j] = False
            placed = True
            break
        if exhausted and not placed:
            if not selected:
                raise ValueError("dictionary has no usable atoms")
            break
        evr = 1.0 - float(residual @ residual) / denom
        if evr >= variance_threshold or len(selected) == n_atoms:
            exhausted = evr < variance_threshold
            break

    k = len(selected)
    # Back-substitute R w = Q^T t for the joint least-squares coefficients.
    w = np.empty(k)
    for i in range(k - 1, -1, -1):
        w[i] = (qt_target[i] - rmat[i, i + 1 : k] @ w[i + 1 : k]) / rmat[i, i]

    order = np.argsort(feature_indices[selected])
    entries = tuple(
        (int(feature_indices[selected[i]]), float(w[i])) for i in order
    )
    return SparseComponent(
        entries=entries,
        achieved_evr=float(min(max(evr, 0.0), 1.0)),
        cluster=cluster,
        rank=rank,
        full_support=exhausted,
    )
