"""End-to-end fitting, transformation, and model serialization.

The fitted artifact couples the standardizer, the Ward cluster assignment,
and one sparse component per retained principal component of each cluster;
stacking the component weight vectors column-wise yields the sparse
projection matrix applied at transform time.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ._version import __version__
from .cluster import ClusterAssignment, cut_to_k, feature_distances, ward_linkage
from .compress import pca_fit
from .data import Scaler, standardize_apply, standardize_fit, validate_matrix
from .horn import HornParams, horn_components
from .omp import SparseComponent, omp_fit

FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class SparcaModel:
    """Fitted sparse dimensionality-reduction model.

    ``components`` are ordered by (cluster, rank); ``projection`` is the
    (n_kept_features, n_reduced) CSC matrix whose column j scatters component
    j's weights onto its feature rows. Column supports from different
    clusters are disjoint by construction.
    """

    scaler: Scaler
    n_clusters: int
    variance_threshold: float
    horn_params: HornParams
    assignment: ClusterAssignment
    components: tuple
    projection: sparse.csc_array = field(repr=False, compare=False)

    @property
    def n_features(self) -> int:
        """Original (pre-standardization) feature count."""
        return self.scaler.n_features

    @property
    def n_reduced(self) -> int:
        return len(self.components)

    def transform(self, X) -> "ReducedMatrix":
        return transform(self, X)


@dataclass(frozen=True, eq=False)
class ReducedMatrix:
    """Reduced data plus per-column provenance.

    ``column_provenance[j]`` is ``(cluster, rank, feature_indices)`` with
    original column indices of component j's support.
    """

    values: np.ndarray
    column_provenance: tuple


def _assemble_projection(components, kept_features, n_reduced):
    position = {int(f): i for i, f in enumerate(kept_features)}
    rows, cols, data = [], [], []
    for j, comp in enumerate(components):
        for feature, weight in comp.entries:
            rows.append(position[feature])
            cols.append(j)
            data.append(weight)
    return sparse.csc_array(
        (data, (rows, cols)), shape=(len(kept_features), n_reduced)
    )


def _fit_cluster(x_block, orig_indices, cluster_id, variance_threshold, horn_params):
    h = horn_components(x_block, horn_params)
    pca = pca_fit(x_block, h)
    return [
        omp_fit(
            x_block,
            pca.scores[:, r],
            variance_threshold,
            feature_indices=orig_indices,
            cluster=cluster_id,
            rank=r,
        )
        for r in range(h)
    ]


def fit(
    X,
    n_clusters: int,
    variance_threshold: float = 0.95,
    horn_params: HornParams | None = None,
    n_threads: int | None = None,
) -> SparcaModel:
    """Fit the full pipeline: standardize, cluster features, compress, sparsify.

    Parameters
    ----------
    X : array, shape (n_samples, n_features)
        Raw data; constant columns are dropped during standardization.
    n_clusters : int
        Number of Ward feature clusters; at most the kept feature count.
    variance_threshold : float
        Minimum explained-variance ratio each sparse component must recover,
        default 0.95.
    horn_params : HornParams, optional
        Component-count selection parameters (trials, percentile, seed).
    n_threads : int, optional
        Worker threads for per-cluster work; results are identical for any
        thread count. Defaults to the available core count.

    Returns
    -------
    SparcaModel
    """
    X = validate_matrix(X)
    if horn_params is None:
        horn_params = HornParams()
    if not 0.0 < variance_threshold <= 1.0:
        raise ValueError("variance_threshold must be in (0, 1]")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 samples to fit")
    scaler = standardize_fit(X)
    Xs = standardize_apply(scaler, X)
    m_kept = scaler.n_kept
    if not 1 <= n_clusters <= m_kept:
        raise ValueError(
            f"n_clusters {n_clusters} out of range [1, {m_kept}] "
            f"(kept features)"
        )
    if m_kept == 1:
        assignment = ClusterAssignment(labels=np.zeros(1, dtype=np.int64), n_clusters=1)
    else:
        linkage = ward_linkage(feature_distances(Xs), m_kept)
        assignment = cut_to_k(linkage, n_clusters)

    jobs = []
    for cid in range(n_clusters):
        cols = assignment.members(cid)
        jobs.append((Xs[:, cols], scaler.kept_features[cols], cid))

    def run(job):
        block, orig, cid = job
        return _fit_cluster(block, orig, cid, variance_threshold, horn_params)

    workers = n_threads or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_cluster = list(pool.map(run, jobs))
    else:
        per_cluster = [run(job) for job in jobs]

    components = tuple(comp for comps in per_cluster for comp in comps)
    projection = _assemble_projection(
        components, scaler.kept_features, len(components)
    )
    return SparcaModel(
        scaler=scaler,
        n_clusters=n_clusters,
        variance_threshold=variance_threshold,
        horn_params=horn_params,
        assignment=assignment,
        components=components,
        projection=projection,
    )


def transform(model: SparcaModel, X) -> ReducedMatrix:
    """Standardize ``X`` with the fitted scaler and project it.

    The sparse product costs time proportional to the projection's nonzeros.
    """
    X = validate_matrix(X)
    if X.shape[1] != model.n_features:
        raise ValueError(
            f"expected {model.n_features} columns, got {X.shape[1]}"
        )
    Xs = standardize_apply(model.scaler, X)
    values = np.asarray(Xs @ model.projection)
    provenance = tuple(
        (comp.cluster, comp.rank, tuple(int(i) for i, _ in comp.entries))
        for comp in model.components
    )
    return ReducedMatrix(values=values, column_provenance=provenance)


def save_model(model: SparcaModel, path):
    """Serialize a model to versioned JSON; floats round-trip exactly."""
    doc = {
        "format_version": FORMAT_VERSION,
        "library_version": __version__,
        "n_clusters": int(model.n_clusters),
        "variance_threshold": float(model.variance_threshold),
        "horn": {
            "n_repeats": int(model.horn_params.n_repeats),
            "percentile": float(model.horn_params.percentile),
            "seed": int(model.horn_params.seed),
        },
        "scaler": {
            "means": [float(v) for v in model.scaler.means],
            "stds": [float(v) for v in model.scaler.stds],
            "kept_features": [int(v) for v in model.scaler.kept_features],
        },
        "assignment": [int(v) for v in model.assignment.labels],
        "components": [
            {
                "cluster": int(c.cluster),
                "rank": int(c.rank),
                "evr": float(c.achieved_evr),
                "entries": [[int(i), float(w)] for i, w in c.entries],
            }
            for c in model.components
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_model(path) -> SparcaModel:
    """Load a model written by :func:`save_model`.

    Raises ``ValueError`` on unknown format versions or malformed files;
    never returns a partial model.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not a valid model file ({exc})") from exc
    try:
        version = doc["format_version"]
        if version != FORMAT_VERSION:
            raise ValueError(
                f"{path}: unsupported format_version {version!r}, "
                f"expected {FORMAT_VERSION}"
            )
        variance_threshold = float(doc["variance_threshold"])
        scaler = Scaler(
            means=np.asarray(doc["scaler"]["means"], dtype=np.float64),
            stds=np.asarray(doc["scaler"]["stds"], dtype=np.float64),
            kept_features=np.asarray(
                doc["scaler"]["kept_features"], dtype=np.int64
            ),
        )
        horn_params = HornParams(
            n_repeats=int(doc["horn"]["n_repeats"]),
            percentile=float(doc["horn"]["percentile"]),
            seed=int(doc["horn"]["seed"]),
        )
        labels = np.asarray(doc["assignment"], dtype=np.int64)
        assignment = ClusterAssignment(
            labels=labels, n_clusters=int(doc["n_clusters"])
        )
        components = tuple(
            SparseComponent(
                entries=tuple((int(i), float(w)) for i, w in c["entries"]),
                achieved_evr=float(c["evr"]),
                cluster=int(c["cluster"]),
                rank=int(c["rank"]),
                # Stopping rule: a component falls short of the threshold
                # only when its cluster's usable atoms were exhausted.
                full_support=float(c["evr"]) < variance_threshold,
            )
            for c in doc["components"]
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ValueError(f"{path}: malformed model file ({exc!r})") from exc
    projection = _assemble_projection(
        components, scaler.kept_features, len(components)
    )
    return SparcaModel(
        scaler=scaler,
        n_clusters=int(doc["n_clusters"]),
        variance_threshold=variance_threshold,
        horn_params=horn_params,
        assignment=assignment,
        components=components,
        projection=projection,
    )
