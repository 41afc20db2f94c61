"""Evaluation harness: synthetic data, sparse logistic regression, noise
robustness sweeps, and runtime profiling.

The classifier is a one-vs-rest logistic regression with an L1 penalty,
minimized by proximal gradient descent (soft-thresholding) with backtracking
line search; all classes share the data matrix, so the per-class problems are
advanced together with batched matrix products.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .compress import pca_fit
from .data import Scaler, standardize_apply, standardize_fit, validate_matrix
from .horn import HornParams, horn_components
from .pipeline import ReducedMatrix
from . import pipeline

DEFAULT_LAMBDA_GRID = np.logspace(-3, 1, 9)


# ---------------------------------------------------------------------------
# synthetic data


@dataclass(frozen=True)
class SynthSpec:
    """Shape, target effective rank, and seed for a synthetic matrix."""

    n_samples: int
    n_features: int
    effective_rank: int
    seed: int = 0


def participation_ratio(singular_values) -> float:
    """Effective rank of a spectrum: (sum s^2)^2 / sum s^4."""
    s2 = np.asarray(singular_values, dtype=np.float64) ** 2
    total = s2.sum()
    if total <= 0:
        raise ValueError("spectrum is identically zero")
    return float(total**2 / (s2**2).sum())


def _gaussian_profile(n_values: int, target_rank: int):
    """Gaussian-decay singular value profile with the requested effective rank.

    The width of the half-bell ``s_i = exp(-i^2 / (2 w^2))`` is solved by
    bisection; the participation ratio is monotone in ``w`` and spans
    (1, n_values], so any feasible target is reachable.
    """
    if target_rank == n_values:
        return np.ones(n_values)
    idx = np.arange(n_values, dtype=np.float64)

    def pr(width):
        return participation_ratio(np.exp(-0.5 * (idx / width) ** 2))

    lo, hi = 1e-3, float(n_values)
    while pr(hi) < target_rank:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if pr(mid) < target_rank:
            lo = mid
        else:
            hi = mid
    return np.exp(-0.5 * (idx / hi) ** 2)


def gen_synthetic(spec: SynthSpec):
    """Random matrix with a Gaussian-decay spectrum at a target effective rank.

    ``X = U diag(s) V^T`` with ``U`` and ``V`` drawn as QR factors of
    Gaussian matrices; deterministic per seed. The realized participation
    ratio matches ``spec.effective_rank`` to well within 5%.
    """
    n, m = spec.n_samples, spec.n_features
    limit = min(n, m)
    if not 1 <= spec.effective_rank <= limit:
        raise ValueError(
            f"effective_rank {spec.effective_rank} infeasible for {n}x{m}"
        )
    rng = np.random.default_rng(spec.seed)
    svals = _gaussian_profile(limit, spec.effective_rank)
    u, _ = np.linalg.qr(rng.standard_normal((n, limit)))
    v, _ = np.linalg.qr(rng.standard_normal((m, limit)))
    return (u * svals) @ v.T


# ---------------------------------------------------------------------------
# L1-regularized one-vs-rest logistic regression


@dataclass(frozen=True, eq=False)
class L1LogRegModel:
    """One-vs-rest weights (n_classes x n_features), intercepts, L1 strength."""

    weights: np.ndarray
    intercepts: np.ndarray
    lam: float

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]


def _soft_threshold(v, amount):
    return np.sign(v) * np.maximum(np.abs(v) - amount, 0.0)


def _logistic_losses(Z, Y):
    """Mean per-class logistic loss columns: mean(softplus(z) - y*z)."""
    return (np.logaddexp(0.0, Z) - Y * Z).mean(axis=0)


def l1_logreg_fit(
    X,
    y,
    lam: float,
    max_iter: int = 5000,
    rel_tol: float = 1e-7,
    init: L1LogRegModel | None = None,
) -> L1LogRegModel:
    """Fit one-vs-rest logistic regression with an L1 weight penalty.

    Each class minimizes ``mean logistic loss + lam * ||w||_1`` (intercept
    unpenalized) by proximal gradient descent with per-class backtracking
    line search; iteration stops when the relative objective decrease falls
    below ``rel_tol`` or after ``max_iter`` rounds. ``init`` warm-starts the
    weights, e.g. from a neighboring point on a regularization path.
    """
    X = validate_matrix(X)
    y = np.asarray(y, dtype=np.int64).ravel()
    n, p = X.shape
    if y.size != n:
        raise ValueError("label count does not match sample count")
    if lam < 0:
        raise ValueError("lam must be >= 0")
    n_classes = int(y.max()) + 1
    counts = np.bincount(y, minlength=n_classes)
    if n_classes < 2 or (counts == 0).any():
        raise ValueError("need >= 2 classes, each with >= 1 sample")

    Y = np.zeros((n, n_classes))
    Y[np.arange(n), y] = 1.0
    if init is not None and init.weights.shape == (n_classes, p):
        W = init.weights.T.copy()
        b = init.intercepts.copy()
    else:
        W = np.zeros((p, n_classes))
        b = np.zeros(n_classes)

    step = np.ones(n_classes)
    active = np.ones(n_classes, dtype=bool)
    Z = X @ W + b
    losses = _logistic_losses(Z, Y)
    objective = losses + lam * np.abs(W).sum(axis=0)

    for _ in range(max_iter):
        if not active.any():
            break
        P = expit(Z)
        G = X.T @ (P - Y) / n
        gb = (P - Y).mean(axis=0)

        pending = active.copy()
        W_new, b_new, loss_new = W.copy(), b.copy(), losses.copy()
        while pending.any():
            idx = np.flatnonzero(pending)
            Wc = _soft_threshold(
                W[:, idx] - step[idx] * G[:, idx], step[idx] * lam
            )
            bc = b[idx] - step[idx] * gb[idx]
            Zc = X @ Wc + bc
            lc = _logistic_losses(Zc, Y[:, idx])
            dW = Wc - W[:, idx]
            db = bc - b[idx]
            quad = (dW * dW).sum(axis=0) + db * db
            linear = (G[:, idx] * dW).sum(axis=0) + gb[idx] * db
            ok = lc <= losses[idx] + linear + quad / (2.0 * step[idx]) + 1e-15
            accepted = idx[ok]
            W_new[:, accepted] = Wc[:, ok]
            b_new[accepted] = bc[ok]
            loss_new[accepted] = lc[ok]
            pending[accepted] = False
            rejected = idx[~ok]
            step[rejected] *= 0.5
            if step.min() < 1e-18:
                raise RuntimeError("line search failed to make progress")

        W, b, losses = W_new, b_new, loss_new
        Z = X @ W + b
        new_objective = losses + lam * np.abs(W).sum(axis=0)
        decrease = objective - new_objective
        rel = decrease / np.maximum(np.abs(objective), 1e-12)
        active &= rel >= rel_tol
        objective = new_objective
        # Let accepted steps grow back so early backtracking is not sticky.
        step[active] *= 1.25

    return L1LogRegModel(weights=W.T.copy(), intercepts=b.copy(), lam=float(lam))


def l1_logreg_predict(model: L1LogRegModel, X):
    """Predicted labels and per-class linear scores.

    Ties resolve to the smallest class id.
    """
    X = validate_matrix(X)
    scores = X @ model.weights.T + model.intercepts
    return np.argmax(scores, axis=1).astype(np.int64), scores


def smooth_gradient(model: L1LogRegModel, X, y):
    """Gradient of the smooth (logistic) part at the model's parameters.

    Returns ``(weight_grad, intercept_grad)`` with weight_grad shaped like
    ``model.weights``; used for optimality certificates.
    """
    X = validate_matrix(X)
    y = np.asarray(y, dtype=np.int64).ravel()
    n = X.shape[0]
    Y = np.zeros((n, model.n_classes))
    Y[np.arange(n), y] = 1.0
    P = expit(X @ model.weights.T + model.intercepts)
    return (X.T @ (P - Y) / n).T, (P - Y).mean(axis=0)


# ---------------------------------------------------------------------------
# evaluation protocol helpers


def stratified_split(y, sizes, seed: int = 0):
    """Disjoint stratified index sets with the requested total sizes.

    Each class contributes in proportion to its frequency (largest-remainder
    rounding); samples are drawn without replacement in a seeded shuffle.
    Returns one index array per requested size.
    """
    y = np.asarray(y, dtype=np.int64).ravel()
    sizes = [int(s) for s in sizes]
    if sum(sizes) > y.size:
        raise ValueError("requested split exceeds available samples")
    rng = np.random.default_rng(seed)
    by_class = {}
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        by_class[cls] = list(idx)
    classes = sorted(by_class)
    freqs = np.array([len(by_class[c]) for c in classes], dtype=np.float64)
    freqs /= freqs.sum()
    splits = []
    for size in sizes:
        avail = np.array([len(by_class[c]) for c in classes])
        quota = freqs * size
        take = np.minimum(np.floor(quota).astype(int), avail)
        # top up by largest remainder among classes with spare samples
        order = np.argsort(-(quota - take), kind="stable")
        short = size - take.sum()
        cursor = 0
        while short > 0:
            pos = order[cursor % order.size]
            if take[pos] < avail[pos]:
                take[pos] += 1
                short -= 1
            cursor += 1
        chosen = []
        for cls, count in zip(classes, take):
            chosen.extend(by_class[cls][:count])
            by_class[cls] = by_class[cls][count:]
        splits.append(np.sort(np.asarray(chosen, dtype=np.int64)))
    return tuple(splits)


def select_lambda(X, y, lambdas=None, n_folds: int = 5, seed: int = 0):
    """Pick the L1 strength by stratified k-fold cross-validated accuracy.

    The grid is swept from strongest to weakest regularization with warm
    starts. Ties prefer the stronger penalty. Returns ``(best_lambda,
    mean_accuracies)`` with accuracies aligned to the given grid.
    """
    X = validate_matrix(X)
    y = np.asarray(y, dtype=np.int64).ravel()
    if lambdas is None:
        lambdas = DEFAULT_LAMBDA_GRID
    lambdas = np.asarray(lambdas, dtype=np.float64)
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(n_folds)]
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        for i, sample in enumerate(idx):
            folds[i % n_folds].append(sample)
    folds = [np.sort(np.asarray(f, dtype=np.int64)) for f in folds]

    order = np.argsort(-lambdas)  # strong-to-weak for warm starting
    accuracy = np.zeros((n_folds, lambdas.size))
    for fi, fold in enumerate(folds):
        mask = np.ones(y.size, dtype=bool)
        mask[fold] = False
        model = None
        for li in order:
            model = l1_logreg_fit(
                X[mask], y[mask], float(lambdas[li]), init=model
            )
            pred, _ = l1_logreg_predict(model, X[fold])
            accuracy[fi, li] = float(np.mean(pred == y[fold]))
    means = accuracy.mean(axis=0)
    best = np.flatnonzero(means == means.max())
    strongest = best[np.argmax(lambdas[best])]
    return float(lambdas[strongest]), means


def downstream_eval(
    dr_model,
    X_train,
    y_train,
    X_test,
    y_test,
    lambdas=None,
    n_folds: int = 5,
    seed: int = 0,
):
    """Train/validate a classifier on reduced features; score on the test set.

    Returns ``(test_accuracy, classifier, best_lambda)``.
    """
    R_train = reduced_values(dr_model, X_train)
    R_test = reduced_values(dr_model, X_test)
    best_lambda, _ = select_lambda(
        R_train, y_train, lambdas=lambdas, n_folds=n_folds, seed=seed
    )
    clf = l1_logreg_fit(R_train, y_train, best_lambda)
    pred, _ = l1_logreg_predict(clf, R_test)
    return float(np.mean(pred == y_test)), clf, best_lambda


# ---------------------------------------------------------------------------
# baseline PCA behind the same reduce interface


@dataclass(frozen=True, eq=False)
class PcaBaseline:
    """Full-matrix PCA comparator with the component count chosen the same
    permutation-based way as the per-cluster counts."""

    scaler: Scaler
    loadings: np.ndarray

    @classmethod
    def fit(cls, X, horn_params: HornParams | None = None) -> "PcaBaseline":
        X = validate_matrix(X)
        scaler = standardize_fit(X)
        Xs = standardize_apply(scaler, X)
        h = horn_components(Xs, horn_params or HornParams())
        pca = pca_fit(Xs, h)
        return cls(scaler=scaler, loadings=pca.loadings)

    @property
    def n_reduced(self) -> int:
        return self.loadings.shape[1]

    def transform(self, X):
        return standardize_apply(self.scaler, X) @ self.loadings


def reduced_values(dr_model, X):
    """Reduced feature matrix from any model exposing ``transform``."""
    out = dr_model.transform(X)
    if isinstance(out, ReducedMatrix):
        return out.values
    return np.asarray(out)


# ---------------------------------------------------------------------------
# noise robustness


def noise_robustness(
    dr_models, clf_models, X_test, y_test, sigmas, seed: int = 0
):
    """Accuracy of each (reducer, classifier) pair under added Gaussian noise.

    Noise is i.i.d. per feature with standard deviation ``sigma`` in
    standardized units; the same realization is shared by every model at a
    given sigma so comparisons are paired. Returns an array of shape
    (len(sigmas), len(dr_models)).
    """
    if len(dr_models) != len(clf_models):
        raise ValueError("model lists must be aligned")
    X_test = validate_matrix(X_test)
    y_test = np.asarray(y_test, dtype=np.int64).ravel()
    scaler = dr_models[0].scaler
    scale = scaler.stds  # sigma is expressed in standardized units
    rng = np.random.default_rng(seed)
    table = np.zeros((len(sigmas), len(dr_models)))
    for si, sigma in enumerate(sigmas):
        noise = rng.standard_normal(X_test.shape) if sigma else 0.0
        X_noisy = X_test + float(sigma) * noise * scale
        for mi, (dr, clf) in enumerate(zip(dr_models, clf_models)):
            pred, _ = l1_logreg_predict(clf, reduced_values(dr, X_noisy))
            table[si, mi] = float(np.mean(pred == y_test))
    return table


# ---------------------------------------------------------------------------
# runtime profiling


@dataclass(frozen=True, eq=False)
class RuntimeReport:
    """Median fit wall times per size and fitted log-log slopes."""

    sample_points: tuple
    feature_points: tuple
    sample_slope: float
    feature_slope: float


PROFILE_FEATURES_FIXED = 100
PROFILE_SAMPLES_FIXED = 50
RANK_FRACTION = 5  # effective rank = n_features / 5
CLUSTER_RANK_FACTOR = 2  # clusters = 2 * effective rank


def _validate_grid(grid, name):
    grid = [int(g) for g in grid]
    if len(grid) < 4:
        raise ValueError(f"{name} needs at least 4 sizes")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"{name} must be strictly increasing")
    if grid[-1] < 8 * grid[0]:
        raise ValueError(f"{name} must span at least a factor of 8")
    return grid


def _timed_fit(n_samples, n_features, repeats, seed):
    rank = min(max(1, n_features // RANK_FRACTION), min(n_samples, n_features))
    n_clusters = min(CLUSTER_RANK_FACTOR * rank, n_features)
    X = gen_synthetic(SynthSpec(n_samples, n_features, rank, seed))
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        pipeline.fit(X, n_clusters=n_clusters, n_threads=1)
        times.append(time.perf_counter() - start)
    return float(np.median(times))


def _loglog_slope(points):
    sizes = np.log([s for s, _ in points])
    secs = np.log([t for _, t in points])
    return float(np.polyfit(sizes, secs, 1)[0])


def profile_runtime(sample_grid, feature_grid, repeats: int = 3, seed: int = 0):
    """Measure fit wall time along a sample axis and a feature axis.

    The sample axis holds features at 100; the feature axis holds samples at
    50. Synthetic inputs use effective rank = features/5 and cluster count =
    2x the rank. Medians over ``repeats`` runs per size; slopes are least
    squares fits on log-log points.
    """
    sample_grid = _validate_grid(sample_grid, "sample_grid")
    feature_grid = _validate_grid(feature_grid, "feature_grid")
    sample_points = tuple(
        (n, _timed_fit(n, PROFILE_FEATURES_FIXED, repeats, seed + i))
        for i, n in enumerate(sample_grid)
    )
    feature_points = tuple(
        (m, _timed_fit(PROFILE_SAMPLES_FIXED, m, repeats, seed + 100 + i))
        for i, m in enumerate(feature_grid)
    )
    return RuntimeReport(
        sample_points=sample_points,
        feature_points=feature_points,
        sample_slope=_loglog_slope(sample_points),
        feature_slope=_loglog_slope(feature_points),
    )
