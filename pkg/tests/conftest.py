"""Shared fixtures and synthetic data generators for the test suite."""

import os
from pathlib import Path

import numpy as np
import pytest


def block_factor_data(
    n_samples=500, n_blocks=8, block_size=10, snr=5.0, seed=0
):
    """Latent-factor data: each block of columns is one shared Gaussian
    factor plus independent noise at the given signal-to-noise ratio.

    Returns ``(X, block_of_column)``.
    """
    rng = np.random.default_rng(seed)
    factors = rng.standard_normal((n_samples, n_blocks))
    noise = rng.standard_normal((n_samples, n_blocks * block_size))
    X = np.repeat(factors, block_size, axis=1) + noise / np.sqrt(snr)
    blocks = np.repeat(np.arange(n_blocks), block_size)
    return X, blocks


def rank1_snr_block(n_samples=200, n_cols=5, snr=5.0, seed=0):
    """Single shared factor plus noise, standardized columns."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n_samples)
    x = z[:, None] + rng.standard_normal((n_samples, n_cols)) / np.sqrt(snr)
    x = x - x.mean(axis=0)
    return x / x.std(axis=0)


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Adjusted Rand index between two labelings of the same items."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    assert a.size == b.size
    classes_a, ai = np.unique(a, return_inverse=True)
    classes_b, bi = np.unique(b, return_inverse=True)
    table = np.zeros((classes_a.size, classes_b.size), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_cells = comb2(table).sum()
    sum_rows = comb2(table.sum(axis=1)).sum()
    sum_cols = comb2(table.sum(axis=0)).sum()
    total = comb2(a.size)
    expected = sum_rows * sum_cols / total
    maximum = 0.5 * (sum_rows + sum_cols)
    if maximum == expected:
        return 1.0
    return float((sum_cells - expected) / (maximum - expected))


def partition_sets(labels):
    labels = np.asarray(labels)
    return frozenset(
        frozenset(np.flatnonzero(labels == v).tolist()) for v in np.unique(labels)
    )


def blob_image_data(n_samples, seed=0, n_blobs=40, side=28, class_sep=2.2):
    """Ten-class image-like data built from localized pixel blobs.

    Each sample is a weighted sum of Gaussian bumps on a ``side x side``
    grid plus pixel noise; classes differ in their mean blob coefficients.
    A stand-in with the same shape and locality structure as handwritten
    digit images, for exercising the classification protocol.
    """
    rng = np.random.default_rng(seed)
    n_pixels = side * side
    yy, xx = np.mgrid[0:side, 0:side]
    basis = np.empty((n_blobs, n_pixels))
    for b in range(n_blobs):
        cy, cx = rng.uniform(3, side - 3, size=2)
        width = rng.uniform(1.2, 2.2)
        bump = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * width**2))
        basis[b] = (bump / np.linalg.norm(bump)).ravel()
    class_means = rng.standard_normal((10, n_blobs)) * class_sep
    y = rng.integers(0, 10, size=n_samples)
    coeffs = class_means[y] + rng.standard_normal((n_samples, n_blobs))
    X = coeffs @ basis + 0.35 * rng.standard_normal((n_samples, n_pixels))
    return X, y


def find_mnist_dir():
    """Directory holding the four standard IDX files, or None.

    Checked: $SPARCA_MNIST_DIR, then tests/data/mnist. Files may be gzipped
    (``.gz`` suffix) or raw.
    """
    candidates = []
    env = os.environ.get("SPARCA_MNIST_DIR")
    if env:
        candidates.append(Path(env))
    candidates.append(Path(__file__).parent / "data" / "mnist")
    names = [
        "train-images-idx3-ubyte",
        "train-labels-idx1-ubyte",
    ]
    for root in candidates:
        if not root.is_dir():
            continue
        if all(
            (root / n).exists() or (root / f"{n}.gz").exists() for n in names
        ):
            return root
    return None


def mnist_path(root, name):
    p = root / name
    return p if p.exists() else root / f"{name}.gz"


@pytest.fixture(scope="session")
def mnist_dir():
    root = find_mnist_dir()
    if root is None:
        pytest.skip(
            "MNIST IDX files not available (set SPARCA_MNIST_DIR or place "
            "the files under tests/data/mnist; this sandbox has no network "
            "access to download them)"
        )
    return root
