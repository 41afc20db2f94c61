"""Tabular data handling: validation, standardization, CSV and IDX ingestion."""

from __future__ import annotations

import csv
import gzip
import struct
from dataclasses import dataclass

import numpy as np

# Features whose standard deviation falls below this are dropped: they carry
# no information and would divide by ~0 during standardization.
VARIANCE_EPS = 1e-12

_IDX_IMAGES_MAGIC = 2051
_IDX_LABELS_MAGIC = 2049


@dataclass(frozen=True, eq=False)
class Scaler:
    """Per-feature standardization statistics plus dropped-feature bookkeeping.

    ``means`` and ``stds`` cover every original column; ``kept_features``
    lists the original column indices (strictly increasing) whose standard
    deviation exceeds :data:`VARIANCE_EPS`.
    """

    means: np.ndarray
    stds: np.ndarray
    kept_features: np.ndarray

    @property
    def n_features(self) -> int:
        """Original feature count the scaler was fitted on."""
        return int(self.means.size)

    @property
    def n_kept(self) -> int:
        return int(self.kept_features.size)


def validate_matrix(X, name="X"):
    """Coerce to a 2-D float64 array and reject empty or non-finite input."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and one column")
    if not np.isfinite(X).all():
        raise ValueError(f"{name} contains NaN or infinite values")
    return X


def standardize_fit(X) -> Scaler:
    """Fit per-column means and standard deviations (population convention).

    Columns with standard deviation below :data:`VARIANCE_EPS` are excluded
    from ``kept_features``. Raises if every column is constant.
    """
    X = validate_matrix(X)
    means = X.mean(axis=0)
    stds = X.std(axis=0)  # denominator n, matching the population convention
    kept = np.flatnonzero(stds >= VARIANCE_EPS)
    if kept.size == 0:
        raise ValueError("no usable features: every column is constant")
    return Scaler(means=means, stds=stds, kept_features=kept)


def standardize_apply(scaler: Scaler, X):
    """Center and scale the kept columns of ``X`` with fitted statistics.

    Returns an array with ``scaler.n_kept`` columns in original column order.
    """
    X = validate_matrix(X)
    if X.shape[1] != scaler.n_features:
        raise ValueError(
            f"expected {scaler.n_features} columns, got {X.shape[1]}"
        )
    kept = scaler.kept_features
    return (X[:, kept] - scaler.means[kept]) / scaler.stds[kept]


def load_csv(path, has_header=False, label_col=None):
    """Load a numeric CSV as a samples-by-features matrix.

    Lines starting with ``#`` are skipped, as is a single header row when
    ``has_header`` is set. With ``label_col`` the given column is split off,
    rounded to integer class ids, and returned alongside the matrix.
    """
    rows = []
    width = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header_pending = has_header
        for lineno, row in enumerate(reader, start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if header_pending:
                header_pending = False
                continue
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                raise ValueError(
                    f"{path}: non-numeric value on line {lineno}"
                ) from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise ValueError(
                    f"{path}: ragged row on line {lineno} "
                    f"({len(values)} cells, expected {width})"
                )
            rows.append(values)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    X = np.asarray(rows, dtype=np.float64)
    if label_col is None:
        return validate_matrix(X, name=str(path))
    if not -X.shape[1] <= label_col < X.shape[1]:
        raise ValueError(f"label column {label_col} out of range")
    raw = X[:, label_col]
    labels = np.rint(raw).astype(np.int64)
    if np.abs(raw - labels).max() > 1e-9 or labels.min() < 0:
        raise ValueError("label column must hold non-negative integers")
    X = np.delete(X, label_col % X.shape[1], axis=1)
    return validate_matrix(X, name=str(path)), labels


def write_csv(X, path, comments=(), header=None):
    """Write a matrix as CSV with shortest-exact float formatting.

    ``comments`` become leading ``#`` lines; ``header`` an optional column
    name row. Values round-trip through :func:`load_csv` exactly.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in X:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _open_maybe_gzip(path):
    fh = open(path, "rb")
    magic = fh.read(2)
    fh.seek(0)
    if magic == b"\x1f\x8b":
        return gzip.open(fh)
    return fh


def _read_exact(fh, count, path, what):
    buf = fh.read(count)
    if len(buf) != count:
        raise ValueError(f"{path}: truncated file while reading {what}")
    return buf


def load_idx(images_path, labels_path):
    """Load an IDX image/label file pair (the MNIST binary layout).

    Images are flattened row-major to ``rows*cols`` features with raw byte
    values in [0, 255]; gzip-compressed files are handled transparently.
    Returns ``(matrix, labels)``.
    """
    with _open_maybe_gzip(images_path) as fh:
        magic, count, n_rows, n_cols = struct.unpack(
            ">iiii", _read_exact(fh, 16, images_path, "image header")
        )
        if magic != _IDX_IMAGES_MAGIC:
            raise ValueError(
                f"{images_path}: bad magic {magic:#010x}, expected images file"
            )
        n_pixels = n_rows * n_cols
        raw = _read_exact(fh, count * n_pixels, images_path, "image data")
        images = np.frombuffer(raw, dtype=np.uint8).reshape(count, n_pixels)
    with _open_maybe_gzip(labels_path) as fh:
        magic, label_count = struct.unpack(
            ">ii", _read_exact(fh, 8, labels_path, "label header")
        )
        if magic != _IDX_LABELS_MAGIC:
            raise ValueError(
                f"{labels_path}: bad magic {magic:#010x}, expected labels file"
            )
        raw = _read_exact(fh, label_count, labels_path, "label data")
        labels = np.frombuffer(raw, dtype=np.uint8).astype(np.int64)
    if label_count != count:
        raise ValueError(
            f"label count {label_count} does not match image count {count}"
        )
    return images.astype(np.float64), labels
