"""Dataset ingestion, partitioning and synthetic classification data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, DataError


@dataclass
class Dataset:
    features: np.ndarray
    # 1-based class labels
    labels: np.ndarray

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def classes(self):
        return int(self.labels.max())


def _label(token, lineno, zero_based):
    try:
        val = float(token)
    except ValueError:
        raise DataError(f"bad label {token!r}", lineno) from None
    if val != int(val):
        raise DataError(f"label {token!r} is not an integer", lineno)
    val = int(val) + (1 if zero_based else 0)
    if val < 1:
        raise DataError(f"label {val} out of range", lineno)
    return val


def _read_lines(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return [ln.replace("−", "-") for ln in fh.read().splitlines()]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def load_dataset(path, format="dense_csv", classes=None, zero_based=False):
    """Read a labelled dataset.

    ``dense_csv`` rows hold the features followed by the integer label.
    ``sparse_svm`` rows read ``label idx:val idx:val ...`` with 1-based
    feature indices.
    """
    rows, labels = [], []
    lines = _read_lines(path)
    if format == "dense_csv":
        width = None
        for lineno, line in enumerate(lines, 1):
            if not line.strip():
                continue
            parts = line.split(",")
            if width is None:
                width = len(parts)
            if len(parts) != width or width < 2:
                raise DataError("inconsistent column count", lineno)
            try:
                rows.append([float(p) for p in parts[:-1]])
            except ValueError:
                raise DataError("non-numeric feature", lineno) from None
            labels.append(_label(parts[-1], lineno, zero_based))
        X = np.array(rows, dtype=float)
    elif format == "sparse_svm":
        entries, dim = [], 0
        for lineno, line in enumerate(lines, 1):
            parts = line.split()
            if not parts:
                continue
            labels.append(_label(parts[0], lineno, zero_based))
            row = {}
            for tok in parts[1:]:
                idx, sep, val = tok.partition(":")
                try:
                    i, v = int(idx), float(val)
                except ValueError:
                    raise DataError(f"malformed entry {tok!r}", lineno) from None
                if not sep or i < 1:
                    raise DataError(f"malformed entry {tok!r}", lineno)
                row[i - 1] = v
                dim = max(dim, i)
            entries.append(row)
        X = np.zeros((len(entries), dim))
        for r, row in enumerate(entries):
            for i, v in row.items():
                X[r, i] = v
    else:
        raise ConfigurationError(f"unknown dataset format {format!r}")
    if not labels:
        raise DataError(f"{path} holds no samples")
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite feature values")
    y = np.array(labels, dtype=int)
    if classes is not None and y.max() > classes:
        raise DataError(f"label {y.max()} exceeds class count {classes}")
    return Dataset(X, y)


def partition(dataset, N, scheme="contiguous", seed=0):
    """Split into ``N`` shards whose sizes differ by at most one."""
    n = dataset.n
    if not 1 <= N <= n:
        raise ConfigurationError(f"cannot split {n} samples over {N} clients")
    if scheme == "contiguous":
        order = np.arange(n)
    elif scheme == "shuffled":
        order = np.random.default_rng(seed).permutation(n)
    else:
        raise ConfigurationError(f"unknown partition scheme {scheme!r}")
    return [Dataset(dataset.features[idx], dataset.labels[idx])
            for idx in np.array_split(order, N)]


def gaussian_blobs(n, features, classes, rng, separation=1.5):
    """Isotropic unit-variance blobs around random class centers."""
    centers = rng.normal(scale=separation, size=(classes, features))
    labels = rng.integers(0, classes, size=n)
    X = centers[labels] + rng.standard_normal((n, features))
    return Dataset(X, labels + 1)
