"""Synthetic problem families and construction from a run config."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from ..oracle import ProblemSpec, make_family
from .data import gaussian_blobs, load_dataset, partition


def random_spd(dim, lam_min, lam_max, rng):
    """Random rotation of a spectrum that contains both endpoints."""
    Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    if dim == 1:
        lam = np.array([lam_min])
    else:
        lam = np.concatenate([[lam_min, lam_max], rng.uniform(lam_min, lam_max, dim - 2)])
    A = (Q * lam) @ Q.T
    return 0.5 * (A + A.T)


def quadratic_family(N, dim, kappa, rng, mu=1.0):
    """Heterogeneous SPD quadratics with spectra in ``[mu, kappa * mu]``."""
    return make_family(ProblemSpec("quadratic", [
        (random_spd(dim, mu, kappa * mu, rng), rng.standard_normal(dim))
        for _ in range(N)
    ]))


def toy_family(N=2):
    """1-D quadratics ``0.5 (theta -+ 1)^2`` with alternating centers."""
    centers = [1.0 if j % 2 == 0 else -1.0 for j in range(N)]
    return make_family(ProblemSpec("quadratic", [([[1.0]], [c], 0.5) for c in centers]))


def least_squares_family(N, rows, dim, rng, mu=0.0):
    """Consistent least squares; underdetermined when ``N * rows < dim``."""
    truth = rng.standard_normal(dim)
    shards = []
    for _ in range(N):
        X = rng.standard_normal((rows, dim)) / np.sqrt(dim)
        shards.append((X, X @ truth))
    return make_family(ProblemSpec("least_squares", shards, mu=mu))


def elastic_net_family(N, rows, dim, rng, mu=0.05, l1=0.1):
    truth = rng.standard_normal(dim) * (rng.random(dim) < 0.5)
    shards = []
    for _ in range(N):
        X = rng.standard_normal((rows, dim))
        shards.append((X, X @ truth + 0.1 * rng.standard_normal(rows)))
    return make_family(ProblemSpec("elastic_net", shards, mu=mu, l1=l1))


def logistic_family(dataset, N, mu, scheme="contiguous", seed=0, classes=None):
    k = classes or dataset.classes
    shards = [(s.features, s.labels - 1) for s in partition(dataset, N, scheme, seed)]
    return make_family(ProblemSpec("logistic", shards, mu=mu, classes=k))


def build_problem(pc, seed):
    """Oracles for the ``[problem]`` section of a run config."""
    rng = np.random.default_rng(seed)
    if pc.kind == "quadratic":
        return quadratic_family(pc.clients, pc.dim, pc.kappa, rng)
    if pc.kind == "toy":
        return toy_family(pc.clients)
    if pc.kind == "least_squares":
        return least_squares_family(pc.clients, pc.samples, pc.dim, rng, mu=0.0)
    if pc.kind == "elastic_net":
        return elastic_net_family(pc.clients, pc.samples, pc.dim, rng, pc.mu, pc.l1)
    if pc.kind == "logistic":
        if pc.data:
            ds = load_dataset(pc.data, pc.format, zero_based=pc.zero_based_labels)
        else:
            ds = gaussian_blobs(pc.samples, pc.features, pc.classes, rng, pc.separation)
        return logistic_family(ds, pc.clients, pc.mu, pc.partition, seed,
                               classes=max(pc.classes, ds.classes))
    raise ConfigurationError(f"unknown problem kind {pc.kind!r}")
