"""Composite per-client cost functions.

Each client cost is ``f(theta) = s(theta) + l1 * ||theta||_1`` where ``s`` is
smooth.  Families: quadratic (optionally with an l1 term, which gives the
elastic net) and multinomial logistic regression with an l2 penalty.

The conjugate used throughout is that of ``g = f - (nu/2)||.||^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla
from scipy.special import logsumexp, softmax

from . import apg
from .errors import (
    ConfigurationError,
    ConjugateError,
    ConstructionError,
    DomainError,
    InputError,
)


def soft_threshold(z, tau):
    return np.sign(z) * np.maximum(np.abs(z) - tau, 0.0)


@dataclass
class ConjugateResult:
    value: float
    maximizer: np.ndarray | None
    residual: float


class CompositeOracle:
    """Base class; subclasses provide ``smooth_value_grad`` and constants.

    Attributes
    ----------
    dim : int
    mu : float
        Strong convexity constant of ``f`` (may be 0 before regularization).
    L : float or None
        Smoothness constant of ``f``; ``None`` when ``f`` is nonsmooth.
    l1 : float
        Weight of the l1 part (0 for smooth families).
    curvature : float
        Certified strong convexity of ``s`` alone, at least ``mu``.  Used to
        bound the error of numeric conjugate solves.
    smooth_lipschitz : float
        Upper bound on the Lipschitz constant of ``grad s``.
    """

    dim: int
    mu: float
    L: float | None
    l1: float = 0.0
    conjugate_mode = "numeric"

    @property
    def curvature(self):
        return self.mu

    # --- evaluation -------------------------------------------------------
    def smooth_value_grad(self, theta):
        raise NotImplementedError

    def nonsmooth_value(self, theta):
        if self.l1 == 0.0:
            return 0.0
        return self.l1 * float(np.abs(theta).sum())

    def prox_nonsmooth(self, z, step):
        if self.l1 == 0.0:
            return z
        return soft_threshold(z, step * self.l1)

    def value(self, theta):
        return self.smooth_value_grad(theta)[0] + self.nonsmooth_value(theta)

    def tilted_argmin(self, v):
        """Exact ``argmin f(theta) - <v, theta>`` when available, else None."""
        return None

    def regularized(self, alpha):
        raise NotImplementedError

    # --- conjugate ---------------------------------------------------------
    def conjugate_g(self, xi, nu, x0=None, tol=None, max_iters=100_000):
        """Numeric ``g*(xi)`` through a strongly convex inner minimization.

        The returned value is an upper estimate: the certified slack
        ``residual^2 / (2 * modulus)`` is added to the computed value.
        """
        xi = np.asarray(xi, dtype=float)
        modulus = self.curvature - nu
        if nu > self.mu * (1 + 1e-12) and nu > 0:
            raise DomainError(f"nu={nu} exceeds mu={self.mu}; g is nonconvex")
        if modulus <= 0:
            raise DomainError(
                "numeric conjugate needs nu < mu strictly "
                f"(nu={nu}, curvature={self.curvature})"
            )
        if tol is None:
            tol = 1e-10 * (np.linalg.norm(xi) + 1.0)

        def smooth(th):
            val, grad = self.smooth_value_grad(th)
            return (val - 0.5 * nu * float(th @ th) - float(xi @ th),
                    grad - nu * th - xi)

        x0 = np.zeros(self.dim) if x0 is None else x0
        state, ok = apg.minimize(
            smooth, self.prox_nonsmooth, self.nonsmooth_value, x0,
            step0=1.0 / self.smooth_lipschitz, subgrad_tol=tol,
            max_iters=max_iters,
        )
        if not ok:
            raise ConjugateError("conjugate inner solve stalled", state.subgrad_norm)
        r = state.subgrad_norm
        return ConjugateResult(-state.value + r * r / (2.0 * modulus), state.x, r)


class QuadraticOracle(CompositeOracle):
    """``f(theta) = 0.5 theta'A theta - b'theta + c + l1 ||theta||_1``.

    With ``l1 > 0`` this is the elastic-net family; ``mu`` then defaults to
    the explicit l2 weight passed by :func:`elastic_net`.
    """

    def __init__(self, A, b, c=0.0, l1=0.0, mu=None, L=None, psd_ok=False):
        A = np.array(A, dtype=float, ndmin=2)
        b = np.array(b, dtype=float, ndmin=1)
        if A.shape != (b.size, b.size):
            raise ConstructionError(f"A has shape {A.shape}, b has size {b.size}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ConstructionError("non-finite quadratic data")
        A = 0.5 * (A + A.T)
        self.A, self.b, self.c = A, b, float(c)
        self.dim = b.size
        self.l1 = float(l1)
        if self.l1 < 0:
            raise ConstructionError("l1 weight must be nonnegative")
        lam = self._eig[0]
        tol = 1e-12 * max(1.0, float(np.abs(lam).max()))
        if lam[0] < -tol or (lam[0] <= tol and not psd_ok):
            raise ConstructionError(
                f"quadratic is not positive definite (lambda_min={lam[0]:.3e})"
            )
        self._lam_min = float(lam[0]) if lam[0] > tol else 0.0
        self.smooth_lipschitz = float(lam[-1])
        self.mu = self._lam_min if mu is None else float(mu)
        if self.l1 > 0:
            self.L = None
        else:
            self.L = self.smooth_lipschitz if L is None else float(L)
        self.conjugate_mode = "analytic" if self.l1 == 0 else "numeric"

    @cached_property
    def _eig(self):
        return np.linalg.eigh(self.A)

    @cached_property
    def _chol(self):
        if self._lam_min <= 0:
            raise DomainError("quadratic is singular; no unique minimizer")
        return sla.cho_factor(self.A)

    @property
    def curvature(self):
        return max(self._lam_min, self.mu)

    def smooth_value_grad(self, theta):
        At = self.A @ theta
        return 0.5 * float(theta @ At) - float(self.b @ theta) + self.c, At - self.b

    def hessian(self, theta=None):
        return self.A

    def tilted_argmin(self, v):
        if self.l1 > 0:
            return None
        return sla.cho_solve(self._chol, self.b + v)

    def regularized(self, alpha):
        return QuadraticOracle(
            self.A + alpha * np.eye(self.dim), self.b, self.c, self.l1,
            mu=self.mu + alpha,
            L=None if self.L is None else self.L + alpha,
            psd_ok=True,
        )

    def conjugate_g(self, xi, nu, x0=None, tol=None, max_iters=100_000):
        if self.l1 > 0:
            return super().conjugate_g(xi, nu, x0, tol, max_iters)
        lam, V = self._eig
        w = lam - nu
        scale = max(1.0, float(np.abs(lam).max()))
        if w[0] < -1e-12 * scale:
            raise DomainError(f"nu={nu} exceeds lambda_min={lam[0]}; g is nonconvex")
        p = np.asarray(xi, dtype=float) + self.b
        q = V.T @ p
        null = w <= 1e-12 * scale
        off = float(np.linalg.norm(q[null])) if null.any() else 0.0
        if off > 1e-9 * (np.linalg.norm(p) + 1.0):
            return ConjugateResult(np.inf, None, off)
        coef = np.where(null, 0.0, q / np.where(null, 1.0, w))
        value = 0.5 * float(q[~null] @ coef[~null]) - self.c
        return ConjugateResult(value, V @ coef, 0.0)


def quadratic(A, b, c=0.0):
    return QuadraticOracle(A, b, c)


def least_squares(X, y, mu=0.0, l1=0.0):
    """``(1/2m)||X theta - y||^2 + (mu/2)||theta||^2 + l1 ||theta||_1``."""
    X = np.array(X, dtype=float, ndmin=2)
    y = np.array(y, dtype=float, ndmin=1)
    m = X.shape[0]
    if m == 0:
        raise ConstructionError("empty shard")
    if y.size != m:
        raise ConstructionError("X and y disagree on the number of samples")
    A = X.T @ X / m + mu * np.eye(X.shape[1])
    return QuadraticOracle(
        A, X.T @ y / m, float(y @ y) / (2 * m), l1=l1,
        mu=mu if l1 > 0 else None, psd_ok=True,
    )


def elastic_net(X, y, mu, l1):
    if mu <= 0:
        raise ConstructionError("elastic net needs an explicit l2 weight mu > 0")
    return least_squares(X, y, mu=mu, l1=l1)


class LogisticOracle(CompositeOracle):
    """Multinomial logistic regression with an l2 penalty.

    ``theta`` is the row-major flattening of the ``(d+1) x k`` matrix whose
    first ``d`` rows are the weights and whose last row is the bias.
    """

    L_is_bound = True

    def __init__(self, X, labels, classes, mu):
        X = np.array(X, dtype=float, ndmin=2)
        labels = np.asarray(labels, dtype=int)
        if X.shape[0] == 0:
            raise ConstructionError("empty shard")
        if labels.shape != (X.shape[0],):
            raise ConstructionError("labels do not match samples")
        if labels.min() < 0 or labels.max() >= classes:
            raise ConstructionError("labels must lie in [0, classes)")
        if mu < 0:
            raise ConstructionError("mu must be nonnegative")
        self.Xt = np.hstack([X, np.ones((X.shape[0], 1))])
        self.labels = labels
        self.k = int(classes)
        self.n = X.shape[0]
        self.mu = float(mu)
        self.dim = self.Xt.shape[1] * self.k
        self._onehot = np.eye(self.k)[labels]
        # softmax Hessian is bounded by I/2
        fro = float(np.sum(self.Xt * self.Xt))
        self.smooth_lipschitz = 0.5 * fro / self.n + self.mu
        self.L = self.smooth_lipschitz

    def _scores(self, theta):
        return self.Xt @ theta.reshape(-1, self.k)

    def smooth_value_grad(self, theta):
        Z = self._scores(theta)
        lse = logsumexp(Z, axis=1)
        loss = float(np.mean(lse - np.sum(Z * self._onehot, axis=1)))
        P = np.exp(Z - lse[:, None])
        G = self.Xt.T @ (P - self._onehot) / self.n
        return (loss + 0.5 * self.mu * float(theta @ theta),
                G.ravel() + self.mu * theta)

    def hessian(self, theta):
        P = softmax(self._scores(theta), axis=1)
        S = np.einsum("jl,lq->jlq", P, np.eye(self.k)) - np.einsum("jl,jq->jlq", P, P)
        H = np.einsum("ji,jm,jlq->ilmq", self.Xt, self.Xt, S, optimize=True) / self.n
        return H.reshape(self.dim, self.dim) + self.mu * np.eye(self.dim)

    def regularized(self, alpha):
        out = LogisticOracle.__new__(LogisticOracle)
        out.__dict__.update(self.__dict__)
        out.mu = self.mu + alpha
        out.smooth_lipschitz = self.smooth_lipschitz + alpha
        out.L = out.smooth_lipschitz
        return out


# --- module-level operations ----------------------------------------------


def _check_point(oracle, theta):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (oracle.dim,):
        raise ConfigurationError(
            f"point has shape {theta.shape}, oracle dimension is {oracle.dim}"
        )
    if not np.all(np.isfinite(theta)):
        raise InputError("non-finite parameter vector")
    return theta


def evaluate(oracle, theta):
    """Return ``(f(theta), grad s(theta))``."""
    theta = _check_point(oracle, theta)
    val, grad = oracle.smooth_value_grad(theta)
    return val + oracle.nonsmooth_value(theta), grad


def conjugate_g(oracle, xi, nu, **kw):
    if nu <= 0:
        raise DomainError("nu must be positive")
    xi = _check_point(oracle, xi)
    return oracle.conjugate_g(xi, nu, **kw)


def regularize(oracles, alpha):
    if not alpha > 0:
        raise DomainError(f"regularization weight must be positive, got {alpha}")
    return [o.regularized(alpha) for o in oracles]


@dataclass
class ProblemSpec:
    """Per-client data for one problem family.

    ``shards`` holds ``(A_j, b_j)`` or ``(A_j, b_j, c_j)`` for ``quadratic``
    and ``(X_j, y_j)``
    for ``least_squares``, ``elastic_net`` and ``logistic``.  Logistic
    labels are 0-based here.
    """

    kind: str
    shards: list = field(default_factory=list)
    mu: float = 0.0
    l1: float = 0.0
    classes: int | None = None


def make_family(spec: ProblemSpec):
    if not spec.shards:
        raise ConstructionError("no client data")
    if spec.kind == "quadratic":
        return [QuadraticOracle(*shard) for shard in spec.shards]
    if spec.kind == "least_squares":
        return [least_squares(X, y, mu=spec.mu) for X, y in spec.shards]
    if spec.kind == "elastic_net":
        return [elastic_net(X, y, spec.mu, spec.l1) for X, y in spec.shards]
    if spec.kind == "logistic":
        if spec.classes is None:
            raise ConstructionError("logistic family needs the class count")
        return [LogisticOracle(X, y, spec.classes, spec.mu) for X, y in spec.shards]
    raise ConstructionError(f"unknown problem kind {spec.kind!r}")


class GlobalObjective:
    """``E(theta) = (1/N) sum_j f_j(theta)``."""

    def __init__(self, oracles):
        self.oracles = list(oracles)
        self.N = len(self.oracles)
        self.dim = self.oracles[0].dim
        self.l1 = sum(o.l1 for o in self.oracles) / self.N
        self.mu = min(o.mu for o in self.oracles)
        Ls = [o.L for o in self.oracles]
        self.L = None if any(v is None for v in Ls) else max(Ls)
        self.smooth_lipschitz = sum(o.smooth_lipschitz for o in self.oracles) / self.N

    def smooth_value_grad(self, theta):
        val, grad = 0.0, np.zeros(self.dim)
        for o in self.oracles:
            v, g = o.smooth_value_grad(theta)
            val += v
            grad += g
        return val / self.N, grad / self.N

    def nonsmooth_value(self, theta):
        return self.l1 * float(np.abs(theta).sum())

    def prox_nonsmooth(self, z, step):
        return soft_threshold(z, step * self.l1) if self.l1 else z

    def value(self, theta):
        return self.smooth_value_grad(theta)[0] + self.nonsmooth_value(theta)

    def min_norm_subgradient(self, theta):
        grad = self.smooth_value_grad(theta)[1]
        if self.l1 == 0:
            return grad
        nz = theta != 0
        out = np.where(nz, grad + self.l1 * np.sign(theta), 0.0)
        return np.where(nz, out, soft_threshold(grad, self.l1))

    def hessian(self, theta):
        return sum(o.hessian(theta) for o in self.oracles) / self.N
