import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualfl.dual_fista import (
    dual_energy,
    fista_run,
    prox_objective,
    prox_subproblem,
    recover_primal,
    subproblem_objective,
)
from dualfl.errors import DomainError
from dualfl.harness.problems import quadratic_family, random_spd, toy_family
from dualfl.harness.rates import rate_fit
from dualfl.oracle import GlobalObjective, elastic_net, quadratic
from dualfl.schedule import DeltaSchedule


def test_recover_primal():
    assert recover_primal(np.array([[-1.0], [1.0]]), 1.0)[0] == 0.0
    assert not recover_primal(np.zeros((3, 2)), 0.5).any()
    xi = np.random.default_rng(0).standard_normal((3, 2))
    np.testing.assert_allclose(recover_primal(2.5 * xi, 0.7), 2.5 * recover_primal(xi, 0.7))


def test_toy_dual_energy():
    oracles = toy_family(2)
    assert dual_energy(np.array([[-1.0], [1.0]]), oracles, 1.0) == pytest.approx(-1.0)
    assert dual_energy(np.zeros((2, 1)), oracles, 1.0) == math.inf


def test_dual_energy_at_optimum_pairs_with_n_times_primal():
    rng = np.random.default_rng(1)
    oracles = quadratic_family(3, 4, 10.0, rng)
    nu = 0.5
    obj = GlobalObjective(oracles)
    star = np.linalg.solve(obj.hessian(None), -obj.smooth_value_grad(np.zeros(4))[1])
    xi = np.array([o.smooth_value_grad(star)[1] - nu * star for o in oracles])
    assert dual_energy(xi, oracles, nu) == pytest.approx(-3 * obj.value(star), abs=1e-10)


def test_prox_subproblem_hand_example():
    oracles = [quadratic([[1.0]], [0.0])] * 2
    eta = np.array([[0.5], [-0.5]])
    res = prox_subproblem(0, eta, oracles, 0.5, 0.0)
    assert res.xi[0] == pytest.approx(0.25)
    inexact = prox_subproblem(0, eta, oracles, 0.5 * (1 - 1e-6), 1e-14)
    assert inexact.xi[0] == pytest.approx(0.25, abs=1e-6)


def test_prox_at_zero_is_zero():
    oracles = [quadratic([[2.0]], [0.0])] * 3
    res = prox_subproblem(1, np.zeros((3, 1)), oracles, 1.0, 0.0)
    assert res.xi[0] == 0.0


def test_prox_matches_linear_solve():
    rng = np.random.default_rng(2)
    A = [random_spd(5, 1.0, 6.0, rng) for _ in range(2)]
    b = [rng.standard_normal(5) for _ in range(2)]
    oracles = [quadratic(a, v) for a, v in zip(A, b)]
    nu = 0.8
    eta = rng.standard_normal((2, 5))
    c = eta[0] - eta.mean(axis=0)
    # minimize 0.5 (xi+b)'M^{-1}(xi+b) + ||xi - c||^2/(2 nu), M = A - nu I
    Minv = np.linalg.inv(A[0] - nu * np.eye(5))
    direct = np.linalg.solve(Minv + np.eye(5) / nu, c / nu - Minv @ b[0])
    for tol in (0.0, 1e-13):
        res = prox_subproblem(0, eta, oracles, nu * (1 - 1e-6) if tol else nu, tol)
        np.testing.assert_allclose(res.xi, direct, atol=1e-6 if tol else 1e-9)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 1000))
def test_block_additivity(seed):
    rng = np.random.default_rng(seed)
    oracles = quadratic_family(3, 2, 4.0, rng)
    nu = 0.7
    eta = rng.standard_normal((3, 2))
    c = eta - eta.mean(axis=0)
    x1, x2 = rng.standard_normal((3, 2)), rng.standard_normal((3, 2))

    def split(xi):
        return sum(subproblem_objective(xi[j], c[j], oracles[j], nu) for j in range(3))

    lhs = prox_objective(x1, eta, oracles, nu) - prox_objective(x2, eta, oracles, nu)
    rhs = split(x1) - split(x2)
    assert lhs == pytest.approx(rhs, abs=1e-10 * (1 + abs(lhs)))


def test_exact_prox_minimizes_full_prox_objective():
    rng = np.random.default_rng(3)
    oracles = quadratic_family(3, 3, 5.0, rng)
    nu = 0.9
    eta = rng.standard_normal((3, 3))
    xi = np.array([prox_subproblem(j, eta, oracles, nu, 0.0).xi for j in range(3)])
    base = prox_objective(xi, eta, oracles, nu)
    for _ in range(20):
        assert prox_objective(xi + 1e-3 * rng.standard_normal(xi.shape), eta, oracles, nu) >= base


def test_sublinear_exact_run():
    oracles = quadratic_family(2, 4, 10.0, np.random.default_rng(4))
    nu = min(o.mu for o in oracles)
    ft = fista_run(oracles, nu, 0.0, DeltaSchedule("zero"), 200)
    obj = GlobalObjective(oracles)
    star = np.linalg.solve(obj.hessian(None), -obj.smooth_value_grad(np.zeros(4))[1])
    xi_star = np.array([o.smooth_value_grad(star)[1] - nu * star for o in oracles])
    e_star = dual_energy(xi_star, oracles, nu)
    gaps = np.array([dual_energy(x, oracles, nu) - e_star for x in ft.xi[1:]])
    assert gaps[199] < gaps[49] < gaps[0]
    # FISTA with step nu = 1/L of the coupling term: gap <= 2 ||xi*||^2 / (nu (n+1)^2)
    n = np.arange(1, 201)
    bound = 2 * float(np.sum(xi_star ** 2)) / nu
    assert np.max((n + 1) ** 2 * gaps) <= bound


def test_geometric_schedule_rate():
    oracles = quadratic_family(4, 6, 100.0, np.random.default_rng(5))
    mu = min(o.mu for o in oracles)
    nu = mu * (1 - 1e-6)
    rho = 0.01
    delta = DeltaSchedule("geometric", a=0.5 * (1 - math.sqrt(rho)))
    ft = fista_run(oracles, nu, rho, delta, 80)
    obj = GlobalObjective(oracles)
    star = np.linalg.solve(obj.hessian(None), -obj.smooth_value_grad(np.zeros(6))[1])
    xi_star = np.array([o.smooth_value_grad(star)[1] - nu * star for o in oracles])
    e_star = dual_energy(xi_star, oracles, nu)
    gaps = np.array([dual_energy(x, oracles, nu) - e_star for x in ft.xi[1:]])
    usable = gaps[:60]
    assert np.all(usable > 0)
    factor, _ = rate_fit(usable, window=(20, 60))
    assert factor <= 1 - math.sqrt(rho) + 0.02
    assert all(sum(i) >= 0 for i in ft.iters)


def test_geometric_schedule_needs_slow_enough_decay():
    oracles = quadratic_family(2, 2, 4.0, np.random.default_rng(6))
    with pytest.raises(DomainError):
        fista_run(oracles, 0.5, 0.01, DeltaSchedule("geometric", a=0.95), 3)


def test_nonsmooth_clients_supported():
    rng = np.random.default_rng(7)
    oracles = [elastic_net(rng.standard_normal((6, 3)), rng.standard_normal(6), 0.1, 0.05)
               for _ in range(2)]
    ft = fista_run(oracles, 0.1 * (1 - 1e-6), 0.0, DeltaSchedule("polynomial", gamma=1.0), 10)
    assert len(ft.primal) == 11 and not any(ft.flagged)
    assert all(c <= d + 1e-15 for c, d in zip(ft.certificates, ft.deltas))
