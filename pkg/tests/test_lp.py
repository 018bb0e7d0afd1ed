import numpy as np
import pytest
from scipy.optimize import linprog

from ldot.costs import CostMatrix, PowerP, Quadratic, cost_matrix
from ldot.measures import Coupling, DiscreteMeasure
from ldot.solvers import (InfeasibleError, coupling_dual_value, ctransform_s1, dual_value,
                          duality_gap, solve_mk_1d_monotone, solve_mk_lp)
from ldot.solvers.network_simplex import northwest_corner

from conftest import random_measure


def highs_value(a, b, C):
    m, n = C.shape
    A = np.vstack([np.kron(np.eye(m), np.ones(n)), np.kron(np.ones(m), np.eye(n))])
    return linprog(C.ravel(), A_eq=A, b_eq=np.r_[a, b], bounds=(0, None), method="highs").fun


def test_dirac_to_dirac():
    mu, nu = DiscreteMeasure.dirac([0.0]), DiscreteMeasure.dirac([1.0])
    C = cost_matrix(Quadratic(), mu, nu)
    rep = solve_mk_lp(mu, nu, C)
    assert rep.value == 0.5 and rep.plan.weights.tolist() == [[1.0]]
    assert duality_gap(rep, mu, nu, C) == 0.0


def test_two_point_l1():
    mu = DiscreteMeasure([0.0, 1.0], [0.5, 0.5])
    nu = DiscreteMeasure([0.0, 1.0], [0.25, 0.75])
    C = cost_matrix(PowerP(1), mu, nu)
    rep = solve_mk_lp(mu, nu, C)
    assert rep.value == pytest.approx(0.25, abs=1e-15)
    assert dual_value(-rep.dual_psi, mu, nu, C) == pytest.approx(0.25, abs=1e-15)


def test_identity_plan(rng):
    grid = np.linspace(0, 1, 7)
    mu = random_measure(rng, grid)
    rep = solve_mk_lp(mu, mu, cost_matrix(Quadratic(), mu, mu))
    assert rep.value == 0.0
    np.testing.assert_allclose(rep.plan.weights, np.diag(mu.weights), atol=1e-15)


def test_dual_certificate(rng):
    for _ in range(20):
        mu = random_measure(rng, rng.normal(size=int(rng.integers(2, 12))))
        nu = random_measure(rng, rng.normal(size=int(rng.integers(2, 12))))
        C = cost_matrix(Quadratic(), mu, nu)
        rep = solve_mk_lp(mu, nu, C)
        slack = C.values - rep.dual_phi[:, None] - rep.dual_psi[None, :]
        assert slack.min() >= -1e-12
        assert np.all(np.abs(slack[rep.plan.weights > 0]) <= 1e-12)
        assert rep.value == pytest.approx(mu.weights @ rep.dual_phi + nu.weights @ rep.dual_psi, abs=1e-9)
        assert rep.value == pytest.approx(C.integrate(rep.plan), abs=1e-10)
        assert rep.residual <= 1e-12


def test_matches_highs_on_random_costs(rng):
    for trial in range(30):
        m, n = rng.integers(1, 25, 2)
        a = random_measure(rng, np.arange(m)).weights
        b = random_measure(rng, np.arange(n)).weights
        if trial % 4 == 0:
            a, b = np.full(m, 1 / m), np.full(n, 1 / n)  # degenerate bases
        Cv = rng.random((m, n))
        if trial % 5 == 1:
            Cv = np.round(Cv * 3)  # ties
        mu, nu = DiscreteMeasure(np.arange(m), a), DiscreteMeasure(np.arange(n), b)
        C = CostMatrix(mu.support, nu.support, Cv)
        rep = solve_mk_lp(mu, nu, C)
        assert rep.termination == "optimal"
        assert rep.value == pytest.approx(highs_value(mu.weights, nu.weights, Cv), abs=1e-9)
        assert duality_gap(rep, mu, nu, C) <= 1e-8


def test_infinite_cells():
    mu = DiscreteMeasure([0.0, 1.0], [0.5, 0.5])
    C = CostMatrix(mu.support, mu.support, [[np.inf, 1.0], [2.0, np.inf]])
    rep = solve_mk_lp(mu, mu, C)
    assert rep.value == pytest.approx(1.5)
    assert rep.plan.weights[0, 0] == 0 and rep.plan.weights[1, 1] == 0
    with pytest.raises(InfeasibleError):
        solve_mk_lp(mu, mu, CostMatrix(mu.support, mu.support, [[np.inf, 1.0], [np.inf, 3.0]]))
    nu = DiscreteMeasure([0.0, 1.0], [0.9, 0.1])
    with pytest.raises(InfeasibleError):
        solve_mk_lp(mu, nu, CostMatrix(mu.support, nu.support, [[0.0, 1.0], [np.inf, 0.0]]))


def test_northwest_corner_is_feasible():
    a, b = np.array([0.3, 0.7]), np.array([0.5, 0.2, 0.3])
    x, basis = northwest_corner(a, b)
    np.testing.assert_allclose(x.sum(axis=1), a)
    np.testing.assert_allclose(x.sum(axis=0), b)
    assert len(basis) == 4


def test_monotone_examples():
    u = DiscreteMeasure.uniform([0.0, 1.0, 2.0])
    v = DiscreteMeasure.uniform([1.0, 2.0, 3.0])
    assert solve_mk_1d_monotone(u, v, Quadratic()).value == pytest.approx(0.5)
    assert solve_mk_1d_monotone(u, u, Quadratic()).value == 0.0
    assert solve_mk_1d_monotone(DiscreteMeasure.dirac([0.0]), DiscreteMeasure.dirac([1.0]),
                                PowerP(1)).value == 1.0
    with pytest.raises(ValueError):
        solve_mk_1d_monotone(u, v, PowerP(0.5))


def test_monotone_agrees_with_lp(rng):
    for trial in range(20):
        mu = random_measure(rng, rng.normal(size=int(rng.integers(1, 30))))
        nu = random_measure(rng, rng.normal(size=int(rng.integers(1, 30))))
        spec = PowerP([1, 2, 3][trial % 3])
        lp = solve_mk_lp(mu, nu, cost_matrix(spec, mu, nu)).value
        assert abs(lp - solve_mk_1d_monotone(mu, nu, spec).value) <= 1e-9


def test_ctransform_examples():
    g = np.linspace(0, 1, 4)
    C = cost_matrix(Quadratic(), g, g)
    np.testing.assert_allclose(ctransform_s1(np.full(4, 0.7), C), 0.7)
    assert ctransform_s1(-C.values[2], C)[2] == 0.0


def test_weak_duality(rng):
    grid = np.linspace(-1, 1, 6)
    mu, nu = random_measure(rng, grid), random_measure(rng, grid)
    C = cost_matrix(Quadratic(), grid, grid)
    primal = solve_mk_lp(mu, nu, C).value
    for _ in range(200):
        assert dual_value(rng.normal(size=6), mu, nu, C) <= primal + 1e-12


def test_gap_positive_for_bad_report(rng):
    grid = np.linspace(-1, 1, 5)
    mu, nu = random_measure(rng, grid), random_measure(rng, grid)
    C = cost_matrix(Quadratic(), grid, grid)
    rep = solve_mk_lp(mu, nu, C)
    worse = type(rep)(rep.value + 0.1, rep.plan, rep.dual_phi, rep.dual_psi, 0, 0.0, "optimal")
    assert duality_gap(worse, mu, nu, C) > 0.09


def test_coupling_dual_recovers_cost(rng):
    grid = np.linspace(-1, 1, 5)
    mu = random_measure(rng, grid)
    C = cost_matrix(Quadratic(), grid, grid)
    for _ in range(20):
        rows = rng.random((5, 5))
        rho = Coupling(grid, grid, mu.weights[:, None] * rows / rows.sum(axis=1, keepdims=True))
        assert coupling_dual_value(-C.values, rho, mu, C) == pytest.approx(C.integrate(rho), abs=1e-14)
        assert coupling_dual_value(rng.normal(size=(5, 5)), rho, mu, C) <= C.integrate(rho) + 1e-12
