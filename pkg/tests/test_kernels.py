import math

import numpy as np
import pytest

from ldot.costs import CramerClosed, CramerFamily, Quadratic
from ldot.kernels import (ReferenceCoupling, build_reference_density, build_reference_gibbs,
                          build_reference_montecarlo, nearest_bin, second_marginal)
from ldot.measures import DiscreteMeasure, marginal0
from ldot.noise import GibbsOf, IIDSum, PowerGaussian, ScaledGaussian, sample_noise
from scipy.stats import poisson


def test_gibbs_two_point_row():
    pi = build_reference_gibbs(DiscreteMeasure.dirac([0.0]), [0.0, 1.0], Quadratic(), 2)
    np.testing.assert_allclose(pi.rows[0], [0.731059, 0.268941], atol=1e-6)


def test_gibbs_concentrates():
    pi = build_reference_gibbs(DiscreteMeasure.dirac([0.3]), [0.3, 1.3], Quadratic(), 50)
    assert pi.rows[0, 0] >= 1 - math.exp(-25) - 1e-16
    grid = np.linspace(0, 1, 6)
    mu = DiscreteMeasure.uniform(grid)
    prev = None
    for k in (1, 2, 4, 8, 16, 32, 64, 128, 256):
        off = 1 - np.diag(build_reference_gibbs(mu, grid, Quadratic(), k).rows)
        if prev is not None:
            assert np.all(off <= prev + 1e-15)
        prev = off


def test_zero_cost_gives_uniform_rows():
    flat = CramerClosed(CramerFamily("gaussian", a=1e200))  # c(u) = 0 to the last bit
    pi = build_reference_gibbs(DiscreteMeasure.uniform([0.0, 1.0]), [0.0, 1.0, 2.0], flat, 1)
    np.testing.assert_allclose(pi.rows, 1 / 3, atol=1e-12)


def test_rows_stochastic_and_first_marginal_exact():
    mu = DiscreteMeasure([0.0, 0.5, 2.0], [0.2, 0.3, 0.5])
    pi = build_reference_gibbs(mu, np.linspace(-1, 3, 17), Quadratic(), 1024)
    assert np.max(np.abs(pi.rows.sum(axis=1) - 1)) <= 1e-12
    np.testing.assert_allclose(marginal0(pi.coupling()).weights, mu.weights, rtol=0, atol=1e-15)


def test_infinite_cost_row_rejected():
    with pytest.raises(ValueError):
        build_reference_gibbs(DiscreteMeasure.dirac([0.0]), [3.0, 4.0],
                              CramerClosed(CramerFamily("bernoulli")), 2)


def test_density_gaussian_row():
    pi = build_reference_density(DiscreteMeasure.dirac([0.0]), [-1.0, 0.0, 1.0], ScaledGaussian(), 1)
    np.testing.assert_allclose(pi.rows[0], [0.274069, 0.451863, 0.274069], atol=1e-6)


def test_density_matches_gibbs_for_gaussian_quadratic():
    mu = DiscreteMeasure([-0.4, 0.1, 0.9], [0.3, 0.3, 0.4])
    grid = np.linspace(-2, 2, 41)
    for k in (1, 7, 64):
        a = build_reference_density(mu, grid, ScaledGaussian(), k).rows
        b = build_reference_gibbs(mu, grid, Quadratic(), k).rows
        assert np.max(np.abs(a - b)) <= 1e-12


def test_density_symmetric_rows():
    pi = build_reference_density(DiscreteMeasure.dirac([0.0]), np.linspace(-2, 2, 9), PowerGaussian(3), 2)
    np.testing.assert_allclose(pi.rows[0], pi.rows[0][::-1], atol=1e-15)


def test_density_poisson_lattice():
    grid = np.arange(0, 40) / 3
    pi = build_reference_density(DiscreteMeasure.dirac([0.0]), grid, IIDSum(CramerFamily("poisson")), 3)
    want = poisson.pmf(np.arange(40), 3.0)
    np.testing.assert_allclose(pi.rows[0], want / want.sum(), atol=1e-15)


def test_density_bernoulli_needs_lattice():
    spec = IIDSum(CramerFamily("bernoulli"))
    pi = build_reference_density(DiscreteMeasure.dirac([0.0]), [-1.0, 0.0, 1.0], spec, 2)
    np.testing.assert_allclose(pi.rows[0], [0.25, 0.5, 0.25], atol=1e-15)
    with pytest.raises(ValueError):
        build_reference_density(DiscreteMeasure.dirac([0.0]), [0.3, 0.7], spec, 2)


def test_gibbs_noise_delegates():
    mu = DiscreteMeasure.dirac([0.0])
    a = build_reference_density(mu, [0.0, 1.0], GibbsOf(Quadratic()), 2)
    assert a.mode == "density"
    np.testing.assert_array_equal(a.rows, build_reference_gibbs(mu, [0.0, 1.0], Quadratic(), 2).rows)
    with pytest.raises(ValueError):
        sample_noise(GibbsOf(Quadratic()), 2, 3, seed=0)


def test_montecarlo_rows():
    mu = DiscreteMeasure([0.0, 1.0], [0.5, 0.5])
    grid = np.linspace(-3, 4, 141)
    pi = build_reference_montecarlo(mu, grid, ScaledGaussian(), 4, 100_000, seed=11)
    means = pi.rows @ grid
    assert np.all(np.abs(means - mu.support[:, 0]) <= 3 * 0.5 / math.sqrt(1e5) + 0.01 / 4)
    again = build_reference_montecarlo(mu, grid, ScaledGaussian(), 4, 100_000, seed=11)
    assert np.array_equal(pi.log_rows, again.log_rows)
    one = build_reference_montecarlo(mu, grid, ScaledGaussian(), 4, 1, seed=11)
    assert np.all(np.sort(one.rows, axis=1)[:, -1] == 1.0)


@pytest.mark.parametrize("k", [1, 4])
def test_montecarlo_agrees_with_density(k):
    mu = DiscreteMeasure.dirac([0.0])
    grid = np.linspace(-2.5, 2.5, 26)
    n = 100_000
    mc = build_reference_montecarlo(mu, grid, ScaledGaussian(), k, n, seed=5).rows[0]
    # density mode is a midpoint rule; compare to the exact bin probabilities instead
    from scipy.stats import norm
    edges = np.concatenate([[-np.inf], (grid[1:] + grid[:-1]) / 2, [np.inf]])
    p = np.diff(norm.cdf(edges * math.sqrt(k)))
    se = np.sqrt(p * (1 - p) / n)
    assert np.all(np.abs(mc - p) <= 4 * se + 1e-12)


def test_nearest_bin_ties_go_low():
    assert nearest_bin(np.array([0.5, 0.2, 0.8]), np.array([0.0, 1.0])).tolist() == [0, 0, 1]


def test_second_marginal_and_validation():
    mu = DiscreteMeasure.uniform([0.0, 1.0])
    pi = build_reference_gibbs(mu, [0.0, 1.0], Quadratic(), 1)
    np.testing.assert_allclose(second_marginal(pi).weights, [0.5, 0.5])
    with pytest.raises(ValueError):
        ReferenceCoupling(mu, [[0.0], [1.0]], np.log([[0.5, 0.6], [0.5, 0.5]]), 1, "gibbs")
    with pytest.raises(ValueError):
        ReferenceCoupling(mu, [[0.0], [1.0]], np.log([[0.5, 0.5], [0.5, 0.5]]), 0, "gibbs")
