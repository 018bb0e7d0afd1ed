import math

import numpy as np

from ldot.costs import CramerFamily
from ldot.noise import IIDSum, PowerGaussian, ScaledGaussian, sample_noise


def test_scaled_gaussian_variance():
    u = sample_noise(ScaledGaussian(), 4, 100_000, seed=3)[:, 0]
    se = 0.25 * math.sqrt(2 / u.size)
    assert abs(u.var(ddof=1) - 0.25) <= 5 * se


def test_poisson_sum_mean():
    u = sample_noise(IIDSum(CramerFamily("poisson")), 10, 100_000, seed=4)[:, 0]
    assert abs(u.mean() - 1) <= 5 * math.sqrt(1 / (10 * 1e5))


def test_power_gaussian_at_two():
    k = 3
    u = sample_noise(PowerGaussian(2.0), k, 100_000, seed=5)[:, 0]
    want = 1 / (2 * k)
    assert abs(u.var(ddof=1) - want) <= 5 * want * math.sqrt(2 / u.size)


def test_bernoulli_sum_lattice():
    u = sample_noise(IIDSum(CramerFamily("bernoulli")), 4, 1000, seed=6)[:, 0]
    assert set(np.round(u, 12)) <= {-1.0, -0.5, 0.0, 0.5, 1.0}


def test_deterministic_given_seed():
    a = sample_noise(ScaledGaussian(2), 5, 100, seed=9, replicate=3)
    b = sample_noise(ScaledGaussian(2), 5, 100, seed=9, replicate=3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_noise(ScaledGaussian(2), 5, 100, seed=9, replicate=4))
