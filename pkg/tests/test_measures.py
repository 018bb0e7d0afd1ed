import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ldot.measures import (Coupling, DiscreteMeasure, TestFamily, canonical_family, marginal0,
                           marginal1, narrow_metric, product_coupling, separates)

from conftest import random_measure


def test_duplicates_merge_and_sort():
    mu = DiscreteMeasure([1.0, 0.0, 1.0], [0.25, 0.5, 0.25])
    assert mu.support[:, 0].tolist() == [0.0, 1.0]
    assert mu.weights.tolist() == [0.5, 0.5]


def test_weights_renormalized_or_rejected():
    mu = DiscreteMeasure([0.0, 1.0], [0.5, 0.5 + 5e-10])
    assert abs(mu.weights.sum() - 1.0) < 1e-15
    with pytest.raises(ValueError):
        DiscreteMeasure([0.0, 1.0], [0.5, 0.6])
    with pytest.raises(ValueError):
        DiscreteMeasure([0.0, 1.0], [1.5, -0.5])


def test_marginals_of_small_matrix():
    rho = Coupling([0.0, 1.0], [0.0, 1.0], [[0.1, 0.4], [0.3, 0.2]])
    np.testing.assert_allclose(marginal0(rho).weights, [0.5, 0.5])
    np.testing.assert_allclose(marginal1(rho).weights, [0.4, 0.6])


def test_product_coupling():
    rho = product_coupling(DiscreteMeasure.dirac([0.0]), DiscreteMeasure.dirac([1.0]))
    assert rho.weights.tolist() == [[1.0]]
    u = DiscreteMeasure.uniform([0.0, 1.0])
    assert np.all(product_coupling(u, u).weights == 0.25)
    col = product_coupling(DiscreteMeasure([0.0, 1.0], [0.25, 0.75]), DiscreteMeasure.dirac([1.0]))
    assert col.weights[:, 0].tolist() == [0.25, 0.75]
    assert marginal1(product_coupling(u, DiscreteMeasure([2.0, 3.0], [0.3, 0.7]))).allclose(
        DiscreteMeasure([2.0, 3.0], [0.3, 0.7]))


def test_diagonal_coupling_marginal():
    rho = Coupling([0.0, 1.0], [0.0, 1.0], np.diag([0.5, 0.5]))
    assert marginal0(rho) == DiscreteMeasure.uniform([0.0, 1.0])
    assert marginal1(Coupling([0.0], [1.0], [[1.0]])) == DiscreteMeasure.dirac([1.0])


def test_narrow_metric_hand_value():
    fam = TestFamily.fourier(4, 1.0)
    d = narrow_metric(DiscreteMeasure.dirac([0.0]), DiscreteMeasure.dirac([1.0]), fam)
    assert d == pytest.approx(0.5, abs=1e-15)


def test_narrow_metric_identity(rng):
    mu = random_measure(rng, np.linspace(0, 1, 5))
    assert narrow_metric(mu, mu, canonical_family(6, mu)) == 0.0


def test_fourier_bounded_by_half():
    fam = TestFamily.fourier(10, 0.3, dim=2)
    G = fam.evaluate(np.random.default_rng(0).normal(size=(500, 2)) * 5)
    assert np.max(np.abs(G)) <= 0.5
    with pytest.raises(ValueError):
        TestFamily((lambda x: x[:, 0],), sup_bound=1.0)


def test_canonical_family_separates_opposite_points():
    grid = np.linspace(-1, 1, 8)
    fam = canonical_family(8, DiscreteMeasure.uniform(grid))
    assert separates(fam, grid)
    assert narrow_metric(DiscreteMeasure.dirac([-1.0]), DiscreteMeasure.dirac([1.0]), fam) > 0.1


def test_separation_both_directions(rng):
    grid = np.linspace(-2, 3, 6)
    for _ in range(20):
        a, b = random_measure(rng, grid), random_measure(rng, grid)
        fam = canonical_family(6, a, b)
        assert separates(fam, grid)
        assert narrow_metric(a, b, fam) > 0
        assert narrow_metric(a, a, fam) == 0
    assert not separates(canonical_family(2, DiscreteMeasure.uniform(grid)), grid)


probability = st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4).map(
    lambda w: DiscreteMeasure([-1.0, 0.0, 0.5, 2.0], np.array(w) / sum(w)))


@settings(max_examples=60, deadline=None)
@given(probability, probability, probability)
def test_pseudometric_and_clamp(a, b, c):
    fam = canonical_family(6, a)
    dab, dba = narrow_metric(a, b, fam), narrow_metric(b, a, fam)
    assert dab >= 0 and dab == pytest.approx(dba, abs=1e-15)
    assert narrow_metric(a, c, fam) <= dab + narrow_metric(b, c, fam) + 1e-12
    assert np.all(np.abs(fam.moments(a) - fam.moments(b)) <= 1.0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=6, max_size=6))
def test_marginals_sum_to_one(w):
    w = np.array(w) + 1e-3
    rho = Coupling([0.0, 1.0], [0.0, 1.0, 2.0], (w / w.sum()).reshape(2, 3))
    assert abs(marginal0(rho).weights.sum() - 1) < 1e-12
    assert abs(marginal1(rho).weights.sum() - 1) < 1e-12
