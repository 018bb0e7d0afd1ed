import math

import numpy as np
import pytest

from ldot.measures import Coupling
from ldot.solvers import (entropy_maximizer, relative_entropy, tensorized_entropy,
                          variational_objective)


def test_relative_entropy_examples():
    p = np.full((2, 2), 0.25)
    assert relative_entropy(p, p) == 0.0
    assert relative_entropy(np.array([[1.0, 0], [0, 0]]), p) == pytest.approx(math.log(4))
    assert relative_entropy(np.array([[0.5, 0.5], [0, 0]]), np.array([[1.0, 0], [0, 0]])) == math.inf


def test_relative_entropy_needs_same_supports():
    a = Coupling([0.0], [0.0, 1.0], [[0.5, 0.5]])
    b = Coupling([0.0], [0.0, 2.0], [[0.5, 0.5]])
    with pytest.raises(ValueError):
        relative_entropy(a, b)


def test_variational_representation(rng):
    for _ in range(20):
        q, p = rng.random(6), rng.random(6)
        q[rng.integers(6)] = 0
        q, p = q / q.sum(), p / p.sum()
        H = relative_entropy(q, p)
        assert variational_objective(entropy_maximizer(q, p), q, p) == pytest.approx(H, abs=1e-9)
        for _ in range(50):
            assert variational_objective(rng.normal(size=6) * 3, q, p) <= H + 1e-12


def test_tensorization(rng):
    r, p = rng.random((4, 5)), rng.random((4, 5))
    r, p = r / r.sum(), p / p.sum()
    first, cond = tensorized_entropy(r, p)
    assert first + cond == pytest.approx(relative_entropy(r, p), abs=1e-14)
