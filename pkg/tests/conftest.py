import numpy as np
import pytest

from ldot.costs import Quadratic
from ldot.measures import DiscreteMeasure, canonical_family

GRID8 = np.linspace(-1.0, 1.0, 8)


def random_measure(rng, points, floor=0.05):
    w = rng.random(len(points)) + floor
    return DiscreteMeasure(points, w / w.sum())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def reference_instance():
    """The fixed 8x8 instance used for the double-limit checks."""
    from ldot.experiments import Instance
    mu = DiscreteMeasure(GRID8, np.array([1, 2, 3, 4, 4, 3, 2, 1]) / 20)
    nu = DiscreteMeasure(GRID8, np.array([4, 3, 1, 1, 1, 1, 3, 6]) / 20)
    return Instance(mu, nu, Quadratic(), canonical_family(8, mu, nu))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
