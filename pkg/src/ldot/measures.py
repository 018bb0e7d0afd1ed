"""Finite measures on R^d, couplings between them, and the narrow metric.

A :class:`DiscreteMeasure` is a finite weighted point set.  Supports are
stored as ``(N, d)`` float arrays, so a 1D measure on ``{0, 1}`` has support
``[[0.], [1.]]``.  Duplicate atoms are merged and the support is sorted
lexicographically, which makes two measures equal exactly when their arrays
are equal.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

WEIGHT_TOL = 1e-9


def as_points(points, dim: int | None = None) -> np.ndarray:
    """Coerce ``points`` to a finite ``(N, d)`` float array.

    A flat sequence is read as N points on the real line.
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise ValueError(f"points must be 1D or 2D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"expected points in R^{dim}, got R^{arr.shape[1]}")
    return arr


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def _check_mass(weights: np.ndarray, what: str) -> np.ndarray:
    if np.any(~np.isfinite(weights)) or np.any(weights < 0):
        raise ValueError(f"{what} weights must be finite and nonnegative")
    total = weights.sum()
    if abs(total - 1.0) > WEIGHT_TOL:
        raise ValueError(f"{what} weights sum to {total!r}, not 1")
    return weights / total


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure ``sum_j weights[j] * delta_{support[j]}``."""

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = as_points(self.support)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != pts.shape[0]:
            raise ValueError("support and weights differ in length")
        if pts.shape[0] == 0:
            raise ValueError("a probability measure needs at least one atom")
        uniq, inverse = np.unique(pts, axis=0, return_inverse=True)
        merged = np.zeros(uniq.shape[0])
        np.add.at(merged, inverse.reshape(-1), w)
        merged = _check_mass(merged, "measure")
        object.__setattr__(self, "support", _freeze(uniq))
        object.__setattr__(self, "weights", _freeze(merged))

    @classmethod
    def dirac(cls, point) -> "DiscreteMeasure":
        return cls(as_points([point] if np.ndim(point) == 1 else point), [1.0])

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        pts = as_points(points)
        return cls(pts, np.full(pts.shape[0], 1.0 / pts.shape[0]))

    @classmethod
    def empirical(cls, points) -> "DiscreteMeasure":
        """Empirical measure ``(1/n) sum_i delta_{x_i}``; repeated points merge."""
        return cls.uniform(points)

    @property
    def dim(self) -> int:
        return self.support.shape[1]

    def __len__(self) -> int:
        return self.support.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (self.support.shape == other.support.shape
                and np.array_equal(self.support, other.support)
                and np.array_equal(self.weights, other.weights))

    __hash__ = None

    def integrate(self, values) -> float:
        """``sum_j weights[j] * values[j]`` for values sampled on the support."""
        return float(np.dot(self.weights, values))

    def mean(self) -> np.ndarray:
        return self.weights @ self.support

    def allclose(self, other: "DiscreteMeasure", atol: float = 1e-12) -> bool:
        """Equality up to ``atol`` in the weights, ignoring zero-mass atoms."""
        a, b = self.trim(), other.trim()
        return (a.support.shape == b.support.shape
                and np.array_equal(a.support, b.support)
                and np.allclose(a.weights, b.weights, rtol=0.0, atol=atol))

    def trim(self) -> "DiscreteMeasure":
        keep = self.weights > 0
        return DiscreteMeasure(self.support[keep], self.weights[keep])

    def reweighted_on(self, support) -> np.ndarray:
        """Weights of this measure read off on ``support`` (which must contain it)."""
        pts = as_points(support, self.dim)
        idx = locate(pts, self.support)
        out = np.zeros(pts.shape[0])
        np.add.at(out, idx, self.weights)
        return out


def locate(grid: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Index in ``grid`` of each row of ``points``; raises if a point is absent."""
    lookup = {tuple(row): i for i, row in enumerate(np.asarray(grid).tolist())}
    try:
        return np.array([lookup[tuple(row)] for row in np.asarray(points).tolist()], dtype=int)
    except KeyError as exc:
        raise ValueError(f"point {list(exc.args[0])} is not on the grid") from None


@dataclass(frozen=True, eq=False)
class Coupling:
    """Joint weight matrix over ``source_support x target_support``.

    Rows index source atoms, columns index target atoms.  Supports are kept in
    the order given so that ``weights[i, j]`` lines up with cost matrices.
    """

    source_support: np.ndarray
    target_support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        src = as_points(self.source_support)
        tgt = as_points(self.target_support, src.shape[1])
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (src.shape[0], tgt.shape[0]):
            raise ValueError(f"weights shape {w.shape} does not match supports "
                             f"({src.shape[0]}, {tgt.shape[0]})")
        w = _check_mass(w, "coupling")
        object.__setattr__(self, "source_support", _freeze(src))
        object.__setattr__(self, "target_support", _freeze(tgt))
        object.__setattr__(self, "weights", _freeze(w))

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    def row_sums(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def col_sums(self) -> np.ndarray:
        return self.weights.sum(axis=0)


def marginal0(rho: Coupling) -> DiscreteMeasure:
    """First marginal: row sums on the source support."""
    return DiscreteMeasure(rho.source_support, rho.row_sums())


def marginal1(rho: Coupling) -> DiscreteMeasure:
    """Second marginal: column sums on the target support."""
    return DiscreteMeasure(rho.target_support, rho.col_sums())


def product_coupling(mu: DiscreteMeasure, nu: DiscreteMeasure) -> Coupling:
    return Coupling(mu.support, nu.support, np.outer(mu.weights, nu.weights))


# --------------------------------------------------------------------------
# test functions and the narrow metric


@dataclass(frozen=True, eq=False)
class TestFamily:
    """Finite ordered family ``g_1, ..., g_m`` with weights ``2**-i``.

    Each function maps an ``(N, d)`` array to ``N`` values.  ``sup_bound`` is
    the declared bound on ``|g_i|``; it must not exceed 1/2, and it is
    re-checked on every evaluation.
    """

    __test__ = False  # keep pytest from collecting this class

    functions: tuple[Callable[[np.ndarray], np.ndarray], ...]
    sup_bound: float = 0.5
    frequencies: np.ndarray | None = None

    def __post_init__(self):
        fns = tuple(self.functions)
        if len(fns) < 1:
            raise ValueError("a test family needs at least one function")
        if not 0 < self.sup_bound <= 0.5:
            raise ValueError("test functions must be bounded by 1/2 in sup norm")
        object.__setattr__(self, "functions", fns)

    @property
    def size(self) -> int:
        return len(self.functions)

    @property
    def weights(self) -> np.ndarray:
        return 2.0 ** -np.arange(1, self.size + 1)

    def evaluate(self, points) -> np.ndarray:
        """Matrix ``G[i, j] = g_i(x_j)`` of shape ``(m, N)``."""
        pts = as_points(points)
        G = np.vstack([np.asarray(g(pts), dtype=float).reshape(-1) for g in self.functions])
        if np.any(np.abs(G) > self.sup_bound + 1e-12):
            raise ValueError("test function exceeds its declared sup-norm bound")
        return G

    def moments(self, measure: DiscreteMeasure) -> np.ndarray:
        """Vector of ``<g_i, measure>``."""
        return self.evaluate(measure.support) @ measure.weights

    @classmethod
    def fourier(cls, m: int, radius: float = 1.0, dim: int = 1) -> "TestFamily":
        """Half-amplitude trigonometric family at lattice frequencies.

        ``g_{2j-1} = cos(pi <w_j, x> / R) / 2`` and ``g_{2j} = sin(...) / 2``,
        with ``w_j`` running over nonzero integer vectors (one of each ``+-w``
        pair) ordered by max-norm, then L1 norm, then lexicographically.  In
        1D this is ``w_j = j``.
        """
        if m < 1:
            raise ValueError("m must be >= 1")
        if radius <= 0:
            raise ValueError("radius must be positive")
        omegas = _lattice_frequencies((m + 1) // 2, dim)
        scale = np.pi / radius
        fns = []
        for i in range(m):
            w = omegas[i // 2] * scale
            trig = np.cos if i % 2 == 0 else np.sin
            fns.append(lambda x, w=w, trig=trig: 0.5 * trig(x @ w))
        return cls(tuple(fns), 0.5, _freeze(omegas))


def _lattice_frequencies(count: int, dim: int) -> np.ndarray:
    out: list[tuple[int, ...]] = []
    radius = 1
    while len(out) < count:
        cands = []
        for idx in np.ndindex(*([2 * radius + 1] * dim)):
            w = tuple(int(v) - radius for v in idx)
            # keep the shell at this max-norm, one representative per +-w
            if max(abs(v) for v in w) != radius or next(v for v in w if v) < 0:
                continue
            cands.append(w)
        cands.sort(key=lambda w: (sum(abs(v) for v in w), w))
        out.extend(cands)
        radius += 1
    return np.array(out[:count], dtype=float)


def enclosing_radius(*measures) -> float:
    """Largest Euclidean norm over the supports (1.0 if everything sits at 0)."""
    r = 0.0
    for m in measures:
        pts = m.support if isinstance(m, DiscreteMeasure) else as_points(m)
        r = max(r, float(np.max(np.linalg.norm(pts, axis=1))))
    return r if r > 0 else 1.0


def canonical_family(m: int, *measures) -> TestFamily:
    """Fourier family of size ``m`` with period twice the enclosing diameter.

    The lowest frequency then sees every support point within half a period
    of the origin, so opposite points are never aliased.
    """
    dims = {(x.dim if isinstance(x, DiscreteMeasure) else as_points(x).shape[1]) for x in measures}
    if len(dims) > 1:
        raise ValueError("measures live in different dimensions")
    dim = dims.pop() if dims else 1
    return TestFamily.fourier(m, 2.0 * enclosing_radius(*measures), dim)


def narrow_metric(gamma: DiscreteMeasure, nu: DiscreteMeasure, fam: TestFamily) -> float:
    """``sum_i 2**-i * min(|<g_i, gamma - nu>|, 1)``."""
    diff = np.abs(fam.moments(gamma) - fam.moments(nu))
    return float(np.dot(fam.weights, np.minimum(diff, 1.0)))


def separates(fam: TestFamily, support) -> bool:
    """Whether ``fam`` tells apart every pair of probability measures on ``support``.

    True when the test-function matrix stacked with a row of ones has full
    column rank.
    """
    G = fam.evaluate(support)
    A = np.vstack([G, np.ones(G.shape[1])])
    return int(np.linalg.matrix_rank(A)) == G.shape[1]
