"""Discrete Legendre-Fenchel transforms and related 1D numerics.

Everything here acts on :class:`GridFunction1D`, a function sampled on a
strictly increasing grid and allowed to take the value ``+inf``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

INF = np.inf


@dataclass(frozen=True, eq=False)
class GridFunction1D:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.grid, dtype=float).reshape(-1)
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if y.shape != v.shape:
            raise ValueError("grid and values differ in length")
        if y.size == 0 or not np.all(np.isfinite(y)):
            raise ValueError("grid must be nonempty and finite")
        if np.any(np.diff(y) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(np.isnan(v)) or np.any(v == -INF):
            raise ValueError("values must be finite or +inf")
        if not np.any(np.isfinite(v)):
            raise ValueError("at least one value must be finite")
        y.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "grid", y)
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, fn, grid) -> "GridFunction1D":
        grid = np.asarray(grid, dtype=float)
        with np.errstate(all="ignore"):
            vals = np.asarray(fn(grid), dtype=float)
        vals = np.where(np.isnan(vals), INF, vals)
        return cls(grid, vals)

    def __len__(self):
        return self.grid.size

    def finite(self) -> tuple[np.ndarray, np.ndarray]:
        keep = np.isfinite(self.values)
        return self.grid[keep], self.values[keep]

    def __call__(self, x) -> np.ndarray:
        """Piecewise-linear interpolation on the finite part, ``+inf`` outside."""
        y, v = self.finite()
        x = np.asarray(x, dtype=float)
        out = np.interp(x, y, v)
        return np.where((x < y[0]) | (x > y[-1]), INF, out)


def slopes(f: GridFunction1D) -> np.ndarray:
    """Consecutive difference quotients over the finite samples."""
    y, v = f.finite()
    return np.diff(v) / np.diff(y)


def slope_range(f: GridFunction1D) -> tuple[float, float]:
    """Smallest and largest discrete slope of the finite samples."""
    s = slopes(f)
    if s.size == 0:
        return (-INF, INF)
    return float(s.min()), float(s.max())


def is_convex(f: GridFunction1D, tol: float = 1e-12) -> bool:
    """Discrete convexity: finite part contiguous, slopes nondecreasing."""
    keep = np.isfinite(f.values)
    idx = np.flatnonzero(keep)
    if idx.size and idx[-1] - idx[0] + 1 != idx.size:
        return False
    s = slopes(f)
    scale = max(1.0, float(np.max(np.abs(s)))) if s.size else 1.0
    return bool(np.all(np.diff(s) >= -tol * scale))


def lft(f: GridFunction1D, dual_grid, method: str = "direct") -> GridFunction1D:
    """Discrete convex conjugate ``f*(x) = max_j (x * y_j - f(y_j))``.

    ``method="direct"`` scans every (x, y) pair and is the reference.
    ``method="envelope"`` walks the lower convex hull of the samples with a
    monotone pointer, linear in the two grid sizes.
    """
    x = np.asarray(dual_grid, dtype=float).reshape(-1)
    return GridFunction1D(x, conjugate_values(f, x, method))


def conjugate_values(f: GridFunction1D, x, method: str = "direct") -> np.ndarray:
    """Values of the discrete conjugate at arbitrary (unsorted) points ``x``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y, v = f.finite()
    if method == "direct":
        out = np.empty_like(x)
        step = max(1, 4_000_000 // max(1, y.size))
        for lo in range(0, x.size, step):
            xs = x[lo:lo + step]
            out[lo:lo + step] = np.max(xs[:, None] * y[None, :] - v[None, :], axis=1)
        return out
    if method == "envelope":
        return _lft_envelope(y, v, x)
    raise ValueError(f"unknown method {method!r}")


def _lower_hull(y: np.ndarray, v: np.ndarray) -> np.ndarray:
    hull: list[int] = []
    for j in range(y.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it lies on or above the chord a -> j
            if (v[b] - v[a]) * (y[j] - y[a]) >= (v[j] - v[a]) * (y[b] - y[a]):
                hull.pop()
            else:
                break
        hull.append(j)
    return np.array(hull, dtype=int)


def _lft_envelope(y: np.ndarray, v: np.ndarray, x: np.ndarray) -> np.ndarray:
    hull = _lower_hull(y, v)
    hy, hv = y[hull], v[hull]
    order = np.argsort(x, kind="stable")
    out = np.empty_like(x)
    p = 0
    last = hull.size - 1
    for i in order:
        xi = x[i]
        while p < last and xi * hy[p + 1] - hv[p + 1] >= xi * hy[p] - hv[p]:
            p += 1
        out[i] = xi * hy[p] - hv[p]
    return out


def cramer_numeric(log_mgf: GridFunction1D, u_grid, method: str = "direct") -> GridFunction1D:
    """Cramer transform ``sup_z {z u - log E e^{zY}}`` from sampled log-MGF values.

    Points of ``u_grid`` outside the open range of discrete slopes of the
    log-MGF samples get ``+inf``: there the grid supremum sits on the
    boundary and only reflects where the sampling stopped.  Round-off
    negatives are clipped to zero, since a Cramer transform is nonnegative.
    """
    if not np.all(np.isfinite(log_mgf.values)):
        raise ValueError("log-MGF samples must be finite on their grid")
    out = lft(log_mgf, u_grid, method=method)
    lo, hi = slope_range(log_mgf)
    u = out.grid
    vals = np.where((u > lo) & (u < hi), out.values, INF)
    s = slopes(log_mgf)
    h = float(np.max(np.diff(log_mgf.grid))) if len(log_mgf) > 1 else 0.0
    bound = 0.25 * h * float(np.max(np.diff(s), initial=0.0)) + 1e-12
    vals = np.where((vals < 0) & (vals > -bound), 0.0, vals)
    return GridFunction1D(u, vals)


def moreau_yosida(f: GridFunction1D, n: float, method: str = "sweep") -> GridFunction1D:
    """Upper Lipschitz regularization ``F_n(x) = max_j (f(y_j) - n |x - y_j|)``.

    Evaluated on the grid of ``f``.  ``method="sweep"`` uses two running
    maxima (left-to-right and right-to-left); ``method="direct"`` is the
    quadratic scan used as its oracle.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    y, v = f.grid, f.values
    if not np.all(np.isfinite(v)):
        raise ValueError("Moreau-Yosida regularization needs a function bounded above")
    if method == "direct":
        out = np.max(v[None, :] - n * np.abs(y[:, None] - y[None, :]), axis=1)
    elif method == "sweep":
        left = np.maximum.accumulate(v + n * y) - n * y
        right = (np.maximum.accumulate((v - n * y)[::-1]) + n * y[::-1])[::-1]
        out = np.maximum(np.maximum(left, right), v)
    else:
        raise ValueError(f"unknown method {method!r}")
    return GridFunction1D(y, out)


@dataclass
class ConjugateReport:
    """Outcome of :func:`conjugate_gamma_check`."""

    convex: list[bool]
    linear_bound: float
    bound_ok: bool
    pointwise_gaps: np.ndarray
    pointwise_ok: bool
    probes: np.ndarray
    interior: np.ndarray
    conjugates: np.ndarray
    limit_conjugate: np.ndarray
    pointwise_flags: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def ok(self) -> bool:
        return (all(self.convex) and self.bound_ok and self.pointwise_ok
                and bool(np.all(self.pointwise_flags[self.interior])))


def conjugate_gamma_check(gs, g_limit: GridFunction1D, probes, tol: float = 0.1,
                          method: str = "direct") -> ConjugateReport:
    """Check the hypotheses and conclusion of convergence of convex conjugates.

    For a sequence ``g_n -> g`` of convex functions sampled on a common grid:

    * ``linear_bound`` is the smallest ``c`` with ``|g_n(y)| <= c (1 + |y|)``
      over all samples, uniformly in ``n``; ``bound_ok`` says it is finite.
    * ``pointwise_gaps[n]`` is ``max_y |g_n(y) - g(y)|``; they must not grow.
    * at each probe interior to the limit conjugate's domain, the gaps
      ``|g_n*(x) - g*(x)|`` must not grow and must end below ``tol``.

    Non-convex inputs are reported in ``convex`` and make ``ok`` false.
    """
    gs = list(gs)
    if not gs:
        raise ValueError("need at least one g_n")
    for g in gs:
        if g.grid.shape != g_limit.grid.shape or not np.array_equal(g.grid, g_limit.grid):
            raise ValueError("all g_n must share the grid of the limit")
        if not np.all(np.isfinite(g.values)):
            raise ValueError("g_n must be real-valued on the grid")
    y = g_limit.grid
    convex = [is_convex(g) for g in gs + [g_limit]]
    stacked = np.vstack([g.values for g in gs])
    c = float(np.max(np.abs(stacked) / (1.0 + np.abs(y))))
    bound_ok = bool(np.isfinite(c))
    pgaps = np.max(np.abs(stacked - g_limit.values[None, :]), axis=1)
    pointwise_ok = bool(np.all(np.diff(pgaps) <= 1e-12))

    probes = np.asarray(probes, dtype=float).reshape(-1)
    lo, hi = slope_range(g_limit)
    interior = (probes > lo) & (probes < hi)
    fstack = np.vstack([conjugate_values(g, probes, method) for g in gs])
    flim = conjugate_values(g_limit, probes, method)
    cgaps = np.abs(fstack - flim[None, :])
    flags = np.all(np.diff(cgaps, axis=0) <= 1e-12, axis=0) & (cgaps[-1] <= tol) & interior
    return ConjugateReport(convex, c, bound_ok, pgaps, pointwise_ok, probes, interior,
                           fstack, flim, flags)
