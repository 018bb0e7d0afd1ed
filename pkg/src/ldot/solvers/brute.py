"""Exhaustive grid search over small coupling polytopes (a test oracle)."""
from __future__ import annotations

import itertools

import numpy as np

from ..measures import DiscreteMeasure

MAX_FREE = 4
MAX_GRID = 50_000_000
_CHUNK = 200_000


def _axis(lo: float, hi: float, resolution: float) -> np.ndarray:
    if hi < lo:
        return np.zeros(0)
    steps = max(1, int(np.ceil((hi - lo) / resolution - 1e-9)))
    return np.linspace(lo, hi, steps + 1)


def _coupling_plans(a, b, axes, block):
    """Plans whose free block is the product grid of ``axes``; yields feasible chunks."""
    m, n = a.size, b.size
    sizes = [ax.size for ax in axes]
    total = int(np.prod(sizes))
    for lo in range(0, total, _CHUNK):
        idx = np.unravel_index(np.arange(lo, min(total, lo + _CHUNK)), sizes)
        vals = np.stack([ax[i] for ax, i in zip(axes, idx)], axis=1)
        P = np.zeros((vals.shape[0], m, n))
        for c, (i, j) in enumerate(block):
            P[:, i, j] = vals[:, c]
        P[:, :m - 1, n - 1] = a[None, :m - 1] - P[:, :m - 1, :n - 1].sum(axis=2)
        P[:, m - 1, :n - 1] = b[None, :n - 1] - P[:, :m - 1, :n - 1].sum(axis=1)
        P[:, m - 1, n - 1] = 1.0 - P[:, :m - 1, :n - 1].sum(axis=(1, 2)) \
            - P[:, :m - 1, n - 1].sum(axis=1) - P[:, m - 1, :n - 1].sum(axis=1)
        ok = np.all(P >= -1e-12, axis=(1, 2))
        yield np.maximum(P[ok], 0.0)


def _row_plans(a, n, axes):
    """Plans ``a_z * r_z`` with each row ``r_z`` on the simplex grid."""
    m = a.size
    sizes = [ax.size for ax in axes]
    total = int(np.prod(sizes))
    for lo in range(0, total, _CHUNK):
        idx = np.unravel_index(np.arange(lo, min(total, lo + _CHUNK)), sizes)
        vals = np.stack([ax[i] for ax, i in zip(axes, idx)], axis=1).reshape(-1, m, n - 1)
        last = 1.0 - vals.sum(axis=2, keepdims=True)
        R = np.concatenate([vals, last], axis=2)
        ok = np.all(R >= -1e-12, axis=(1, 2))
        yield a[None, :, None] * np.maximum(R[ok], 0.0)


def _search(gen_factory, objective, axes):
    best, best_plan = np.inf, None
    for P in gen_factory(axes):
        if P.shape[0] == 0:
            continue
        vals = np.asarray(objective(P), dtype=float)
        vals = np.where(np.isnan(vals), np.inf, vals)
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, best_plan = float(vals[i]), P[i]
    return best, best_plan


def brute_force_coupling(mu: DiscreteMeasure, nu: DiscreteMeasure | None, objective,
                         resolution: float = 1e-3, refine: int = 0, return_plan: bool = False):
    """Minimize ``objective`` over a grid of plans.

    With ``nu`` given, the plans are couplings of ``mu`` and ``nu``; the
    free entries are the top-left ``(m-1) x (n-1)`` block.  With
    ``nu=None`` only the first marginal is fixed and each row is a point of
    the simplex over ``n = objective.n_targets`` atoms (``objective`` must
    expose that attribute).  ``objective`` receives a stack of plans of shape
    ``(G, m, n)`` and returns ``G`` values.

    ``refine`` zooms ``refine`` times into a ``+-2`` cell window around the
    incumbent with a ten times finer grid.  At most four free parameters.
    """
    a = mu.weights
    m = a.size
    if nu is not None:
        b = nu.weights
        n = b.size
        block = list(itertools.product(range(m - 1), range(n - 1)))
        free = len(block)
        box = [(0.0, min(a[i], b[j])) for i, j in block]
        if m == 2 and n == 2:
            box = [(max(0.0, a[0] + b[0] - 1.0), min(a[0], b[0]))]

        def factory(axes):
            return _coupling_plans(a, b, axes, block)
    else:
        n = int(getattr(objective, "n_targets", 0))
        if n < 1:
            raise ValueError("with nu=None the objective must define n_targets")
        free = m * (n - 1)
        box = [(0.0, 1.0)] * free

        def factory(axes):
            return _row_plans(a, n, axes)
    if free > MAX_FREE:
        raise ValueError(f"{free} free parameters exceed the cap of {MAX_FREE}")
    if free == 0:
        # a single feasible plan
        axes = []
        P = np.outer(a, nu.weights)[None] if nu is not None else a[None, :, None] * np.ones((1, m, 1))
        val = float(np.asarray(objective(P))[0])
        if not np.isfinite(val):
            raise ValueError("the constraint set contains no point with finite objective")
        return (val, P[0]) if return_plan else val
    axes = [_axis(lo, hi, resolution) for lo, hi in box]
    if any(ax.size == 0 for ax in axes):
        raise ValueError("empty constraint set")
    if int(np.prod([ax.size for ax in axes])) > MAX_GRID:
        raise ValueError("grid too large; raise the resolution")
    best, plan = _search(factory, objective, axes)
    step = resolution
    for _ in range(refine):
        if plan is None:
            break
        centre = plan[:m - 1, :n - 1].ravel() if nu is not None else (plan[:, :n - 1] / a[:, None]).ravel()
        axes = [_axis(max(lo, c - 2 * step), min(hi, c + 2 * step), step / 10)
                for (lo, hi), c in zip(box, centre)]
        step /= 10
        val, cand = _search(factory, objective, axes)
        if val < best:
            best, plan = val, cand
    if plan is None or not np.isfinite(best):
        raise ValueError("the constraint set contains no point with finite objective")
    return (best, plan) if return_plan else best
