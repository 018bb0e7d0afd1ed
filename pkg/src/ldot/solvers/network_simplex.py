"""Exact transport by the transportation simplex, plus the c-transform and duality gap.

The basis is a spanning tree on the bipartite graph of ``m`` row nodes and
``n`` column nodes (``m + n - 1`` basic cells).  Each iteration recomputes the
potentials ``u_i + v_j = C_ij`` on the tree, picks an entering cell with
negative reduced cost, pushes flow around the unique cycle, and drops the
lowest-index blocking cell.  The entering cell is the most negative one
after a pivot that moved flow and the lowest flat index (Bland's rule)
after a degenerate pivot; cycling can only occur through degenerate
pivots, so this keeps Bland's guarantee without its slow progress.
"""
from __future__ import annotations

from collections import deque

import numpy as np

from ..costs import CostMatrix
from ..measures import Coupling, DiscreteMeasure
from .report import InfeasibleError, SolveReport

MAX_PIVOTS = 1_000_000


def northwest_corner(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Initial basic feasible solution; degenerate steps keep a zero basic cell."""
    m, n = a.size, b.size
    ra, rb = a.astype(float).copy(), b.astype(float).copy()
    x = np.zeros((m, n))
    basis = []
    i = j = 0
    while i < m and j < n:
        t = min(ra[i], rb[j])
        if i == m - 1 and j == n - 1:
            t = ra[i]  # absorbs round-off between the two totals
        x[i, j] = t
        basis.append((i, j))
        ra[i] -= t
        rb[j] -= t
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif ra[i] == 0.0:
            i += 1
        else:
            j += 1
    return x, basis


class _Tree:
    def __init__(self, m: int, n: int, basis):
        self.m, self.n = m, n
        self.adj = [set() for _ in range(m + n)]
        for i, j in basis:
            self.add(i, j)

    def add(self, i, j):
        self.adj[i].add(self.m + j)
        self.adj[self.m + j].add(i)

    def remove(self, i, j):
        self.adj[i].discard(self.m + j)
        self.adj[self.m + j].discard(i)

    def cells(self):
        return [(i, j - self.m) for i in range(self.m) for j in self.adj[i]]

    def walk(self, C: np.ndarray):
        """Potentials plus BFS parent/depth arrays rooted at row 0."""
        m, n = self.m, self.n
        pot = np.zeros(m + n)
        parent = np.full(m + n, -1)
        depth = np.zeros(m + n, dtype=int)
        seen = np.zeros(m + n, dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            a = queue.popleft()
            for b in self.adj[a]:
                if not seen[b]:
                    seen[b] = True
                    parent[b] = a
                    depth[b] = depth[a] + 1
                    # u_i + v_j = C_ij along every tree edge
                    i, j = (a, b - m) if a < m else (b, a - m)
                    pot[b] = C[i, j] - pot[a]
                    queue.append(b)
        if not seen.all():
            raise RuntimeError("basis is not a spanning tree")
        return pot[:m], pot[m:], parent, depth

    def path(self, parent, depth, s, t):
        """Node path s -> t through the tree."""
        left, right = [s], [t]
        while left[-1] != right[-1]:
            if depth[left[-1]] >= depth[right[-1]]:
                left.append(parent[left[-1]])
            else:
                right.append(parent[right[-1]])
        return left + right[-2::-1]


def _transport_simplex(a, b, C, max_pivots=MAX_PIVOTS):
    """Core solver on finite costs. Returns (x, u, v, pivots, optimal)."""
    m, n = C.shape
    x, basis = northwest_corner(a, b)
    tree = _Tree(m, n, basis)
    scale = max(1.0, float(np.max(np.abs(C))))
    eps = 1e-12 * scale
    pivots = 0
    bland = False
    while True:
        u, v, parent, depth = tree.walk(C)
        red = C - u[:, None] - v[None, :]
        neg = red.ravel() < -eps
        if not neg.any():
            return x, u, v, pivots, True
        if pivots >= max_pivots:
            return x, u, v, pivots, False
        flat = int(np.argmax(neg)) if bland else int(np.argmin(red))
        ei, ej = divmod(flat, n)
        # cycle: entering cell (+), then alternate along the tree path col ej -> row ei
        nodes = tree.path(parent, depth, m + ej, ei)
        cells = []
        for p, q in zip(nodes[:-1], nodes[1:]):
            cells.append((p, q - m) if p < m else (q, p - m))
        minus = cells[0::2]
        plus = cells[1::2]
        theta = min(x[c] for c in minus)
        leave = min((c for c in minus if x[c] == theta), key=lambda c: c[0] * n + c[1])
        for c in minus:
            x[c] -= theta
        for c in plus:
            x[c] += theta
        x[ei, ej] += theta
        x[leave] = 0.0
        bland = theta == 0.0
        tree.remove(*leave)
        tree.add(ei, ej)
        pivots += 1


def _big_m_costs(C: np.ndarray, finite: np.ndarray, M: float) -> np.ndarray:
    return np.where(finite, C, M)


def check_feasible(a: np.ndarray, b: np.ndarray, finite: np.ndarray) -> bool:
    """Does a plan supported on the finite cells exist?  (phase-1 with 0/1 costs)."""
    if finite.all():
        return True
    if not finite.any(axis=1).all() or not finite.any(axis=0).all():
        return False
    x, *_ = _transport_simplex(a, b, np.where(finite, 0.0, 1.0))
    return float(x[~finite].sum()) <= 1e-12


def solve_mk_lp(mu: DiscreteMeasure, nu: DiscreteMeasure, C: CostMatrix,
                max_pivots: int = MAX_PIVOTS) -> SolveReport:
    """Monge-Kantorovich problem ``min <C, rho>`` over couplings of ``mu`` and ``nu``.

    Infinite cells are priced at a large finite ``M`` after a phase-1 check
    has shown that a finite plan exists; ``M`` grows until no flow uses them.
    ``residual`` is the largest marginal violation of the returned plan.
    """
    if C.shape != (len(mu), len(nu)):
        raise ValueError("cost matrix shape does not match the measures")
    a, b = mu.weights, nu.weights
    finite = C.finite
    if not check_feasible(a, b, finite):
        raise InfeasibleError("no coupling of mu and nu has finite cost")
    if finite.all():
        costs = C.values
    else:
        fv = C.values[finite]
        M = 1.0 + (float(fv.max() - fv.min()) + 1.0) * (len(mu) + len(nu))
        costs = _big_m_costs(C.values, finite, M)
    for _ in range(60):
        x, u, v, pivots, optimal = _transport_simplex(a, b, costs, max_pivots)
        if finite.all() or x[~finite].sum() == 0.0 or not optimal:
            break
        M *= 16.0
        costs = _big_m_costs(C.values, finite, M)
    x = np.where(finite, np.maximum(x, 0.0), 0.0)
    plan = Coupling(mu.support, nu.support, x)
    w = plan.weights
    value = float(np.sum(np.where(w > 0, C.values, 0.0) * w))
    resid = max(float(np.max(np.abs(w.sum(axis=1) - a))), float(np.max(np.abs(w.sum(axis=0) - b))))
    shift = float(u[0])
    return SolveReport(value, plan, u - shift, v + shift, pivots, resid,
                       "optimal" if optimal else "iteration_cap")


def ctransform_s1(f, C: CostMatrix) -> np.ndarray:
    """``S_1 f(z) = min_j (C[z, j] + f[j])``, ties to the lowest index."""
    f = np.asarray(f, dtype=float).reshape(-1)
    if f.size != C.shape[1]:
        raise ValueError("f must have one value per target atom")
    if not np.all(np.isfinite(f)):
        raise ValueError("f must be finite")
    return np.min(C.values + f[None, :], axis=1)


def dual_value(f, mu: DiscreteMeasure, nu: DiscreteMeasure, C: CostMatrix) -> float:
    """``int S_1 f dmu - int f dnu``, a lower bound on the transport cost for every ``f``."""
    f = np.asarray(f, dtype=float).reshape(-1)
    return float(np.dot(mu.weights, ctransform_s1(f, C)) - np.dot(nu.weights, f))


def duality_gap(report: SolveReport, mu: DiscreteMeasure, nu: DiscreteMeasure, C: CostMatrix) -> float:
    """Primal value minus the dual value at ``f = -dual_psi`` (clipped at 0)."""
    return max(0.0, report.value - dual_value(-report.dual_psi, mu, nu, C))


def coupling_dual_value(g, rho: Coupling, mu: DiscreteMeasure, C: CostMatrix) -> float:
    """``int S_01 g dmu - int g drho`` with ``S_01 g(z) = min_x (C[z, x] + g[z, x])``.

    For ``rho`` with first marginal ``mu`` this never exceeds ``<C, rho>`` and
    equals it at ``g = -C``.
    """
    g = np.asarray(g, dtype=float)
    with np.errstate(invalid="ignore"):
        s = np.where(C.finite, C.values + g, np.inf).min(axis=1)
        s = np.where(np.isnan(s), 0.0, s)
    w = rho.weights
    return float(np.dot(mu.weights, s) - np.sum(np.where(w > 0, g * w, 0.0)))
