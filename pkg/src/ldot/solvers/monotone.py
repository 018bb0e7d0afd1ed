"""One-dimensional transport with a convex displacement cost: the quantile coupling."""
from __future__ import annotations

import numpy as np

from ..costs import CostSpec, eval_cost, is_convex_cost
from ..measures import Coupling, DiscreteMeasure
from .network_simplex import northwest_corner
from .report import SolveReport


def solve_mk_1d_monotone(mu: DiscreteMeasure, nu: DiscreteMeasure, spec: CostSpec) -> SolveReport:
    """Monotone (north-west on sorted supports) coupling and its cost.

    Optimal for any convex ``c(x1 - x0)``.  The duals are the tree potentials
    of the north-west basis; they are complementary to the plan but are not
    certified feasible and only serve as a hint.
    """
    if mu.dim != 1 or nu.dim != 1:
        raise ValueError("the monotone solver is one-dimensional")
    if not is_convex_cost(spec):
        raise ValueError("the monotone coupling is only optimal for convex costs")
    xs, ys = mu.support[:, 0], nu.support[:, 0]
    oi, oj = np.argsort(xs, kind="stable"), np.argsort(ys, kind="stable")
    flow, basis = northwest_corner(mu.weights[oi], nu.weights[oj])
    plan = np.zeros((len(mu), len(nu)))
    plan[np.ix_(oi, oj)] = flow
    C = np.asarray(eval_cost(spec, (ys[None, :] - xs[:, None])[..., None]), dtype=float)
    charged = plan > 0
    value = float(np.sum(C[charged] * plan[charged]))
    u = np.zeros(len(mu))
    v = np.zeros(len(nu))
    # basis cells follow a staircase, so a single forward pass sets the potentials
    for step, (i, j) in enumerate(basis):
        ii, jj = oi[i], oj[j]
        if step == 0:
            u[ii] = 0.0
            v[jj] = C[ii, jj]
        elif basis[step - 1][0] == i:
            v[jj] = C[ii, jj] - u[ii]
        else:
            u[ii] = C[ii, jj] - v[jj]
    return SolveReport(value, Coupling(mu.support, nu.support, plan), u, v, len(basis), 0.0, "optimal")
