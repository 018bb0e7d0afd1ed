"""Rescaled entropic transport ``T_k(nu) = min (1/k) H(rho | pi^k)`` over couplings of ``(mu, nu)``.

Iterative proportional fitting in the log domain: the plan is
``log rho = log pi + f_z + g_x`` and the two scalings are refitted in
turn so that rows sum to ``mu`` and columns to ``nu``.  For large ``k`` the
alternating updates contract slowly, so after ``NEWTON_AFTER`` sweeps the
column scaling is finished by damped Newton steps on the semi-dual.
"""
from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from ..kernels import ReferenceCoupling
from ..measures import Coupling, DiscreteMeasure
from .entropy import log_relative_entropy
from .network_simplex import check_feasible
from .report import InfeasibleError, SolveReport

NEWTON_AFTER = 500


def _log(w: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(w)


def marginal_weights(mu: DiscreteMeasure, nu: DiscreteMeasure, pi: ReferenceCoupling):
    """``mu`` and ``nu`` read on the supports of ``pi``; atoms off them make ``T_k`` infinite."""
    try:
        a = mu.reweighted_on(pi.mu.support)
    except ValueError:
        raise InfeasibleError("mu charges a point outside the source support of pi") from None
    try:
        b = nu.reweighted_on(pi.target_support)
    except ValueError:
        raise InfeasibleError("nu charges a point outside the target support of pi, "
                              "so T_k(nu) is infinite") from None
    return a, b


def tv_residuals(log_plan: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    plan = np.exp(log_plan)
    return (0.5 * float(np.abs(plan.sum(axis=1) - a).sum()),
            0.5 * float(np.abs(plan.sum(axis=0) - b).sum()))


def _semidual(log_pi, a, b, g):
    """Convex semi-dual ``sum_z a_z lse_z(log pi + g) - <g, b>`` with gradient and rows."""
    lw = log_pi + g[None, :]
    lz = logsumexp(lw, axis=1)
    r = np.exp(lw - lz[:, None])
    col = a @ r
    return float(a @ lz - g @ b), col - b, r


def _newton_columns(log_pi, a, b, g, tol, budget):
    """Damped Newton on the semi-dual over the charged rows and columns."""
    rows, cols = a > 0, b > 0
    lp = log_pi[np.ix_(rows, cols)]
    aa, bb, x = a[rows], b[cols], g[cols].copy()
    val, grad, r = _semidual(lp, aa, bb, x)
    tau, it = 1e-10, 0
    while 0.5 * np.abs(grad).sum() > tol and it < budget:
        it += 1
        H = np.diag(aa @ r) - (r * aa[:, None]).T @ r
        scale = max(1.0, float(np.max(np.diag(H))))
        for _ in range(60):
            d = -np.linalg.solve(H + tau * scale * np.eye(x.size), grad)
            nval, ngrad, nr = _semidual(lp, aa, bb, x + d)
            if nval <= val + 1e-4 * float(grad @ d) or np.abs(ngrad).sum() < 0.5 * np.abs(grad).sum():
                tau = max(tau / 4.0, 1e-14)
                break
            tau *= 4.0
        else:
            break
        x, val, grad, r = x + d, nval, ngrad, nr
    out = g.copy()
    out[cols] = x
    return out, it


def solve_tk_sinkhorn(mu: DiscreteMeasure, nu: DiscreteMeasure, pi: ReferenceCoupling,
                      tol: float = 1e-9, max_iters: int = 100_000, init=None) -> SolveReport:
    """Minimize ``(1/k) H(rho | pi)`` over couplings of ``mu`` and ``nu``.

    Stops when both marginal total-variation residuals are at most ``tol``
    (or after ``max_iters`` sweeps and Newton steps in total).
    ``init`` is an optional starting column scaling ``g`` (one log value per
    target atom); the optimum does not depend on it.  Raises
    :class:`InfeasibleError` when no coupling is absolutely continuous with
    respect to ``pi`` (then ``T_k`` is infinite).

    Duals are reported as ``f / k`` and ``g / k``; at convergence
    ``value = <dual_phi, mu> + <dual_psi, nu>`` up to the residual.
    """
    a, b = marginal_weights(mu, nu, pi)
    log_pi = pi.log_weights
    if not check_feasible(a, b, np.isfinite(log_pi)):
        raise InfeasibleError("no coupling of mu and nu is absolutely continuous "
                              "with respect to pi, so T_k(nu) is infinite")
    la, lb = _log(a), _log(b)
    g = np.zeros(b.size) if init is None else np.asarray(init, dtype=float).reshape(-1).copy()
    if g.size != b.size:
        raise ValueError("init must have one value per target atom")
    g = np.where(b > 0, g, -np.inf)
    it = 0
    res = np.inf
    while True:
        f = la - logsumexp(log_pi + g[None, :], axis=1)
        f = np.where(a > 0, f, -np.inf)
        it += 1
        log_plan = log_pi + f[:, None] + g[None, :]
        r_row, r_col = tv_residuals(log_plan, a, b)
        res = max(r_row, r_col)
        if res <= tol or it >= max_iters:
            break
        if it == NEWTON_AFTER:
            g, extra = _newton_columns(log_pi, a, b, g, tol, max_iters - it)
            it += extra
            continue
        g = lb - logsumexp(log_pi + f[:, None], axis=0)
        g = np.where(b > 0, g, -np.inf)
    log_plan = np.where(np.isfinite(log_plan), log_plan, -np.inf)
    plan = Coupling(pi.mu.support, pi.target_support, np.exp(log_plan))
    k = float(pi.k)
    value = log_relative_entropy(plan.weights, log_pi) / k
    term = "tolerance_reached" if res <= tol else "iteration_cap"
    return SolveReport(value, plan, f / k, g / k, it, res, term)
