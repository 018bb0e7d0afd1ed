"""Penalized transport: the second-marginal constraint replaced by ``alpha * d(rho_1, nu)``.

``solve_mk_alpha_lp`` handles the linear cost exactly as an epigraph LP.
``solve_mkk_alpha`` handles the entropic version

    min (1/k) H(rho | pi^k) + alpha * sum_i w_i |<g_i, rho_1 - nu>|   over rho_0 = mu.

Because ``|g_i| <= 1/2`` the clamp ``min(., 1)`` in the metric is never
active, so the objective is convex.  Writing each absolute value as
``max over |lambda_i| <= alpha w_i of lambda_i * (.)`` and minimizing row by
row gives the concave dual

    D(lambda) = -(1/k) sum_z mu_z log sum_x kappa_z(x) exp(-k h(x)) - <lambda, m_nu>,
    h = sum_i lambda_i g_i,

whose maximizer yields the unique primal rows ``kappa_z exp(-k h) / Z_z``.
The box-constrained dual is smooth and is solved by projected Newton.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.special import logsumexp

from ..costs import CostMatrix
from ..kernels import ReferenceCoupling
from ..measures import Coupling, DiscreteMeasure, TestFamily
from .entropy import log_relative_entropy
from .report import InfeasibleError, SolveReport


@dataclass(frozen=True, eq=False)
class PenaltyProblem:
    alpha: float
    fam: TestFamily
    target: DiscreteMeasure

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError("alpha must be finite and nonnegative")

    @property
    def bounds(self) -> np.ndarray:
        """Box half-widths ``alpha * w_i`` for the dual variables."""
        return self.alpha * self.fam.weights

    def penalty(self, gamma_weights, support) -> float:
        """``alpha * d(gamma, nu)`` for ``gamma`` given by weights on ``support``."""
        G = self.fam.evaluate(support)
        diff = np.abs(G @ np.asarray(gamma_weights, dtype=float) - self.fam.moments(self.target))
        return float(self.alpha * np.dot(self.fam.weights, np.minimum(diff, 1.0)))


def _check_target(nu: DiscreteMeasure, pen: PenaltyProblem):
    if nu is not pen.target and not nu.allclose(pen.target):
        raise ValueError("nu differs from the penalty target")


def linear_objective(plan: np.ndarray, C: CostMatrix, pen: PenaltyProblem) -> float:
    """``<C, rho> + alpha d(rho_1, nu)`` with ``0 * inf = 0``."""
    cost = C.integrate(plan)
    return float(cost + pen.penalty(plan.sum(axis=0), C.target_support))


def solve_mk_alpha_lp(mu: DiscreteMeasure, nu: DiscreteMeasure, C: CostMatrix,
                      pen: PenaltyProblem) -> SolveReport:
    """Exact optimum of ``min <C, rho> + alpha d(rho_1, nu)`` over ``rho_0 = mu``.

    Auxiliary ``t_i >= |<g_i, rho_1 - nu>|`` turn the penalty into linear
    constraints; the LP is solved by HiGHS.  ``dual_phi`` are the row
    multipliers and ``dual_psi(x) = sum_i g_i(x) y_i`` collects the penalty
    multipliers, so ``phi_z + psi_x <= C_zx`` on finite cells.
    ``residual`` is the largest row-marginal violation.
    """
    _check_target(nu, pen)
    m, n = C.shape
    if m != len(mu):
        raise ValueError("cost matrix rows do not match mu")
    finite = C.finite
    if not finite.any(axis=1).all():
        raise InfeasibleError("some source atom has infinite cost to every target")
    G = pen.fam.evaluate(C.target_support)
    M = G.shape[0]
    mom = pen.fam.moments(pen.target)
    cvec = np.concatenate([np.where(finite, C.values, 0.0).ravel(), pen.bounds])
    A_eq = np.hstack([np.kron(np.eye(m), np.ones(n)), np.zeros((m, M))])
    Gx = np.tile(G, (1, m))  # <g_i, rho_1> as a row over the flattened plan
    A_ub = np.vstack([np.hstack([Gx, -np.eye(M)]), np.hstack([-Gx, -np.eye(M)])])
    b_ub = np.concatenate([mom, -mom])
    bounds = [(0.0, None if f else 0.0) for f in finite.ravel()] + [(0.0, None)] * M
    res = linprog(cvec, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=mu.weights, bounds=bounds,
                  method="highs", options={"primal_feasibility_tolerance": 1e-10,
                                           "dual_feasibility_tolerance": 1e-10})
    if res.status == 2:
        raise InfeasibleError(res.message)
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    x = np.maximum(res.x[:m * n].reshape(m, n), 0.0)
    plan = Coupling(mu.support, C.target_support, x)
    w = plan.weights
    value = linear_objective(w, C, pen)
    phi = np.asarray(res.eqlin.marginals)
    y = np.asarray(res.ineqlin.marginals)
    psi = G.T @ (y[:M] - y[M:])
    resid = float(np.max(np.abs(w.sum(axis=1) - mu.weights)))
    return SolveReport(value, plan, phi, psi, int(res.nit), resid, "optimal")


# --------------------------------------------------------------------------
# entropic version


class _Dual:
    """Value, gradient and Hessian of the negated dual ``-D(lambda)``."""

    def __init__(self, mu_w, log_kappa, G, mom, k):
        self.mu_w, self.log_kappa, self.G, self.mom, self.k = mu_w, log_kappa, G, mom, float(k)

    def rows(self, lam):
        h = lam @ self.G
        lw = self.log_kappa - self.k * h[None, :]
        lz = logsumexp(lw, axis=1)
        return lw - lz[:, None], lz

    def value(self, lam):
        _, lz = self.rows(lam)
        return float(np.dot(self.mu_w, lz) / self.k + np.dot(lam, self.mom))

    def grad_hess(self, lam):
        log_r, lz = self.rows(lam)
        r = np.exp(log_r)
        Er = r @ self.G.T  # (Z, M) row expectations of each g_i
        col = self.mu_w @ r
        grad = self.mom - self.G @ col
        second = np.einsum("z,zx,ix,jx->ij", self.mu_w, r, self.G, self.G)
        hess = self.k * (second - Er.T @ (self.mu_w[:, None] * Er))
        val = float(np.dot(self.mu_w, lz) / self.k + np.dot(lam, self.mom))
        return val, grad, hess, log_r


def _projected_grad(lam, grad, ub):
    pg = grad.copy()
    pg[(lam <= -ub) & (grad > 0)] = 0.0
    pg[(lam >= ub) & (grad < 0)] = 0.0
    return pg


def _projected_newton(dual: _Dual, lam, ub, tol, max_iters):
    """Minimize ``-D`` on the box ``|lam| <= ub``.

    Projected Newton (Bertsekas) on the free variables with Levenberg-Marquardt
    damping: where the rows have concentrated and the Hessian vanishes, the
    damping grows and the step turns into a short projected gradient step.
    """
    it = 0
    tau = 0.0
    while True:
        val, grad, hess, _ = dual.grad_hess(lam)
        pg = _projected_grad(lam, grad, ub)
        pg_norm = float(np.max(np.abs(pg))) if pg.size else 0.0
        if pg_norm <= tol or it >= max_iters:
            return lam, it, pg_norm
        it += 1
        eps = min(1e-8, pg_norm)
        act = ((lam <= -ub + eps) & (grad > 0)) | ((lam >= ub - eps) & (grad < 0))
        free = ~act
        Hf = hess[np.ix_(free, free)]
        floor = 1e-14 * max(1.0, float(np.max(np.abs(np.diag(Hf)), initial=0.0)))
        for _ in range(200):
            d = -grad.copy()
            if free.any():
                d[free] = -np.linalg.solve(Hf + max(tau, floor) * np.eye(Hf.shape[0]), grad[free])
            new = np.clip(lam + d, -ub, ub)
            if dual.value(new) <= val - 1e-4 * float(np.dot(grad, lam - new)):
                tau /= 4.0
                break
            tau = max(4.0 * tau, 1e-12)
        else:
            return lam, it, pg_norm
        lam = new


def entropic_objective(log_rows: np.ndarray, mu_w: np.ndarray, pi: ReferenceCoupling,
                       pen: PenaltyProblem) -> float:
    """``(1/k) H(rho | pi) + alpha d(rho_1, nu)`` for ``rho = mu_z * rows``."""
    rows = np.exp(log_rows)
    plan = mu_w[:, None] * rows
    ent = log_relative_entropy(plan, pi.log_weights) / pi.k
    return float(ent + pen.penalty(plan.sum(axis=0), pi.target_support))


def solve_mkk_alpha(mu: DiscreteMeasure, nu: DiscreteMeasure, pi: ReferenceCoupling,
                    pen: PenaltyProblem, tol: float = 1e-11, max_iters: int = 500,
                    seed: int | None = None, method: str = "dual", init=None) -> SolveReport:
    """Minimize ``(1/k) H(rho | pi) + alpha d(rho_1, nu)`` over ``rho_0 = mu``.

    ``method="dual"`` (default) maximizes the smooth box-constrained dual by
    projected Newton and stops when the projected gradient is below ``tol``;
    the residual is that norm.  ``dual_psi`` holds the dual penalty
    potential ``-h``.  ``seed`` or ``init`` choose the starting dual point
    (random in the box when a seed is given, zero otherwise).

    ``method="mirror"`` runs averaged entropic mirror descent on the
    conditional rows with steps ``1 / ((alpha + 1) sqrt(t))`` for
    ``max_iters`` iterations, linearizing only the penalty, and returns the
    best averaged or last iterate; it is a slow independent cross-check.
    """
    _check_target(nu, pen)
    try:
        a = mu.reweighted_on(pi.mu.support)
    except ValueError:
        raise InfeasibleError("mu charges a point outside the source support of pi") from None
    if np.any((a > 0) & (pi.mu.weights <= 0)):
        raise InfeasibleError("mu is not absolutely continuous with respect to the first marginal of pi")
    G = pen.fam.evaluate(pi.target_support)
    mom = pen.fam.moments(pen.target)
    ub = pen.bounds
    log_kappa = np.asarray(pi.log_rows)
    if method == "mirror":
        return _mirror(a, log_kappa, G, mom, ub, pi, pen, max_iters, tol, seed)
    if method != "dual":
        raise ValueError(f"unknown method {method!r}")
    dual = _Dual(a, log_kappa, G, mom, pi.k)
    if init is not None:
        lam0 = np.clip(np.asarray(init, dtype=float).reshape(-1), -ub, ub)
    elif seed is not None:
        lam0 = np.random.default_rng(seed).uniform(-1.0, 1.0, ub.size) * ub
    else:
        lam0 = np.zeros(ub.size)
    lam, it, pg = _projected_newton(dual, lam0, ub, tol, max_iters)
    log_r, _ = dual.rows(lam)
    plan = Coupling(pi.mu.support, pi.target_support, a[:, None] * np.exp(log_r))
    value = entropic_objective(log_r, a, pi, pen)
    phi = -logsumexp(log_kappa - pi.k * (lam @ G)[None, :], axis=1) / pi.k
    term = "tolerance_reached" if pg <= tol else "iteration_cap"
    return SolveReport(value, plan, phi, -(lam @ G), it, pg, term)


def _mirror(a, log_kappa, G, mom, ub, pi, pen, max_iters, tol, seed):
    k = float(pi.k)
    eta0 = 1.0 / (pen.alpha + 1.0)
    log_r = log_kappa.copy()
    if seed is not None:
        noise = np.random.default_rng(seed).uniform(-1.0, 1.0, log_r.shape)
        log_r = np.where(np.isfinite(log_r), log_r + noise, -np.inf)
        log_r -= logsumexp(log_r, axis=1, keepdims=True)
    avg = np.zeros_like(log_r)
    weight = 0.0
    best, best_rows = np.inf, log_r
    finite = np.isfinite(log_kappa)
    for t in range(1, max_iters + 1):
        col = a @ np.exp(log_r)
        s = np.sign(G @ col - mom)
        eta = eta0 / np.sqrt(t)
        # linearize the penalty, keep the KL term exact (entropic prox step)
        step = (log_r + (eta / k) * log_kappa - eta * ((ub * s) @ G)[None, :]) / (1.0 + eta / k)
        log_r = np.where(finite, step, -np.inf)
        log_r -= logsumexp(log_r, axis=1, keepdims=True)
        avg = (weight * avg + eta * np.exp(log_r)) / (weight + eta)
        weight += eta
        with np.errstate(divide="ignore"):
            lavg = np.log(avg)
        for cand in (lavg, log_r):
            val = entropic_objective(cand, a, pi, pen)
            if val < best:
                best, best_rows = val, cand
    plan = Coupling(pi.mu.support, pi.target_support, a[:, None] * np.exp(best_rows))
    nz = np.zeros(len(a)), np.zeros(G.shape[1])
    return SolveReport(best, plan, nz[0], nz[1], max_iters, float("nan"), "iteration_cap")
