"""Limit experiments: T_k -> T, recovery sequences, the alpha/k double limit, minimizer traces.

Every experiment takes an :class:`Instance` and a schedule and returns plain
rows.  Wall-clock time is only recorded when asked for, so that tables are
reproducible byte for byte.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from . import _toml
from .costs import CostSpec, CramerFamily, cost_from_dict, cost_matrix, parse_cost
from .kernels import ReferenceCoupling, build_reference_density, build_reference_gibbs
from .measures import DiscreteMeasure, TestFamily, canonical_family, narrow_metric, separates
from .noise import (GibbsOf, IIDSum, NoiseSpec, PowerGaussian, ScaledGaussian, is_lattice,
                    lattice_support, noise_for_cost)
from .solvers import (PenaltyProblem, solve_mk_alpha_lp, solve_mk_lp, solve_mkk_alpha,
                      solve_tk_sinkhorn)

DEFAULT_KS = [2 ** i for i in range(11)]
DEFAULT_ALPHAS = [2 ** i for i in range(7)]


@dataclass(frozen=True, eq=False)
class Instance:
    mu: DiscreteMeasure
    nu: DiscreteMeasure
    cost: CostSpec
    fam: TestFamily
    kernel_mode: str = "gibbs"
    noise: NoiseSpec | None = None

    def __post_init__(self):
        if self.mu.dim != self.nu.dim:
            raise ValueError("mu and nu live in different dimensions")
        if self.kernel_mode not in ("gibbs", "density"):
            raise ValueError("kernel_mode must be gibbs or density")
        if self.noise is None:
            object.__setattr__(self, "noise", noise_for_cost(self.cost, self.mu.dim))

    def target_grid(self, k: int) -> np.ndarray:
        """Support of ``pi^k``: the lattice reachable from ``mu`` for lattice
        noise in density mode, otherwise the union of the two supports."""
        if self.kernel_mode == "density" and is_lattice(self.noise):
            lat = lattice_support(self.noise, k)
            return np.unique((self.mu.support[:, 0][:, None] + lat[None, :]).ravel())[:, None]
        return np.unique(np.vstack([self.mu.support, self.nu.support]), axis=0)

    def kernel(self, k: int, target=None) -> ReferenceCoupling:
        grid = self.target_grid(k) if target is None else target
        if self.kernel_mode == "gibbs":
            return build_reference_gibbs(self.mu, grid, self.cost, k)
        return build_reference_density(self.mu, grid, self.noise, k)

    def transport_cost(self) -> float:
        """``T(nu)`` from the exact LP."""
        return solve_mk_lp(self.mu, self.nu, cost_matrix(self.cost, self.mu, self.nu)).value


@dataclass(frozen=True)
class SweepRow:
    k: int
    alpha: float
    value: float
    gap_to_limit: float
    iterations: int
    seconds: float = math.nan
    gap_mk: float = math.nan


class _Clock:
    def __init__(self, on: bool):
        self.on = on

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0 if self.on else math.nan


def gamma_sweep(inst: Instance, ks, tol: float = 1e-9, timing: bool = False) -> list[SweepRow]:
    """``T_k(nu)`` along ``ks`` with the gap ``T_k(nu) - T(nu)``."""
    T = inst.transport_cost()
    rows = []
    for k in sorted(int(k) for k in ks):
        with _Clock(timing) as clk:
            rep = solve_tk_sinkhorn(inst.mu, inst.nu, inst.kernel(k), tol=tol)
        rows.append(SweepRow(k, math.nan, rep.value, rep.value - T, rep.iterations, clk.seconds))
    return rows


# --------------------------------------------------------------------------
# recovery sequences


@dataclass(frozen=True, eq=False)
class RecoveryRow:
    k: int
    nu_k: DiscreteMeasure
    value: float
    distance: float


def tilt_to_mean(log_row: np.ndarray, grid: np.ndarray, x: float) -> np.ndarray:
    """Exponential tilt ``kappa(y) e^{theta y} / Z`` of a 1D row with mean ``x``."""
    live = np.isfinite(log_row)
    lo, hi = grid[live].min(), grid[live].max()
    out = np.zeros_like(grid)
    if x <= lo or x >= hi:
        if not (lo - 1e-12 <= x <= hi + 1e-12):
            raise ValueError("target mean outside the support of the row")
        out[np.flatnonzero(live & (grid == (lo if x <= (lo + hi) / 2 else hi)))[0]] = 1.0
        return out

    def weights(theta):
        lw = np.where(live, log_row + theta * grid, -np.inf)
        return np.exp(lw - logsumexp(lw))

    def gap(theta):
        return float(weights(theta) @ grid) - x

    span = 1.0
    while gap(-span) > 0 or gap(span) < 0:
        span *= 2.0
        if span > 1e12:
            raise RuntimeError("tilt did not bracket the target mean")
    theta = brentq(gap, -span, span, xtol=1e-14, rtol=1e-14, maxiter=500)
    return weights(theta)


def _full_support(inst: Instance, pi: ReferenceCoupling) -> bool:
    try:
        inst.nu.reweighted_on(pi.target_support)
    except ValueError:
        return False
    return bool(np.all(np.isfinite(pi.log_rows)))


def recovery_sequence(inst: Instance, ks, tol: float = 1e-9) -> list[RecoveryRow]:
    """A sequence ``nu_k -> nu`` with ``T_k(nu_k) -> T(nu)``.

    For kernels charging every target point, ``nu_k = nu``.  Otherwise (1D
    lattice noise) each cell ``(z, x)`` of an optimal plan for ``T(nu)`` is
    replaced by the row ``kappa_z`` tilted to have mean ``x``, and ``nu_k``
    is the resulting second marginal.
    """
    C = cost_matrix(inst.cost, inst.mu, inst.nu)
    plan = solve_mk_lp(inst.mu, inst.nu, C).plan.weights
    rows = []
    for k in sorted(int(k) for k in ks):
        pi = inst.kernel(k)
        if _full_support(inst, pi):
            nu_k = inst.nu
        else:
            if inst.mu.dim != 1:
                raise ValueError("tilted recovery sequences are one-dimensional")
            grid = pi.target_support[:, 0]
            w = np.zeros(grid.size)
            for i, j in zip(*np.nonzero(plan > 0)):
                w += plan[i, j] * tilt_to_mean(pi.log_rows[i], grid, float(inst.nu.support[j, 0]))
            nu_k = DiscreteMeasure(grid, w / w.sum())
        rep = solve_tk_sinkhorn(inst.mu, nu_k, pi, tol=tol)
        rows.append(RecoveryRow(k, nu_k, rep.value, narrow_metric(nu_k, inst.nu, inst.fam)))
    return rows


# --------------------------------------------------------------------------
# penalized problems


def _check_rank(inst: Instance, grid) -> None:
    if not separates(inst.fam, grid):
        raise ValueError("the test family does not separate measures on the target grid; "
                         "use more test functions")


def double_limit(inst: Instance, ks, alphas, tol: float = 1e-11,
                 timing: bool = False) -> list[SweepRow]:
    """``MK_k^alpha`` values over the grid ``ks x alphas``.

    ``gap_to_limit`` is the inner gap ``value - MK^alpha`` and ``gap_mk`` the
    outer gap ``value - T(nu)``.  Rows are sorted by ``(k, alpha)``.
    """
    T = inst.transport_cost()
    ks = sorted(int(k) for k in ks)
    alphas = sorted(float(a) for a in alphas)
    grid0 = inst.target_grid(ks[0]) if ks else inst.nu.support
    _check_rank(inst, grid0)
    lp = {}
    rows = []
    for k in ks:
        pi = inst.kernel(k)
        _check_rank(inst, pi.target_support)
        C = cost_matrix(inst.cost, inst.mu, pi.target_support)
        for a in alphas:
            pen = PenaltyProblem(a, inst.fam, inst.nu)
            key = (a, pi.target_support.tobytes())
            if key not in lp:
                lp[key] = solve_mk_alpha_lp(inst.mu, inst.nu, C, pen).value
            with _Clock(timing) as clk:
                rep = solve_mkk_alpha(inst.mu, inst.nu, pi, pen, tol=tol)
            rows.append(SweepRow(k, a, rep.value, rep.value - lp[key], rep.iterations,
                                 clk.seconds, rep.value - T))
    return rows


@dataclass(frozen=True)
class TraceRow:
    k: int
    distance: float
    value_gap: float
    objective_gap: float


def minimizer_trace(inst: Instance, ks, alpha: float, tol: float = 1e-11,
                    support_threshold: float = 1e-9) -> list[TraceRow]:
    """How far ``rho_k^alpha`` is from the solutions of ``MK^alpha`` along ``ks``.

    ``distance`` is the entrywise max distance to the LP solution HiGHS
    returns (exact when that solution is unique).  ``value_gap`` is the
    increase of the LP optimum when the plan is forced onto the cells where
    ``rho_k^alpha`` has mass above ``support_threshold``; it is zero iff
    that support still holds an optimal plan.  ``objective_gap`` is the
    linear objective of ``rho_k^alpha`` minus the LP optimum.
    """
    from .solvers.penalized import linear_objective
    rows = []
    for k in sorted(int(k) for k in ks):
        pi = inst.kernel(k)
        _check_rank(inst, pi.target_support)
        pen = PenaltyProblem(float(alpha), inst.fam, inst.nu)
        C = cost_matrix(inst.cost, inst.mu, pi.target_support)
        best = solve_mk_alpha_lp(inst.mu, inst.nu, C, pen)
        rho = solve_mkk_alpha(inst.mu, inst.nu, pi, pen, tol=tol).plan.weights
        forced = type(C)(C.source_support, C.target_support,
                         np.where(rho > support_threshold, C.values, np.inf))
        try:
            restricted = solve_mk_alpha_lp(inst.mu, inst.nu, forced, pen).value
        except ValueError:
            restricted = math.inf
        rows.append(TraceRow(k, float(np.max(np.abs(rho - best.plan.weights))),
                             restricted - best.value, linear_objective(rho, C, pen) - best.value))
    return rows


# --------------------------------------------------------------------------
# configuration files


@dataclass
class Config:
    raw: bytes
    data: dict
    base: Path = field(default_factory=Path)

    @classmethod
    def load(cls, path) -> "Config":
        path = Path(path)
        raw = path.read_bytes()
        return cls(raw, _toml.loads(raw.decode("utf-8")), path.parent)

    @property
    def seed(self) -> int:
        return int(self.data.get("seed", 0))


def _grid_spec(text: str) -> np.ndarray:
    a, b, n = text.split(":")
    return np.linspace(float(a), float(b), int(n))


def measure_from_config(d: dict, base: Path = Path(".")) -> DiscreteMeasure:
    """``{support, weights}``, ``{grid = "a:b:n", weights}`` or ``{file}``."""
    if "file" in d:
        from .io import read_measure
        return read_measure(base / d["file"])
    if "grid" in d:
        pts = _grid_spec(d["grid"])
    elif "support" in d:
        pts = np.asarray(d["support"], dtype=float)
    else:
        raise ValueError("measure needs support, grid or file")
    w = d.get("weights", "uniform")
    if isinstance(w, str):
        if w != "uniform":
            raise ValueError(f"unknown weights {w!r}")
        return DiscreteMeasure.uniform(pts)
    w = np.asarray(w, dtype=float)
    return DiscreteMeasure(pts, w / w.sum() if d.get("normalize", False) else w)


def noise_from_config(d: dict | None, cost: CostSpec, dim: int) -> NoiseSpec:
    if not d:
        return noise_for_cost(cost, dim)
    kind = str(d.get("kind", "")).lower()
    if kind in ("scaled_gaussian", "gaussian"):
        return ScaledGaussian(int(d.get("dim", dim)))
    if kind == "iid_sum":
        return IIDSum(CramerFamily(d["family"], float(d.get("a", 1.0)), float(d.get("b", 0.0))))
    if kind == "power_gaussian":
        return PowerGaussian(float(d["p"]), int(d.get("dim", dim)))
    if kind == "gibbs":
        return GibbsOf(cost)
    raise ValueError(f"unknown noise kind {kind!r}")


def cost_from_config(value) -> CostSpec:
    if isinstance(value, str):
        return parse_cost(value)
    return cost_from_dict(value)


def instance_from_config(cfg: Config) -> Instance:
    d = cfg.data
    for key in ("mu", "nu", "cost"):
        if key not in d:
            raise ValueError(f"config misses [{key}]")
    mu = measure_from_config(d["mu"], cfg.base)
    nu = measure_from_config(d["nu"], cfg.base)
    cost = cost_from_config(d["cost"])
    kern = d.get("kernel", {})
    noise = noise_from_config(kern.get("noise"), cost, mu.dim)
    m = int(d.get("family", {}).get("m", 8))
    fam = canonical_family(m, mu, nu)
    return Instance(mu, nu, cost, fam, kern.get("mode", "gibbs"), noise)


def schedule_from_config(cfg: Config) -> dict:
    s = cfg.data.get("schedule", {})
    return {"ks": [int(k) for k in s.get("ks", DEFAULT_KS)],
            "alphas": [float(a) for a in s.get("alphas", DEFAULT_ALPHAS)],
            "tol": float(s.get("tol", 1e-9)),
            "timing": bool(s.get("timing", False))}
