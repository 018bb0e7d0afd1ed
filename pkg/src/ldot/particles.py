"""Triangular arrays of particles ``X = z_{n,i} + U^k_i``, their empirical measures, and LDP diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .kernels import build_reference_density, nearest_bin
from .measures import Coupling, DiscreteMeasure, TestFamily, as_points, locate
from .noise import (NoiseSpec, is_lattice, lattice_support, noise_dim, sample_block,
                    sample_noise)
from .rng import CounterStream

__all__ = ["SiteArray", "ParticleRun", "LdpEstimate", "quantile_sites", "iid_sites",
           "sample_noise", "simulate_run", "simulate_Nkn", "simulate_Mkn", "estimate_ldp_slope",
           "hit_counts", "minimize_rate_in_ball"]

SITE_TAG = 0x5157
MIN_HITS = 30


@dataclass(frozen=True, eq=False)
class SiteArray:
    n: int
    sites: np.ndarray
    generator: str

    def __post_init__(self):
        pts = as_points(self.sites)
        if pts.shape[0] != self.n:
            raise ValueError("sites must hold n points")
        pts.setflags(write=False)
        object.__setattr__(self, "sites", pts)

    def empirical(self) -> DiscreteMeasure:
        return DiscreteMeasure.empirical(self.sites)


def quantile_sites(mu: DiscreteMeasure, n: int) -> SiteArray:
    """``z_{n,i} = F^{-1}((i - 1/2) / n)`` for the CDF ``F`` of a 1D measure."""
    if mu.dim != 1:
        raise ValueError("quantile sites need a one-dimensional measure")
    if n < 1:
        raise ValueError("n must be positive")
    cdf = np.cumsum(mu.weights)
    q = (np.arange(n) + 0.5) / n
    idx = np.minimum(np.searchsorted(cdf, q - 1e-12, side="left"), len(mu) - 1)
    return SiteArray(n, mu.support[idx], "quantile1d")


def iid_sites(mu: DiscreteMeasure, n: int, seed: int) -> SiteArray:
    """``n`` i.i.d. draws from ``mu`` (the default in dimension above one)."""
    if n < 1:
        raise ValueError("n must be positive")
    u = CounterStream(seed, SITE_TAG).uniforms([0], n)[0]
    idx = np.minimum(np.searchsorted(np.cumsum(mu.weights), u, side="right"), len(mu) - 1)
    return SiteArray(n, mu.support[idx], f"seeded_iid({int(seed)})")


@dataclass(frozen=True, eq=False)
class ParticleRun:
    k: int
    n: int
    seed: int
    sites: np.ndarray
    endpoints: np.ndarray


def _canonical_sites(sites: SiteArray) -> np.ndarray:
    # noise index i goes to the i-th site in lexicographic order, so the
    # output depends on the multiset of sites and not on their listing
    pts = sites.sites
    order = np.lexsort(pts.T[::-1])
    return pts[order]


def simulate_run(sites: SiteArray, spec: NoiseSpec, k: int, seed: int, replicate: int = 0,
                 tag: int = 0) -> ParticleRun:
    """Endpoints ``z_{n,i} + U^k_i`` for one replicate."""
    if noise_dim(spec) != sites.sites.shape[1]:
        raise ValueError("noise and sites differ in dimension")
    z = _canonical_sites(sites)
    u = sample_noise(spec, k, sites.n, seed, tag=tag, replicate=replicate)
    return ParticleRun(int(k), sites.n, int(seed), z, z + u)


def simulate_Nkn(sites: SiteArray, spec: NoiseSpec, k: int, seed: int, replicate: int = 0,
                 tag: int = 0) -> DiscreteMeasure:
    """``N^k_n = (1/n) sum_i delta_{X_i}``."""
    return DiscreteMeasure.empirical(simulate_run(sites, spec, k, seed, replicate, tag).endpoints)


def simulate_Mkn(sites: SiteArray, spec: NoiseSpec, k: int, seed: int, target_support=None,
                 replicate: int = 0, tag: int = 0) -> Coupling:
    """``M^k_n = (1/n) sum_i delta_{(z_i, X_i)}`` as a coupling.

    Rows are the distinct sites.  Columns are the distinct endpoints, or
    ``target_support`` with endpoints binned to the nearest point.
    """
    run = simulate_run(sites, spec, k, seed, replicate, tag)
    src = np.unique(run.sites, axis=0)
    rows = locate(src, run.sites)
    if target_support is None:
        tgt, cols = np.unique(run.endpoints, axis=0, return_inverse=True)
        cols = cols.reshape(-1)
    else:
        tgt = as_points(target_support, src.shape[1])
        cols = nearest_bin(run.endpoints, tgt)
    w = np.zeros((src.shape[0], tgt.shape[0]))
    np.add.at(w, (rows, cols), 1.0 / run.n)
    return Coupling(src, tgt, w)


# --------------------------------------------------------------------------
# LDP diagnostics


def hit_counts(sites: SiteArray, spec: NoiseSpec, k: int, nu: DiscreteMeasure, delta: float,
               fam: TestFamily, seed: int, replicates, tag: int = 0,
               chunk: int = 4000) -> int:
    """How many of the listed replicates have ``d(N^k_n, nu) <= delta``.

    Vectorized over replicates; replicate ``r`` uses the same stream as
    ``simulate_Nkn(..., replicate=r, tag=tag)``.
    """
    reps = np.asarray(replicates, dtype=np.int64).reshape(-1)
    z = _canonical_sites(sites)
    target = fam.moments(nu)
    hits = 0
    for lo in range(0, reps.size, chunk):
        block = sample_block(spec, k, sites.n, seed, reps[lo:lo + chunk], tag)
        ends = (z[None, :, :] + block).reshape(-1, z.shape[1])
        G = fam.evaluate(ends)
        mom = G.reshape(G.shape[0], -1, sites.n).mean(axis=2)
        dist = np.minimum(np.abs(mom - target[:, None]), 1.0).T @ fam.weights
        hits += int(np.count_nonzero(dist <= delta))
    return hits


def _simplex_grid(n_atoms: int, lo: np.ndarray, hi: np.ndarray, steps: int) -> np.ndarray:
    axes = [np.linspace(lo[i], hi[i], steps + 1) for i in range(n_atoms - 1)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n_atoms - 1)
    last = 1.0 - mesh.sum(axis=1, keepdims=True)
    P = np.hstack([mesh, last])
    return P[np.all(P >= -1e-12, axis=1)].clip(min=0.0)


def minimize_rate_in_ball(mu: DiscreteMeasure, nu: DiscreteMeasure, spec: NoiseSpec, k: int,
                          delta: float, fam: TestFamily, support=None,
                          resolution: float = 1e-3, refine: int = 2):
    """``min T_k(gamma)`` over measures ``gamma`` on a small support with ``d(gamma, nu) <= delta``.

    ``support`` defaults to the lattice reachable from ``mu`` for lattice
    noise and to the support of ``nu`` otherwise; at most 4 points.  For a
    Dirac ``mu`` the rate has the closed form ``H(gamma | kappa) / k``;
    otherwise each grid point is solved by Sinkhorn on a coarser grid.
    Returns ``(nu_hat, T_k(nu_hat))``.
    """
    from .solvers.sinkhorn import solve_tk_sinkhorn
    from .solvers.report import InfeasibleError
    if support is None:
        if is_lattice(spec):
            lat = lattice_support(spec, k)
            support = np.unique((mu.support[:, 0][:, None] + lat[None, :]).ravel())
        else:
            support = nu.support
    supp = as_points(support, mu.dim)
    if supp.shape[0] > 4:
        raise ValueError("the rate minimization is restricted to supports of at most 4 points")
    pi = build_reference_density(mu, supp, spec, k)
    G = fam.evaluate(supp)
    target = fam.moments(nu)
    N = supp.shape[0]
    dirac = len(mu) == 1

    def rates(P):
        if dirac:
            lk = pi.log_rows[0]
            with np.errstate(divide="ignore", invalid="ignore"):
                h = np.sum(xlogy(P, P) - np.where(P > 0, P * lk[None, :], 0.0), axis=1)
            h = np.where(np.any((P > 0) & np.isinf(lk)[None, :], axis=1), np.inf, h)
            return h / k
        out = np.empty(P.shape[0])
        for i, p in enumerate(P):
            try:
                out[i] = solve_tk_sinkhorn(mu, DiscreteMeasure(supp, p), pi, tol=1e-10).value
            except InfeasibleError:
                out[i] = np.inf
        return out

    if N == 1:
        P = np.ones((1, 1))
        if np.minimum(np.abs(G @ P[0] - target), 1.0) @ fam.weights > delta:
            raise ValueError("the ball contains no measure on the given support")
        return DiscreteMeasure(supp, P[0]), float(rates(P)[0])
    step = resolution if dirac else max(resolution, 0.02)
    lo, hi = np.zeros(N - 1), np.ones(N - 1)
    best, best_p = np.inf, None
    for _ in range(refine + 1):
        steps = int(round((hi - lo).max() / step))
        P = _simplex_grid(N, lo, hi, max(steps, 1))
        inball = np.minimum(np.abs(P @ G.T - target[None, :]), 1.0) @ fam.weights <= delta
        P = P[inball]
        if P.shape[0]:
            r = rates(P)
            i = int(np.argmin(r))
            if r[i] < best:
                best, best_p = float(r[i]), P[i]
        if best_p is None:
            raise ValueError("the ball contains no measure on the grid; increase delta")
        lo = np.clip(best_p[:-1] - 2 * step, 0.0, 1.0)
        hi = np.clip(best_p[:-1] + 2 * step, 0.0, 1.0)
        step /= 10.0
    return DiscreteMeasure(supp, best_p), best


@dataclass
class LdpEstimate:
    center: DiscreteMeasure
    radius: float
    fam: TestFamily
    k: int
    n_values: list
    replicates: int
    hits: list
    log_prob_estimates: list
    stderr: list
    slope: float
    slope_stderr: float
    nu_hat: DiscreteMeasure
    reference_rate: float
    pilot_hits: int = 0
    reliable_points: list = field(default_factory=list)

    @property
    def reliable(self) -> bool:
        return all(self.reliable_points)

    @property
    def ratio(self) -> float:
        """``slope / (-k T_k(nu_hat))``; 1 means perfect agreement."""
        return self.slope / -self.reference_rate if self.reference_rate > 0 else np.nan

    @property
    def relative_error(self) -> float:
        return abs(self.ratio - 1.0)


def _ls_slope(ns: np.ndarray, logp: np.ndarray) -> float:
    keep = np.isfinite(logp)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(ns[keep], logp[keep], 1)[0])


def estimate_ldp_slope(mu: DiscreteMeasure, nu: DiscreteMeasure, spec: NoiseSpec, k: int,
                       n_values, replicates: int, delta: float, fam: TestFamily, seed: int,
                       pilot: int = 10_000, bootstrap: int = 400, support=None) -> LdpEstimate:
    """Estimate ``log P(d(N^k_n, nu) <= delta)`` for each ``n`` and fit a line in ``n``.

    Each ``n`` uses its own stream tag, so the estimates are independent.
    A pilot of ``pilot`` replicates at the largest ``n`` predicts the hit
    count; points with fewer than 30 hits are marked unreliable.  The slope's
    standard error is a parametric bootstrap over binomial hit counts.  The
    reference is ``k T_k(nu_hat)`` with ``nu_hat`` the rate minimizer in the
    ball (see :func:`minimize_rate_in_ball`).
    """
    ns = np.asarray(sorted(int(n) for n in n_values))
    if ns.size < 2:
        raise ValueError("need at least two values of n")
    if mu.dim != 1:
        raise ValueError("LDP diagnostics are one-dimensional")
    R = int(replicates)
    nmax = int(ns[-1])
    pilot_n = min(int(pilot), R)
    pilot_hits = hit_counts(quantile_sites(mu, nmax), spec, k, nu, delta, fam, seed,
                            np.arange(pilot_n), tag=nmax)
    hits, logp, se = [], [], []
    for n in ns:
        h = hit_counts(quantile_sites(mu, int(n)), spec, k, nu, delta, fam, seed, np.arange(R), tag=int(n))
        hits.append(h)
        p = h / R
        logp.append(float(np.log(p)) if h > 0 else float("-inf"))
        se.append(float(np.sqrt((1 - p) / (p * R))) if h > 0 else float("inf"))
    logp_arr = np.array(logp)
    slope = _ls_slope(ns, logp_arr)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xB007]))
    p_hat = np.array(hits) / R
    boot = rng.binomial(R, p_hat[None, :], size=(int(bootstrap), ns.size))
    with np.errstate(divide="ignore"):
        lb = np.log(boot / R)
    slopes = np.array([_ls_slope(ns, row) for row in lb])
    slope_se = float(np.nanstd(slopes, ddof=1)) if bootstrap > 1 else float("nan")
    nu_hat, tk = minimize_rate_in_ball(mu, nu, spec, k, delta, fam, support)
    return LdpEstimate(nu, float(delta), fam, int(k), [int(n) for n in ns], R, hits, logp, se,
                       slope, slope_se, nu_hat, float(k * tk), pilot_hits,
                       [h >= MIN_HITS for h in hits])
