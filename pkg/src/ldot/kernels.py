"""Reference couplings ``pi^k(dz dx) = mu(dz) kappa^k_z(dx)`` on finite supports.

Rows are kept as log-probabilities so that large ``k`` never underflows a
whole row; ``rows`` exponentiates on demand.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .costs import CostSpec, cost_matrix
from .measures import Coupling, DiscreteMeasure, as_points, marginal1
from .noise import GibbsOf, NoiseSpec, sample_block

MODES = ("gibbs", "density", "montecarlo")


@dataclass(frozen=True, eq=False)
class ReferenceCoupling:
    mu: DiscreteMeasure
    target_support: np.ndarray
    log_rows: np.ndarray
    k: int
    mode: str

    def __post_init__(self):
        tgt = as_points(self.target_support, self.mu.dim)
        lr = np.asarray(self.log_rows, dtype=float)
        if lr.shape != (len(self.mu), tgt.shape[0]):
            raise ValueError("log_rows must have one row per atom of mu and one column per target")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        sums = np.exp(logsumexp(lr, axis=1))
        if np.any(np.abs(sums - 1.0) > 1e-12):
            raise ValueError("kernel rows must be probability vectors")
        tgt.setflags(write=False)
        lr.setflags(write=False)
        object.__setattr__(self, "target_support", tgt)
        object.__setattr__(self, "log_rows", lr)

    @property
    def rows(self) -> np.ndarray:
        return np.exp(self.log_rows)

    @property
    def log_weights(self) -> np.ndarray:
        """``log(mu_z * kappa_z(x))``."""
        with np.errstate(divide="ignore"):
            return np.log(self.mu.weights)[:, None] + self.log_rows

    def coupling(self) -> Coupling:
        return Coupling(self.mu.support, self.target_support,
                        self.mu.weights[:, None] * self.rows)


def _normalize(log_w: np.ndarray, what: str) -> np.ndarray:
    norm = logsumexp(log_w, axis=1, keepdims=True)
    if np.any(~np.isfinite(norm)):
        bad = int(np.flatnonzero(~np.isfinite(norm[:, 0]))[0])
        raise ValueError(f"{what}: row {bad} has no admissible target")
    out = log_w - norm
    # one more pass pins row sums to 1 at the last ulp
    return out - logsumexp(out, axis=1, keepdims=True)


def build_reference_gibbs(mu: DiscreteMeasure, target, cost: CostSpec, k: int) -> ReferenceCoupling:
    """Rows ``kappa_z(x) = exp(-k c(x - z)) / Z_k(z)``; infinite costs get weight 0."""
    C = cost_matrix(cost, mu.support, target)
    with np.errstate(invalid="ignore"):
        log_w = np.where(C.finite, -float(k) * C.values, -np.inf)
    return ReferenceCoupling(mu, C.target_support, _normalize(log_w, "Gibbs kernel"), int(k), "gibbs")


def build_reference_density(mu: DiscreteMeasure, target, noise: NoiseSpec, k: int) -> ReferenceCoupling:
    """Rows proportional to the density (or lattice mass) of ``U^k`` at ``x - z``.

    The density is evaluated at the target points and renormalized per row.
    Lattice laws need a target set containing their lattice around each
    source atom; points off the lattice get weight 0.
    """
    from .noise import log_density
    if isinstance(noise, GibbsOf):
        ref = build_reference_gibbs(mu, target, noise.cost, k)
        return ReferenceCoupling(ref.mu, ref.target_support, ref.log_rows, ref.k, "density")
    tgt = as_points(target, mu.dim)
    disp = tgt[None, :, :] - mu.support[:, None, :]
    log_w = log_density(noise, int(k), disp)
    return ReferenceCoupling(mu, tgt, _normalize(log_w, "density kernel (target off the noise lattice?)"),
                             int(k), "density")


def nearest_bin(points: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Index of the nearest grid point for each point (lowest index on ties)."""
    pts = as_points(points)
    grid = as_points(grid, pts.shape[1])
    if pts.shape[1] == 1:
        g = grid[:, 0]
        order = np.argsort(g, kind="stable")
        gs = g[order]
        x = pts[:, 0]
        pos = np.clip(np.searchsorted(gs, x), 1, gs.size - 1) if gs.size > 1 else np.zeros(x.size, int)
        if gs.size == 1:
            return np.zeros(x.size, dtype=int)
        left, right = gs[pos - 1], gs[pos]
        pick = np.where(x - left <= right - x, pos - 1, pos)
        return order[pick]
    out = np.empty(pts.shape[0], dtype=int)
    for lo in range(0, pts.shape[0], 4096):
        d2 = np.sum((pts[lo:lo + 4096, None, :] - grid[None, :, :]) ** 2, axis=-1)
        out[lo:lo + 4096] = np.argmin(d2, axis=1)
    return out


MC_TAG = 0x4B52  # stream tag reserved for Monte Carlo kernels


def build_reference_montecarlo(mu: DiscreteMeasure, target_binning, noise: NoiseSpec, k: int,
                               n_samples: int, seed: int) -> ReferenceCoupling:
    """Rows are histograms of ``n_samples`` draws of ``z + U^k`` binned to the nearest target.

    Row ``i`` reads replicate ``i`` of the counter stream, so rows are
    independent and reproducible from ``seed``.  Empty bins get weight 0.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    tgt = as_points(target_binning, mu.dim)
    counts = np.zeros((len(mu), tgt.shape[0]))
    for i, z in enumerate(mu.support):
        draws = sample_block(noise, int(k), int(n_samples), seed, [i], tag=MC_TAG)[0]
        idx = nearest_bin(z[None, :] + draws, tgt)
        counts[i] = np.bincount(idx, minlength=tgt.shape[0])
    with np.errstate(divide="ignore"):
        log_rows = np.log(counts) - np.log(float(n_samples))
    return ReferenceCoupling(mu, tgt, _normalize(log_rows, "Monte Carlo kernel"), int(k), "montecarlo")


def second_marginal(pi: ReferenceCoupling) -> DiscreteMeasure:
    return marginal1(pi.coupling())
