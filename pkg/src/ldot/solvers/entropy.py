"""Relative entropy on finite supports and the identities built on it."""
from __future__ import annotations

import numpy as np
from scipy.special import logsumexp, xlogy

from ..measures import Coupling


def _weights(x) -> np.ndarray:
    return np.asarray(x.weights if isinstance(x, Coupling) else x, dtype=float)


def relative_entropy(rho, pi) -> float:
    """``H(rho|pi) = sum rho log(rho/pi)``; ``+inf`` unless ``rho << pi``.

    Accepts two couplings on the same supports or two weight arrays of the
    same shape.
    """
    if isinstance(rho, Coupling) and isinstance(pi, Coupling):
        if not (np.array_equal(rho.source_support, pi.source_support)
                and np.array_equal(rho.target_support, pi.target_support)):
            raise ValueError("relative entropy needs couplings on the same supports")
    r, p = _weights(rho), _weights(pi)
    if r.shape != p.shape:
        raise ValueError("shape mismatch")
    if np.any((r > 0) & (p <= 0)):
        return float(np.inf)
    pos = r > 0
    return float(np.sum(xlogy(r[pos], r[pos]) - r[pos] * np.log(p[pos])))


def log_relative_entropy(r: np.ndarray, log_p: np.ndarray) -> float:
    """Same as :func:`relative_entropy` with ``pi`` given by its logarithm."""
    r = np.asarray(r, dtype=float)
    pos = r > 0
    if np.any(np.isneginf(log_p[pos])):
        return float(np.inf)
    return float(np.sum(xlogy(r[pos], r[pos]) - r[pos] * log_p[pos]))


def variational_objective(f, q, p) -> float:
    """``<f, Q> - log <e^f, P>``; its maximum over ``f`` is ``H(Q|P)``."""
    f, q, p = (np.asarray(a, dtype=float).reshape(-1) for a in (f, q, p))
    keep = p > 0
    with np.errstate(divide="ignore"):
        lse = logsumexp(f[keep] + np.log(p[keep]))
    return float(np.dot(np.where(q > 0, f, 0.0), q) - lse)


def entropy_maximizer(q, p) -> np.ndarray:
    """The attaining ``f = log(Q/P)`` on the support of ``Q`` (``Q << P`` required)."""
    q, p = np.asarray(q, dtype=float).reshape(-1), np.asarray(p, dtype=float).reshape(-1)
    if np.any((q > 0) & (p <= 0)):
        raise ValueError("Q is not absolutely continuous with respect to P")
    out = np.full(q.shape, -1e300)
    pos = q > 0
    out[pos] = np.log(q[pos] / p[pos])
    return out


def inf_compact_objective(f, q, J) -> float:
    """``<f, Q> - max_x (f(x) - J(x))``; maximized at ``f = J`` with value ``<J, Q>``."""
    f, q, J = (np.asarray(a, dtype=float).reshape(-1) for a in (f, q, J))
    return float(np.dot(f, q) - np.max(f - J))


def tensorized_entropy(rho, pi) -> tuple[float, float]:
    """Split ``H(rho|pi)`` into first-marginal and conditional parts.

    Returns ``(H(rho_0|pi_0), sum_z rho_0(z) H(rho_z|pi_z))``; their sum is
    ``H(rho|pi)``.
    """
    r, p = _weights(rho), _weights(pi)
    r0, p0 = r.sum(axis=1), p.sum(axis=1)
    first = relative_entropy(r0, p0)
    cond = 0.0
    for z in np.flatnonzero(r0 > 0):
        cond += r0[z] * relative_entropy(r[z] / r0[z], p[z] / p0[z])
    return first, float(cond)
