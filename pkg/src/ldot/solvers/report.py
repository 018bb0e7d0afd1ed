"""Common result type for every solver."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..measures import Coupling

TERMINATIONS = ("optimal", "tolerance_reached", "iteration_cap")


class InfeasibleError(ValueError):
    """No plan with finite objective exists (all-infinite row, unreachable target, ...)."""


@dataclass(frozen=True, eq=False)
class SolveReport:
    """Outcome of a solve.

    ``residual`` is solver specific: the largest marginal violation for the
    exact and entropic solvers, the dual projected-gradient norm for the
    penalized entropic solver and the LP's primal infeasibility otherwise.
    """

    value: float
    plan: Coupling
    dual_phi: np.ndarray
    dual_psi: np.ndarray
    iterations: int
    residual: float
    termination: str

    def __post_init__(self):
        if self.termination not in TERMINATIONS:
            raise ValueError(f"termination must be one of {TERMINATIONS}")
        for name in ("dual_phi", "dual_psi"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def converged(self) -> bool:
        return self.termination != "iteration_cap"
