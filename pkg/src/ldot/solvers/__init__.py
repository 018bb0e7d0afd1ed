"""Exact, entropic and penalized transport solvers on finite supports."""
from .brute import brute_force_coupling
from .entropy import (entropy_maximizer, inf_compact_objective, relative_entropy,
                      tensorized_entropy, variational_objective)
from .monotone import solve_mk_1d_monotone
from .network_simplex import (coupling_dual_value, ctransform_s1, dual_value, duality_gap,
                              solve_mk_lp)
from .penalized import PenaltyProblem, solve_mk_alpha_lp, solve_mkk_alpha
from .report import InfeasibleError, SolveReport
from .sinkhorn import solve_tk_sinkhorn

__all__ = [
    "InfeasibleError", "PenaltyProblem", "SolveReport", "brute_force_coupling",
    "coupling_dual_value", "ctransform_s1", "dual_value", "duality_gap", "entropy_maximizer",
    "inf_compact_objective", "relative_entropy", "solve_mk_1d_monotone", "solve_mk_alpha_lp",
    "solve_mk_lp", "solve_mkk_alpha", "solve_tk_sinkhorn", "tensorized_entropy",
    "variational_objective",
]
