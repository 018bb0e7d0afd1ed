"""Discrete optimal transport as the limit of entropic and penalized problems."""
__version__ = "0.1.0"

from .costs import (Contracted, CostMatrix, CramerClosed, CramerFamily, CramerNumeric, PowerP,
                    Quadratic, cost_matrix, eval_cost, parse_cost)
from .kernels import (ReferenceCoupling, build_reference_density, build_reference_gibbs,
                      build_reference_montecarlo, second_marginal)
from .legendre import GridFunction1D, conjugate_gamma_check, cramer_numeric, lft, moreau_yosida
from .measures import (Coupling, DiscreteMeasure, TestFamily, canonical_family, marginal0,
                       marginal1, narrow_metric, product_coupling)
from .noise import GibbsOf, IIDSum, PowerGaussian, ScaledGaussian
from .solvers import (InfeasibleError, PenaltyProblem, SolveReport, brute_force_coupling,
                      ctransform_s1, duality_gap, relative_entropy, solve_mk_1d_monotone,
                      solve_mk_alpha_lp, solve_mk_lp, solve_mkk_alpha, solve_tk_sinkhorn)

__all__ = [
    "Contracted", "CostMatrix", "Coupling", "CramerClosed", "CramerFamily", "CramerNumeric",
    "DiscreteMeasure", "GibbsOf", "GridFunction1D", "IIDSum", "InfeasibleError", "PenaltyProblem",
    "PowerGaussian", "PowerP", "Quadratic", "ReferenceCoupling", "ScaledGaussian", "SolveReport",
    "TestFamily", "brute_force_coupling", "build_reference_density", "build_reference_gibbs",
    "build_reference_montecarlo", "canonical_family", "conjugate_gamma_check", "cost_matrix",
    "cramer_numeric", "ctransform_s1", "duality_gap", "eval_cost", "lft", "marginal0",
    "marginal1", "moreau_yosida", "narrow_metric", "parse_cost", "product_coupling",
    "relative_entropy", "second_marginal", "solve_mk_1d_monotone", "solve_mk_alpha_lp",
    "solve_mk_lp", "solve_mkk_alpha", "solve_tk_sinkhorn",
]
