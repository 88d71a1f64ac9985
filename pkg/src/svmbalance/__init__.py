"""Covariate balancing with the soft-margin classifier dual.

The dual weights of a two-class max-margin classifier double as bounded
covariate-balancing weights: the quadratic term of the dual objective is
the squared kernel discrepancy between the weighted treated and control
samples, and the linear term rewards effective sample size. This package
solves the dual and its variants, traces the exact regularization path as
a balance/sample-size frontier, compares against the integer-constrained
largest balanced subset, and estimates average treatment effects with
variance and bias diagnostics.
"""

__version__ = "0.1.0"

from .balance import (BalanceReport, balance_report, coverage, ess_kish,
                      normed_diff_in_means, sdim, weighted_mmd)
from .data import (Dataset, ValidationReport, WeightVector, load_csv,
                   make_dataset, normalize_simplex, validate)
from .errors import (DataValidationError, InfeasibleCriterionError, PathError,
                     SolverError, SvmBalanceError)
from .estimation import (EffectEstimate, conditional_bias,
                         conditional_bias_outcome_form, effect_estimate,
                         estimate, neyman_se, satt_weights, worst_case_bias)
from .frontier import (FrontierPoint, build_frontier, kneedle_elbow, select,
                       write_frontier_csv)
from .kernels import (KernelSpec, QMatrix, build_q, design_matrix, gram,
                      median_heuristic, polynomial_expand, q_matrix,
                      standardize)
from .path import (RegularizationPath, compute_path, margin_system,
                   solution_at)
from .qip import QipSolution, qip_objective, solve_qip_exact, solve_qip_heuristic
from .simulate import (MonteCarloSpec, SimTruth, gen_sim_a, gen_sim_b,
                       run_monte_carlo, summarize_monte_carlo)
from .solvers import (DualSolution, KktReport, kkt_report, solve_dual,
                      solve_init, solve_l2_dual, solve_mmd_min)

__all__ = [
    "BalanceReport", "Dataset", "DualSolution", "EffectEstimate",
    "FrontierPoint", "KernelSpec", "KktReport", "MonteCarloSpec", "QMatrix",
    "QipSolution", "RegularizationPath", "SimTruth", "ValidationReport",
    "WeightVector",
    "balance_report", "build_frontier", "build_q", "conditional_bias",
    "conditional_bias_outcome_form", "compute_path", "coverage",
    "design_matrix", "effect_estimate", "ess_kish", "estimate", "gen_sim_a",
    "gen_sim_b", "gram", "kkt_report", "kneedle_elbow", "load_csv",
    "make_dataset", "margin_system", "median_heuristic",
    "normed_diff_in_means", "normalize_simplex", "neyman_se",
    "polynomial_expand", "q_matrix", "qip_objective", "run_monte_carlo",
    "satt_weights", "sdim", "select", "solution_at", "solve_dual",
    "solve_init", "solve_l2_dual", "solve_mmd_min", "solve_qip_exact",
    "solve_qip_heuristic", "standardize", "summarize_monte_carlo", "validate",
    "weighted_mmd", "worst_case_bias", "write_frontier_csv",
    "DataValidationError", "InfeasibleCriterionError", "PathError",
    "SolverError", "SvmBalanceError",
]
