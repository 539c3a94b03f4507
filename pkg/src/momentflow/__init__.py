"""Entire solutions of linear moment differential systems ``d_m y = A y``.

The usual path is decompose -> fundamental_system -> solve_cauchy ->
eval_solution, with oracle_eval as the independent series check and the
growth module for order, type, indicators and decay sectors.
"""

from .errors import *  # noqa: F401,F403
from .growth import (
    BoundFit,
    GrowthReport,
    decay_sectors,
    estimate_order,
    estimate_type,
    fit_global_bound,
    growth_report,
    indicator_sample,
    solution_indicator_bound,
    stability_classify,
    theoretical_indicator,
)
from .kernel import (
    EvalResult,
    TruncatedSeries,
    check_delta_recursion,
    delta_coefficients,
    eval_delta_h,
    eval_E,
    eval_E_precise,
    kernel_series,
    moment_derivative,
)
from .moments import MomentFamily, associated_M, check_strongly_regular, log_moments
from .solver import (
    CauchySolution,
    FundamentalSolution,
    SolutionTerm,
    eval_solution,
    fundamental_system,
    oracle_eval,
    residual_check,
    solve_cauchy,
)
from .spectral import JordanDecomposition, decompose, eigenvalues, jordan_chains

__version__ = "0.1.0"
