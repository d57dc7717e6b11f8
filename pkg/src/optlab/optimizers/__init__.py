"""Iteration rules: gradient descent, momentum, SGD schedules, CG, secant, LM, adaptive."""

from .state import OptimizerState, Trace, TRACE_COLUMNS
from .momentum import (
    gd_step,
    heavy_ball_step,
    heavy_ball_two_line,
    friction_to_flat,
    nesterov_step,
    gamma_recursion,
    solve_gamma,
    general_schema_init,
    nesterov_general_schema_step,
    dynamic_init,
    nesterov_dynamic_step,
    optimal_nesterov_init,
    gamma_product,
    nesterov_gap_bound,
    run_gd,
    run_heavy_ball,
    run_nesterov,
    run_dynamic_nesterov,
    run_general_schema,
)
from .schedules import Schedule, schedule_lr, piecewise_r, LearningRates, optimal_quadratic_phase
from .sgd import EnsembleResult, sgd_run, averaged_sgd_run
from .cg import cg_run, conjugacy_residuals
from .secant import (
    CurvatureError,
    secant_update,
    bfgs_inverse_update,
    dfp_inverse_update,
    lbfgs_apply,
    LBFGSMemory,
    quasi_newton_run,
)
from .lm import lm_step, cg_solve
from .adaptive import adaptive_step, run_adaptive, VARIANTS as ADAPTIVE_VARIANTS

__all__ = [name for name in dir() if not name.startswith("_")]
