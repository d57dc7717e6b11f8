"""Experiment runner, rate estimation and bound audits."""

from .audits import *  # noqa: F401,F403
from .audits import __all__ as _audits_all
from .config import ExperimentConfig, build_problem, config_hash, load_config, parse_config, run_experiment
from .rates import diminishing_contraction, estimate_rate, fit_loglog_exponent

__all__ = list(_audits_all) + [
    "ExperimentConfig", "build_problem", "config_hash", "load_config", "parse_config", "run_experiment",
    "diminishing_contraction", "estimate_rate", "fit_loglog_exponent",
]
