"""Seeded experiment harness with rate fits and bound-satisfaction tables."""

from .config import DEFAULTS, EXPERIMENTS, ExperimentConfig  # noqa: F401
from .rates import ExperimentResult, RateFit, RateRow, fit_rate, rates_csv, write_outputs  # noqa: F401
from .runners import (  # noqa: F401
    RUNNERS,
    run_data_perturbation,
    run_empirical_prior,
    run_experiment,
    run_likelihood_perturbation,
    run_matern_hyper,
    run_pushforward,
    run_surrogate,
)
