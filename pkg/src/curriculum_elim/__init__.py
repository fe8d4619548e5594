"""Source elimination for multi-task Gaussian mean estimation."""

from . import errors
from .estimators import GFunction, calibrate_g, empirical_mean, g_of_delta, squared_error, trace_hat, variance_hat
from .models import BudgetedSampler, ProblemInstance, TaskParams, build_instance, distances
from .multi_source import (
    EliminationConfig,
    EliminationTrace,
    StopReason,
    VarianceMode,
    run_algorithm1,
    run_algorithm1_unknown_covariance,
    run_algorithm1_unknown_variance,
    run_elimination,
)
from .oracles import run_weak_oracle, select_t_bar, strong_oracle_index, strong_oracle_set, weak_oracle_set
from .single_source import eliminate_predicate, run_single_source

__version__ = "0.1.0"
