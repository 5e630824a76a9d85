"""
otda: optimal transport domain adaptation with MixUp and unbalanced minibatch plans
"""
__version__ = "0.1.0"

import pybamm

from otda.entry_point import Method, methods, parameter_sets
from otda.exceptions import (
    CheckFailure,
    ConfigError,
    DimensionError,
    OTDAError,
    SolverError,
    ValidationError,
)
from otda.logger import logger, set_logging_level
from otda.measures import CostMatrix, DiscreteMeasure, SolverConfig, TransportPlan
from otda.solvers import exact_ot, sinkhorn, solve, unbalanced_sinkhorn

__all__ = [
    "__version__",
    "pybamm",
    "parameter_sets",
    "Method",
    "methods",
    "logger",
    "set_logging_level",
    "CheckFailure",
    "ConfigError",
    "DimensionError",
    "OTDAError",
    "SolverError",
    "ValidationError",
    "CostMatrix",
    "DiscreteMeasure",
    "SolverConfig",
    "TransportPlan",
    "exact_ot",
    "sinkhorn",
    "solve",
    "unbalanced_sinkhorn",
]
