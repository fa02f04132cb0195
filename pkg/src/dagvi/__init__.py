"""DAG learning from binary time series via penalized monotone vector fields."""

from .estimator import DagLearner, as_panel
from .fields import (ConfigurationError, FieldEval, PenaltySpec,
                     concatenated_field, empirical_field, penalized_field)
from .graphs import (CycleSets, GenerationError, dagness, dagness_grad,
                     enumerate_cycles, generate_ground_truth, has_cycle,
                     matrix_exp)
from .metrics import a_err, binarize, nu_err, shd
from .model import (FeasibilityError, LinkFunction, ParamMatrix,
                    TimeSeriesPanel, design_matrix, event_probability,
                    extract_lag_matrix, get_link, lag_window, set_lag_matrix,
                    simulate)
from .selection import lambda_sweep, select_from_points
from .solver import (DivergenceError, FitResult, SolverConfig, fit,
                     fit_decoupled, project)
from .theory import (BoundReport, concentration_check, concentration_radius,
                     gram_matrix, recovery_bound)

__version__ = "0.1.0"

__all__ = [
    "DagLearner", "as_panel",
    "ConfigurationError", "FieldEval", "PenaltySpec",
    "concatenated_field", "empirical_field", "penalized_field",
    "CycleSets", "GenerationError", "dagness", "dagness_grad",
    "enumerate_cycles", "generate_ground_truth", "has_cycle", "matrix_exp",
    "a_err", "binarize", "nu_err", "shd",
    "FeasibilityError", "LinkFunction", "ParamMatrix", "TimeSeriesPanel",
    "design_matrix", "event_probability", "extract_lag_matrix", "get_link",
    "lag_window", "set_lag_matrix", "simulate",
    "lambda_sweep", "select_from_points",
    "DivergenceError", "FitResult", "SolverConfig", "fit", "fit_decoupled",
    "project",
    "BoundReport", "concentration_check", "concentration_radius",
    "gram_matrix", "recovery_bound",
]
