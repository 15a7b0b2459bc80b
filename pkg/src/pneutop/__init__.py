"""Density-based topology optimization of pressure-actuated compliant units.

The package couples a Darcy-type flow model (design-dependent pneumatic load)
with plane-stress elasticity, adjoint sensitivities and an MMA optimizer in a
robust eroded/blueprint formulation.
"""

from .baseline import baseline_rectangular
from .config import OptConfig, default_config_text, echo_config, load_config, parse_config
from .contour import extract_contour, polyline_area, total_area
from .driver import Evaluator, OptimizationResult, RobustEvaluation, beta_at, evaluate, run
from .errors import ConfigurationError, PneutopError, SolverError, StateError
from .fields import FilterOperator, apply_filter, build_filter, grayness, project, simp_modulus
from .mesh import DomainConfig, DomainModel, EdgeSegment, Rect, build_domain
from .mma import MmaOptions, MmaState, mma_update
from .pressure import FlowParams, solve_pressure

__all__ = [
    "ConfigurationError",
    "DomainConfig",
    "DomainModel",
    "EdgeSegment",
    "Evaluator",
    "FilterOperator",
    "FlowParams",
    "MmaOptions",
    "MmaState",
    "OptConfig",
    "OptimizationResult",
    "PneutopError",
    "Rect",
    "RobustEvaluation",
    "SolverError",
    "StateError",
    "apply_filter",
    "baseline_rectangular",
    "beta_at",
    "build_domain",
    "build_filter",
    "default_config_text",
    "echo_config",
    "evaluate",
    "extract_contour",
    "grayness",
    "load_config",
    "mma_update",
    "parse_config",
    "polyline_area",
    "project",
    "run",
    "simp_modulus",
    "solve_pressure",
    "total_area",
]

__version__ = "0.1.0"
