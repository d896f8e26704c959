"""Normal-map proximal random reshuffling and companion tools."""

from .problem import (
    CompositeObjective,
    DomainViolation,
    ProblemInstance,
    check_variance_bound,
    component_variance,
    eval_f,
    eval_full_grad,
)
from .prox import Regularizer, brute_force_prox, check_cocoercivity, make_regularizer
from .solvers import RunConfig, Schedule, Trace, run, step_size
from .stationarity import (
    TheoryConstants,
    merit,
    natural_residual,
    normal_map,
    theory_constants,
)

__version__ = "0.1.0"
