"""GLM solvers with safe adaptive importance sampling.

Coordinate descent and SGD draw their update directions from
distributions that are worst-case optimal with respect to maintained
interval bounds on gradient magnitudes; the per-iteration distribution is
computed in O(n log n) from the sorted transformed bounds.
"""

from .data import SparseDesign, parse_libsvm
from .glm import GlmProblem
from .sampling import (
    GradientBox,
    LipschitzProfile,
    SafeSamplingSolution,
    StationaryPointError,
    compute_safe_sampling,
    draw_index,
    effective_value,
    fixed_li_sampling,
    optimal_sampling,
)
from .solvers import MetricsTrace, SolverConfig, run, run_cd, run_sgd

__version__ = "0.1.0"

__all__ = [
    "GlmProblem",
    "GradientBox",
    "LipschitzProfile",
    "MetricsTrace",
    "SafeSamplingSolution",
    "SolverConfig",
    "SparseDesign",
    "StationaryPointError",
    "compute_safe_sampling",
    "draw_index",
    "effective_value",
    "fixed_li_sampling",
    "optimal_sampling",
    "parse_libsvm",
    "run",
    "run_cd",
    "run_sgd",
    "__version__",
]
