"""
contpath - Certified approximate continuation paths for the Lasso
Warm-started path following with duality-gap certificates, gap-safe screening and active-set size control
"""

from .config import settings
from .data_io import generate_synthetic, load_csv, load_dataset, load_svmlight, read_trace, write_trace
from .models import DesignMatrix, PolicyVariant, PrimalDualState, Problem, TerminationReason
from .path_runner import RunResult, run_path
from .problem import dual_point, eval_dual, eval_primal, lambda_max
from .schemas import InnerSolverConfig, PathPolicy, SizeSchedule

__version__ = settings.VERSION

__all__ = [
    "DesignMatrix",
    "Problem",
    "PrimalDualState",
    "PolicyVariant",
    "TerminationReason",
    "PathPolicy",
    "SizeSchedule",
    "InnerSolverConfig",
    "RunResult",
    "run_path",
    "dual_point",
    "eval_primal",
    "eval_dual",
    "lambda_max",
    "generate_synthetic",
    "load_csv",
    "load_svmlight",
    "load_dataset",
    "read_trace",
    "write_trace",
]
