"""Online penalized generalized linear models with renewable updates."""

from .exceptions import (BatchParseError, CheckpointCorruptError, CheckpointError, ContractViolation,
                         DegenerateStreamError, NumericOverflowError, RefitDegenerateError,
                         RenewGLMError, UnsupportedVersionError)
from .glm import Batch, Family, hessian_diag, hessian_sub, log_likelihood, score
from .penalty import (PenaltyConfig, PenaltyKind, coord_update_lasso, coord_update_mcp,
                      coord_update_scad, penalty_value, soft_threshold, threshold)
from .persistence import load_checkpoint, read_batch, save_checkpoint, write_batch
from .simulation import ExperimentConfig, SelectionMetrics, eval_selection, run_experiment
from .solver import StreamingGLM, init_first_batch, process_batch, refit_renewable_mle
from .state import SolverConfig, SolverState
from .surrogate import compute_zw, coordinate_descent, select_active
from .tuning import BicTrace, bic, lambda_grid, lambda_max, select_lambda

__version__ = "0.1.0"
