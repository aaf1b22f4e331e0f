"""Demixing of one-dimensional diffraction libraries into shiftable
basis patterns and per-sample activations, under physical constraints."""

from .model import (
    FreezeSpec,
    Instance,
    QGrid,
    Sample,
    Solution,
    SolverConfig,
    ValidationError,
    validate_instance,
)
from .resample import (
    ResamplePlan,
    build_log_grid,
    from_log,
    oversample_for_shift,
    shift_to_lambda,
    to_log,
)
from .solver import (
    ProgressRecord,
    SolveCancelled,
    SolverPreconditionError,
    kl_loss,
    normalize_w,
    reconstruct,
    shift_summary,
    solve,
    update_h,
    update_w,
)
from .gibbs import PresenceMatrix, presence, select_keep_set
from .evaluation import (
    GroundTruth,
    SyntheticSpec,
    generate,
    gibbs_percentage,
    matched_l2,
)

__version__ = "0.1.0"

__all__ = [
    "FreezeSpec",
    "Instance",
    "QGrid",
    "Sample",
    "Solution",
    "SolverConfig",
    "ValidationError",
    "validate_instance",
    "ResamplePlan",
    "build_log_grid",
    "from_log",
    "oversample_for_shift",
    "shift_to_lambda",
    "to_log",
    "ProgressRecord",
    "SolveCancelled",
    "SolverPreconditionError",
    "kl_loss",
    "normalize_w",
    "reconstruct",
    "shift_summary",
    "solve",
    "update_h",
    "update_w",
    "PresenceMatrix",
    "presence",
    "select_keep_set",
    "GroundTruth",
    "SyntheticSpec",
    "generate",
    "gibbs_percentage",
    "matched_l2",
    "__version__",
]
