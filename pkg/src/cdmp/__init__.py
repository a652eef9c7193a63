"""Constrained dynamic movement primitives.

Fit smooth point-to-point motions from single demonstrations, deform them
minimally so rollouts respect signed-distance keep-out constraints, chain
segmented skills, and re-target goals through object-attached frames.
"""

from .errors import (
    CdmpError,
    ConflictError,
    DanglingReferenceError,
    DegenerateProblemError,
    DuplicateIdError,
    InfeasibleError,
    InvalidDemonstrationError,
    InvalidGeometryError,
    MalformedFileError,
    NonFiniteStateError,
    NotFoundError,
    TimeBudgetError,
    UnknownSchemaVersionError,
)
from .geometry import (
    Box,
    ConstraintRegion,
    Pose,
    Sphere,
    UnitQuat,
    min_sdf,
    sdf,
    sdf_gradient,
    transform_region,
)
from .dmp import (
    BasisSet,
    CanonicalSystem,
    Demonstration,
    Dmp,
    DmpDim,
    FitOptions,
    Gains,
    Trajectory,
    basis_eval,
    compute_targets,
    default_basis,
    fit_lwr,
    forcing,
    phase,
    rollout,
)
from .solver import (
    Cdmp,
    SolveOptions,
    SolveReport,
    evaluate_violations,
    influence_matrix,
    solve,
    verify,
)
from .skills import (
    Keypoint,
    SceneObject,
    SkillChain,
    SkillSegment,
    fit_chain,
    object_frame,
    reparameterize_goal,
    rollout_chain,
    segment,
)
from .workspace import Workspace, load_workspace, save_workspace

__version__ = "0.1.0"

__all__ = [
    "CdmpError",
    "ConflictError",
    "DanglingReferenceError",
    "DegenerateProblemError",
    "DuplicateIdError",
    "InfeasibleError",
    "InvalidDemonstrationError",
    "InvalidGeometryError",
    "MalformedFileError",
    "NonFiniteStateError",
    "NotFoundError",
    "TimeBudgetError",
    "UnknownSchemaVersionError",
    "Box",
    "ConstraintRegion",
    "Pose",
    "Sphere",
    "UnitQuat",
    "min_sdf",
    "sdf",
    "sdf_gradient",
    "transform_region",
    "BasisSet",
    "CanonicalSystem",
    "Demonstration",
    "Dmp",
    "DmpDim",
    "FitOptions",
    "Gains",
    "Trajectory",
    "basis_eval",
    "compute_targets",
    "default_basis",
    "fit_lwr",
    "forcing",
    "phase",
    "rollout",
    "Cdmp",
    "SolveOptions",
    "SolveReport",
    "evaluate_violations",
    "influence_matrix",
    "solve",
    "verify",
    "Keypoint",
    "SceneObject",
    "SkillChain",
    "SkillSegment",
    "fit_chain",
    "object_frame",
    "reparameterize_goal",
    "rollout_chain",
    "segment",
    "Workspace",
    "load_workspace",
    "save_workspace",
    "__version__",
]
