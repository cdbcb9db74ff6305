"""Transformed gradient projection on compact matrix manifolds.

Minimize a smooth cost over Stiefel or Grassmann by stepping along a scaled
gradient plus optional normal shift and projecting back onto the manifold,
with Armijo, nonmonotone-Armijo or fixed stepsizes.
"""

from .directions import (
    Direction,
    DirectionBuilder,
    DRho,
    Egp,
    General,
    GrassmannScaling,
    IdentityS,
    Rgd,
    ShiftedPm,
    StiefelScaling,
    TgpAEigen,
    TgpDE,
    TgpDF,
    TgpE,
    TgpR,
    UniformSpectrumS,
    build_direction,
)
from .linalg import polar, rand_orthonormal, rand_sym_with_spectrum, skew, sym, sym_eig
from .manifolds import FeasibilityError, Grassmann, ManifoldPoint, Stiefel
from .problems import (
    EigenvalueProblem,
    InhomogeneousQP,
    JointMatrixDiag,
    JointTensorDiag,
    generate_instance,
)
from .solver import RunRecord, SolverConfig, complexity_diagnostic, solve
from .stepsizes import ArmijoParams, NonmonotoneState, adapt_trial, fixed_stepsize_bound

__all__ = [
    "ArmijoParams", "Direction", "DirectionBuilder", "DRho", "Egp",
    "EigenvalueProblem", "FeasibilityError", "General", "Grassmann",
    "GrassmannScaling", "IdentityS", "InhomogeneousQP", "JointMatrixDiag",
    "JointTensorDiag", "ManifoldPoint", "NonmonotoneState", "Rgd", "RunRecord",
    "ShiftedPm", "SolverConfig", "Stiefel", "StiefelScaling", "TgpAEigen",
    "TgpDE", "TgpDF", "TgpE", "TgpR", "UniformSpectrumS", "adapt_trial",
    "build_direction", "complexity_diagnostic", "fixed_stepsize_bound",
    "generate_instance", "polar", "rand_orthonormal", "rand_sym_with_spectrum",
    "skew", "solve", "sym", "sym_eig",
]

__version__ = "0.1.0"
