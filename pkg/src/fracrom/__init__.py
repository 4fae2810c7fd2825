"""Reduced-order models for parametric spectral fractional elliptic problems."""
from .fem import BC, AffineProblem, StructuredMesh, materialize
from .problems import PROBLEM_IDS, build_problem, gp_alpha
from .quadrature import SincRule, build_rule, scalar_fractional, training_rule
from .rom import (
    ConvergenceError,
    RomArtifact,
    TrainingPlan,
    fom_solve,
    offline_train,
    online_solve,
    spectral_oracle,
)
from .romfile import read_rom, write_rom

__version__ = "0.1.0"

__all__ = [
    "BC",
    "AffineProblem",
    "StructuredMesh",
    "materialize",
    "PROBLEM_IDS",
    "build_problem",
    "gp_alpha",
    "SincRule",
    "build_rule",
    "scalar_fractional",
    "training_rule",
    "ConvergenceError",
    "RomArtifact",
    "TrainingPlan",
    "fom_solve",
    "offline_train",
    "online_solve",
    "spectral_oracle",
    "read_rom",
    "write_rom",
]
