"""
pystein: composite quantum hypothesis testing, free-state families and resource
measures, checked numerically at small numbers of copies.
"""

__version__ = "0.1.0"

from .config import DEFAULT_TOLERANCES, ExperimentConfig, Tolerances
from .errors import InequalityViolation, PysteinError
from .experiments import ExperimentResult, run_experiment
from .freesets import FreeFamily, GroupOrbitHull, PptSet, VertexPolytope
from .hyptest import beta_composite, beta_simple
from .qcore import BinaryTest, DensityOperator, HermitianOperator, QuantumChannel
from .qrt import generalized_robustness, relative_entropy_of_resource

__all__ = [
    "DEFAULT_TOLERANCES",
    "ExperimentConfig",
    "Tolerances",
    "InequalityViolation",
    "PysteinError",
    "ExperimentResult",
    "run_experiment",
    "FreeFamily",
    "GroupOrbitHull",
    "PptSet",
    "VertexPolytope",
    "beta_composite",
    "beta_simple",
    "BinaryTest",
    "DensityOperator",
    "HermitianOperator",
    "QuantumChannel",
    "generalized_robustness",
    "relative_entropy_of_resource",
]
