"""Interconversion of time-local, memory-kernel and Redfield-like descriptions
of commutative open-quantum-system dynamics via damping bases."""

from .dynamics import GeneratorSpec, Kind, MapTrajectory, convert_generator
from .errors import (
    ContourFailure,
    DampflowError,
    DimensionMismatch,
    NotDiagonalizable,
    PreconditionViolated,
    SingularMap,
    UnknownModel,
)
from .models import ModelConfig, ModelId, build
from .qops import OperatorBasis, SuperOp, damping_decompose, gell_mann_basis, pauli_basis
from .scalarflow import EigenSignal, TimeGrid

__version__ = "0.1.0"

__all__ = [
    "ContourFailure", "DampflowError", "DimensionMismatch", "EigenSignal", "GeneratorSpec", "Kind",
    "MapTrajectory", "ModelConfig", "ModelId", "NotDiagonalizable", "OperatorBasis",
    "PreconditionViolated", "SingularMap", "SuperOp", "TimeGrid", "UnknownModel", "build",
    "convert_generator", "damping_decompose", "gell_mann_basis", "pauli_basis",
]
