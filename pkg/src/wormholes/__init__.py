"""Surface-code defects (punctures, twists, wormholes) by code deformation."""

from .pauli import PauliOperator, commutes, multiply, restrict
from .frame import (
    LogicalAction,
    MeasurementRecord,
    Membership,
    StabilizerFrame,
    canonicalize,
    contains,
    entanglement_entropy,
    logical_action,
    measure_pauli,
)

__all__ = [
    "LogicalAction",
    "MeasurementRecord",
    "Membership",
    "PauliOperator",
    "StabilizerFrame",
    "canonicalize",
    "commutes",
    "contains",
    "entanglement_entropy",
    "logical_action",
    "measure_pauli",
    "multiply",
    "restrict",
]
