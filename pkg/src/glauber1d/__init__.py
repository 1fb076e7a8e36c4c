"""Glauber dynamics for the Ising model on the cycle: simulation, backward histories, exact oracle."""

from glauber1d.errors import CapacityError, ComputationError, InvalidParameterError
from glauber1d.model import InitialConditionKind, ModelParams, make_initial, theta_of_beta

__all__ = [
    "CapacityError",
    "ComputationError",
    "InitialConditionKind",
    "InvalidParameterError",
    "ModelParams",
    "make_initial",
    "theta_of_beta",
]
