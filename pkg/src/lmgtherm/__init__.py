"""Blackbody thermalization of the Lipkin-Meshkov-Glick model."""

__version__ = "0.1.0"

from .errors import ConvergenceError, DomainError, ResourceError
from .rates import (
    GeneratorMatrix,
    detailed_balance_check,
    generator_from_spectrum,
    planck_weight,
    sector_dipoles,
    sector_generator,
)
from .sector import (
    SectorParams,
    critical_field,
    delta_offset,
    energies,
    energy,
    gap,
    ground_and_first_excited,
    partition_function,
    round_to_j_grid,
    spectrum,
)
from .times import (
    ThermalizationReport,
    evolve_pauli,
    gibbs_vector,
    mu2_and_tau_P,
    tau_Q,
    thermalization_time,
)

__all__ = [
    "ConvergenceError",
    "DomainError",
    "GeneratorMatrix",
    "ResourceError",
    "SectorParams",
    "ThermalizationReport",
    "critical_field",
    "delta_offset",
    "detailed_balance_check",
    "energies",
    "energy",
    "evolve_pauli",
    "gap",
    "generator_from_spectrum",
    "gibbs_vector",
    "ground_and_first_excited",
    "mu2_and_tau_P",
    "partition_function",
    "planck_weight",
    "round_to_j_grid",
    "sector_dipoles",
    "sector_generator",
    "spectrum",
    "tau_Q",
    "thermalization_time",
]
