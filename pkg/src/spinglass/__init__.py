"""Spin-glass solvers and QUBO encoders."""

from ._backend import BACKEND
from .model import (
    IsingInstance,
    QuboInstance,
    Spectrum,
    enumerate_spectrum_naive,
    ising_energy,
    ising_to_qubo,
    qubo_energy,
    qubo_to_ising,
    read_instance,
    to_matrix,
    write_instance,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "IsingInstance",
    "QuboInstance",
    "Spectrum",
    "enumerate_spectrum_naive",
    "ising_energy",
    "ising_to_qubo",
    "qubo_energy",
    "qubo_to_ising",
    "read_instance",
    "to_matrix",
    "write_instance",
    "__version__",
]
