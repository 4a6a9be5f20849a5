"""Tensor-network solvers: PEPS on clustered lattices and MPS on dense graphs."""

from .lattice import ClusterLattice, random_lattice_instance, read_cluster_map
from .mps import mps_imaginary_time
from .peps import (
    Boundary,
    PepsNetwork,
    build_peps,
    conditional_probability,
    contract_boundary,
    edge_decompose,
)
from .search import SearchResult, TnConfig, branch_and_bound

__all__ = [
    "Boundary",
    "ClusterLattice",
    "PepsNetwork",
    "SearchResult",
    "TnConfig",
    "branch_and_bound",
    "build_peps",
    "conditional_probability",
    "contract_boundary",
    "edge_decompose",
    "mps_imaginary_time",
    "random_lattice_instance",
    "read_cluster_map",
]
