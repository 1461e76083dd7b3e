"""Spectral solver for the 2-D wave equation with scale-invariant damping."""
from .fields import CauchyData, GridSpec, SpectralState, Trajectory, make_data
from .norms import ContractionParams, MixedNormSpec, data_norm, dz_norm, x_norm, z_norm
from .propagator import DampingParams, propagator_matrix, psi, psi_hankel, psi_tt
from .solver import QuadSpec, WaveSolver, time_lattice
from .specfun import bessel_j, bessel_j_prime, hankel

__all__ = [
    "CauchyData",
    "ContractionParams",
    "DampingParams",
    "GridSpec",
    "MixedNormSpec",
    "QuadSpec",
    "SpectralState",
    "Trajectory",
    "WaveSolver",
    "bessel_j",
    "bessel_j_prime",
    "data_norm",
    "dz_norm",
    "hankel",
    "make_data",
    "propagator_matrix",
    "psi",
    "psi_hankel",
    "psi_tt",
    "time_lattice",
    "x_norm",
    "z_norm",
]
