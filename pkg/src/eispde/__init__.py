"""Exponential-integrator simulation of semilinear stochastic heat equations
in spectral (Galerkin) coordinates, with long-time experiment harness."""

from .spectral_space import SpectralSpace, laplacian_space
from .model import (ModelSpec, compute_constants, delta1_series, delta2_series,
                    linear_drift, make_model, nemytskii_drift, validate_h3, validate_h4)
from .noise import NoiseStream
from .integrator import SchemeParams, ei_step, simulate, simulate_ensemble
from .measures import EmpiricalMeasure, dL_distance_1d, dL_distance_sliced

__version__ = "0.1.0"

__all__ = [
    "SpectralSpace", "laplacian_space", "ModelSpec", "compute_constants",
    "delta1_series", "delta2_series", "linear_drift", "make_model", "nemytskii_drift",
    "validate_h3", "validate_h4", "NoiseStream", "SchemeParams", "ei_step", "simulate",
    "simulate_ensemble", "EmpiricalMeasure", "dL_distance_1d", "dL_distance_sliced",
]
