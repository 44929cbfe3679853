"""Continuous-discrete hybrid extended-cubature Kalman filtering.

Adaptive implicit Runge-Kutta moment propagation between measurements,
cubature measurement updates, and SVD square-root covariance arithmetic for
roundoff robustness, plus a Monte Carlo benchmark harness.
"""

from .belief import GaussianBelief, Representation
from .filters import FilterKind, FilterTrace, FilterVariant, equivalence_probe, run_filter
from .linalg import SpectralFactors, spectral_from_dense, svd_post_arrays
from .models import (
    ContinuousDiscreteModel,
    make_coordinated_turn,
    make_cstr,
    make_van_der_pol,
)
from .truth import TruthRecord, simulate_truth

__all__ = [
    "ContinuousDiscreteModel",
    "FilterKind",
    "FilterTrace",
    "FilterVariant",
    "GaussianBelief",
    "Representation",
    "SpectralFactors",
    "TruthRecord",
    "equivalence_probe",
    "make_coordinated_turn",
    "make_cstr",
    "make_van_der_pol",
    "run_filter",
    "simulate_truth",
    "spectral_from_dense",
    "svd_post_arrays",
]
