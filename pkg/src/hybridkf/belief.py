"""Gaussian belief carried in either dense or spectral covariance form."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .linalg import SpectralFactors, spectral_from_dense


class Representation(str, Enum):
    DENSE = "dense"
    SPECTRAL = "spectral"
    # Joseph-like symmetric dense update; exposed for cross-checks only.
    SYMMETRIC = "symmetric"


@dataclass(frozen=True)
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray | None = None
    factors: SpectralFactors | None = None

    def __post_init__(self):
        if self.cov is None and self.factors is None:
            raise ValueError("belief needs a covariance in at least one form")

    def covariance(self) -> np.ndarray:
        if self.cov is not None:
            return self.cov
        return self.factors.reconstruct()

    def spectral(self) -> SpectralFactors:
        if self.factors is not None:
            return self.factors
        return spectral_from_dense(self.cov)

    @staticmethod
    def from_dense(mean: np.ndarray, cov: np.ndarray) -> "GaussianBelief":
        return GaussianBelief(mean=np.asarray(mean, float), cov=np.asarray(cov, float))

    @staticmethod
    def from_spectral(mean: np.ndarray, factors: SpectralFactors) -> "GaussianBelief":
        return GaussianBelief(mean=np.asarray(mean, float), factors=factors)
