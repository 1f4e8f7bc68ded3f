"""Temperature-powered resampling weights and systematic resampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigError
from .shell_geometry import ParticleCloud


@dataclass(frozen=True)
class WeightVector:
    w: np.ndarray
    tau: float


def entropy_weights(rho, tau: float) -> WeightVector:
    """w_i = rho_i^-tau / sum_l rho_l^-tau, evaluated in log space."""
    if tau < 0:
        raise ConfigError(f"temperature must be non-negative, got {tau}")
    rho = np.asarray(getattr(rho, "rho", rho), dtype=float)
    if np.any(rho <= 0):
        raise ValueError("densities must be positive")
    logw = -tau * np.log(rho)
    w = np.exp(logw - logsumexp(logw))
    return WeightVector(w / w.sum(), float(tau))


def systematic_indices(w: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of n systematic draws: one uniform offset, evenly spaced pointers."""
    positions = (rng.random() + np.arange(n)) / n
    cumulative = np.cumsum(w)
    cumulative[-1] = 1.0
    return np.searchsorted(cumulative, positions, side="right")


def resample(cloud: ParticleCloud, weights: WeightVector, rng_seed) -> ParticleCloud:
    """Draw N particles with replacement by systematic resampling.

    ``rng_seed`` may be an int, SeedSequence or Generator.
    """
    rng = np.random.default_rng(rng_seed)
    idx = systematic_indices(weights.w, cloud.N, rng)
    return cloud.take(idx)


def weight_variance_amplification(eps, tau: float) -> float:
    """Variance of the first-order log-weight perturbation -tau * eps.

    Density errors rho_hat = rho (1 + eps) move rho_hat^-tau by a factor of
    about 1 - tau eps, so the relative weight variance is tau^2 Var(eps).
    """
    eps = np.asarray(eps, dtype=float)
    if np.any(np.abs(eps) >= 0.5):
        raise ValueError("first-order expansion needs |eps| < 0.5")
    return float(np.var(-tau * eps))
