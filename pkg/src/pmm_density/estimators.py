"""Density rules on shell-spacing panels.

Plugin, k-ensemble and the exponential MLE are the classical kNN estimates.
PMM2 rescales the MLE by a cumulant-based correction; PMM3-location replaces
the per-particle mean spacing by the root of a cubic polynomial score.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .cumulants import DENOM_FLOOR, CumulantSummary
from .errors import ConfigError, DegenerateError
from .shell_geometry import ParticleCloud, SpacingPanel, knn_radii, shell_spacings, unit_ball_volume

CLAMP_FLOOR = 1e-6


class Estimator(str, Enum):
    PLUGIN = "Plugin"
    KENSEMBLE = "KEnsemble"
    MLE_EXP = "MleExp"
    PMM2 = "Pmm2Mle"
    PMM3_LOC = "Pmm3Loc"


@dataclass
class DensityVector:
    rho: np.ndarray
    estimator: Estimator
    # rows where a guard kicked in (clamped PMM2 factor, PMM3 fallback)
    flagged: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (np.all(np.isfinite(self.rho)) and np.all(self.rho > 0)):
            raise DegenerateError(f"{self.estimator.value} produced non-positive or non-finite densities")


@dataclass(frozen=True)
class Pmm3Config:
    max_iter: int = 50
    step_tol: float = 1e-10
    trust_factor: float = 2.0
    deriv_floor: float = 1e-12
    k_min: int = 16


@dataclass
class Pmm3Solve:
    mu: float
    iterations: int
    converged: bool
    within_trust_region: bool


def plugin_density(panel: SpacingPanel) -> DensityVector:
    """k / (N V_p eps_k^p), the classical kNN plug-in estimate."""
    eps_k = panel.radii[:, -1]
    if np.any(eps_k <= 0):
        raise DegenerateError("zero k-th neighbour radius (duplicate points)")
    rho = panel.k / (panel.N * unit_ball_volume(panel.p) * eps_k**panel.p)
    return DensityVector(rho, Estimator.PLUGIN)


def mle_exp_density(panel: SpacingPanel) -> DensityVector:
    """1 / (N * mean_j Delta_ij): MLE when N rho Delta is i.i.d. Exp(1)."""
    mean_spacing = panel.spacings.mean(axis=1)
    if np.any(mean_spacing <= 0):
        raise DegenerateError("zero mean spacing in panel")
    return DensityVector(1.0 / (panel.N * mean_spacing), Estimator.MLE_EXP)


def default_k_set(k: int, N: int) -> list[int]:
    """{k/2, k, 2k}, rounded and clipped to [2, N-1]."""
    ks = {int(np.clip(round(v), 2, N - 1)) for v in (k / 2, k, 2 * k)}
    return sorted(ks)


def k_ensemble_from_panel(panel: SpacingPanel, k_set: Sequence[int]) -> DensityVector:
    if not k_set:
        raise ConfigError("k_set must not be empty")
    if max(k_set) > panel.k or min(k_set) < 1:
        raise ConfigError(f"k_set {list(k_set)} not covered by a panel with k={panel.k}")
    rho = np.mean([plugin_density(panel.prefix(kk)).rho for kk in k_set], axis=0)
    return DensityVector(rho, Estimator.KENSEMBLE)


def k_ensemble_density(cloud: ParticleCloud, k_set: Sequence[int]) -> DensityVector:
    """Arithmetic mean of plug-in densities over ``k_set``."""
    if not k_set:
        raise ConfigError("k_set must not be empty")
    panel = shell_spacings(knn_radii(cloud, max(k_set)), cloud.p)
    return k_ensemble_from_panel(panel, k_set)


def pmm2_density(panel: SpacingPanel, summary: CumulantSummary, mean_one: bool = False) -> DensityVector:
    """MLE density times 1 + c3 (m1i - m1) / (2 + c4).

    ``m1i`` is the per-particle mean of s = N Delta and ``m1`` the pooled
    mean.  With ``mean_one`` both are divided by ``m1`` first, i.e. the
    spacings are rescaled to unit pooled mean before the correction.
    Non-positive correction factors are clamped to ``CLAMP_FLOOR`` and
    flagged.
    """
    denom = 2.0 + summary.c4
    if abs(denom) <= DENOM_FLOOR:
        raise DegenerateError("PMM2 denominator 2 + c4 below floor")
    mle = mle_exp_density(panel).rho
    m1i = panel.N * panel.spacings.mean(axis=1)
    m1 = summary.m1
    if mean_one:
        m1i = m1i / m1
        m1 = 1.0
    factor = 1.0 + summary.c3 * (m1i - m1) / denom
    flagged = factor <= 0
    factor = np.where(flagged, CLAMP_FLOOR, factor)
    return DensityVector(mle * factor, Estimator.PMM2, flagged)


def pmm3_coefficients(central, symmetric: bool = True) -> np.ndarray:
    """Variance-minimizing weights (h1, h2, h3) of the degree-3 location score.

    The score is sum_j h1 r + h2 (r^2 - mu2) + h3 (r^3 - mu3) with
    r = x_j - mu.  ``h`` solves Cov(f_a, f_b) h = E[d f_a / d mu] over the
    basis f_a = r^a - mu_a, i.e. M h = (1, 0, 3 mu2).  With ``symmetric``
    the odd central moments are pinned to zero, which forces h2 = 0.
    ``central`` is (mu2, ..., mu6), optionally with leading batch axes.
    """
    c = np.asarray(central, dtype=float)
    m2, m3, m4, m5, m6 = (c[..., i] for i in range(5))
    if symmetric:
        m3 = np.zeros_like(m2)
        m5 = np.zeros_like(m2)
    M = np.stack(
        [
            np.stack([m2, m3, m4], -1),
            np.stack([m3, m4 - m2 * m2, m5 - m2 * m3], -1),
            np.stack([m4, m5 - m2 * m3, m6 - m3 * m3], -1),
        ],
        -2,
    )
    rhs = np.stack([np.ones_like(m2), np.zeros_like(m2), 3.0 * m2], -1)
    return np.linalg.solve(M, rhs[..., None])[..., 0]


def pmm3_score(x: np.ndarray, mu, h: np.ndarray, mu2, mu3) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Score, its mu-derivative and its absolute scale, row-wise."""
    x = np.atleast_2d(x)
    h = np.broadcast_to(h, (x.shape[0], 3))
    mu = np.asarray(mu, dtype=float).reshape(-1, 1)
    mu2 = np.asarray(mu2, dtype=float).reshape(-1, 1)
    mu3 = np.asarray(mu3, dtype=float).reshape(-1, 1)
    r = x - mu
    t1 = h[:, 0:1] * r
    t2 = h[:, 1:2] * (r * r - mu2)
    t3 = h[:, 2:3] * (r**3 - mu3)
    psi = (t1 + t2 + t3).sum(-1)
    dpsi = -(h[:, 0:1] + 2 * h[:, 1:2] * r + 3 * h[:, 2:3] * r * r).sum(-1)
    scale = (np.abs(t1) + np.abs(t2) + np.abs(t3)).sum(-1)
    return psi, dpsi, scale


def newton_location(x, h, mu2, mu3, lo, hi, scale, config: Pmm3Config = Pmm3Config()):
    """Row-wise Newton solve of the PMM3 score started at the row mean.

    Rows fail when an iterate leaves [lo, hi] or the derivative magnitude
    drops below ``config.deriv_floor``.  Returns (mu, iterations,
    converged, within_trust_region) arrays.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    R = x.shape[0]
    h = np.broadcast_to(np.asarray(h, dtype=float), (R, 3))
    mu2 = np.broadcast_to(np.asarray(mu2, dtype=float), (R,))
    mu3 = np.broadcast_to(np.asarray(mu3, dtype=float), (R,))
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (R,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (R,))
    tol = config.step_tol * np.broadcast_to(np.asarray(scale, dtype=float), (R,))

    mu = x.mean(axis=1)
    iters = np.zeros(R, dtype=int)
    converged = np.zeros(R, dtype=bool)
    inside = np.ones(R, dtype=bool)
    active = np.ones(R, dtype=bool)
    for _ in range(config.max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        psi, dpsi, _ = pmm3_score(x[idx], mu[idx], h[idx], mu2[idx], mu3[idx])
        flat = np.abs(dpsi) < config.deriv_floor
        step = np.where(flat, 0.0, psi / np.where(flat, 1.0, dpsi))
        new = mu[idx] - step
        iters[idx] += 1
        out = (new < lo[idx]) | (new > hi[idx]) | ~np.isfinite(new)
        mu[idx] = np.where(out | flat, mu[idx], new)
        inside[idx[out]] = False
        done = ~out & ~flat & (np.abs(step) <= tol[idx])
        converged[idx[done]] = True
        active[idx[out | flat | done]] = False
    return mu, iters, converged, inside


def pmm3_location_fit(row_spacings, pooled: CumulantSummary, config: Pmm3Config = Pmm3Config()) -> Pmm3Solve:
    """Solve the symmetric PMM3 location equation for one panel row.

    ``row_spacings`` must be in the units of ``pooled`` (normalized
    spacings s = N Delta when ``pooled`` summarizes a whole panel).  The
    trust region is [mean / f, f * mean] with f = ``config.trust_factor``.
    """
    x = np.asarray(row_spacings, dtype=float)
    if x.size < config.k_min:
        raise ValueError(f"PMM3 location needs k >= {config.k_min}, got {x.size}")
    mu, it, conv, inside = _fit_rows(x[None, :], pooled, config)
    return Pmm3Solve(float(mu[0]), int(it[0]), bool(conv[0]), bool(inside[0]))


def _fit_rows(s: np.ndarray, pooled: CumulantSummary, config: Pmm3Config):
    h = pmm3_coefficients(pooled.central)
    mean = s.mean(axis=1)
    mu, it, conv, inside = newton_location(
        s, h, pooled.central[0], 0.0, mean / config.trust_factor, mean * config.trust_factor, mean, config
    )
    conv &= mu > 0
    return mu, it, conv, inside


def pmm3_location_density(panel: SpacingPanel, pooled: CumulantSummary, config: Pmm3Config = Pmm3Config()):
    """Per-row PMM3 densities 1 / (N mu_i); rows that fail fall back to the MLE.

    Returns the density vector; its ``flagged`` mask marks fallback rows.
    """
    s = panel.N * panel.spacings
    mle = mle_exp_density(panel).rho
    mu, _, conv, _ = _fit_rows(s, pooled, config)
    rho = np.where(conv, 1.0 / np.where(conv, mu, 1.0), mle)
    return DensityVector(rho, Estimator.PMM3_LOC, ~conv)


def pmm3_location_estimates(samples, config: Pmm3Config = Pmm3Config()):
    """PMM3 location for each row of ``samples`` from that row's own moments.

    Odd central moments are pinned to zero.  The trust region is
    mean +/- f * sd; rows that fail return the sample mean.  Returns
    (estimates, converged).
    """
    x = np.atleast_2d(np.asarray(samples, dtype=float))
    mean = x.mean(axis=1)
    r = x - mean[:, None]
    central = np.stack([np.mean(r**a, axis=1) for a in range(2, 7)], -1)
    sd = np.sqrt(central[:, 0])
    if np.any(sd <= 0):
        raise DegenerateError("constant sample has no PMM3 location")
    h = pmm3_coefficients(central)
    lo = mean - config.trust_factor * sd
    hi = mean + config.trust_factor * sd
    mu, _, conv, _ = newton_location(x, h, central[:, 0], 0.0, lo, hi, sd, config)
    return np.where(conv, mu, mean), conv
