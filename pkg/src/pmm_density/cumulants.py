"""Pooled standardized cumulants and the PMM efficiency coefficients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateError, InsufficientDataError

DENOM_FLOOR = 1e-8
MIN_SAMPLES = 8


@dataclass(frozen=True)
class CumulantSummary:
    """Moment summary of a pooled sample.

    ``c4`` and ``gamma4`` are the same number (standardized excess
    kurtosis); both names are kept because the PMM2 and PMM3 formulas are
    usually written with different symbols.  ``central`` holds the biased
    central moments mu_2 .. mu_6 in the sample's own units.
    """

    m1: float
    m2: float
    c3: float
    c4: float
    gamma4: float
    gamma6: float
    g2: Optional[float]
    g3: Optional[float]
    n_samples: int
    central: tuple

    def row(self) -> dict:
        return {"c3": self.c3, "c4": self.c4, "g2": self.g2, "gamma6": self.gamma6, "g3": self.g3}


def central_moments(x: np.ndarray, max_order: int = 6) -> tuple[float, np.ndarray]:
    """Mean and central moments mu_2..mu_max_order (two-pass, biased)."""
    x = np.asarray(x, dtype=float).ravel()
    mean = x.mean()
    r = x - mean
    moments = np.empty(max_order - 1)
    power = r * r
    for i in range(max_order - 1):
        moments[i] = power.mean()
        power = power * r
    return float(mean), moments


def g2_coefficient(c3: float, c4: float) -> Optional[float]:
    denom = 2.0 + c4
    if abs(denom) <= DENOM_FLOOR:
        return None
    return 1.0 - c3 * c3 / denom


def g3_coefficient(gamma4: float, gamma6: float) -> Optional[float]:
    denom = 6.0 + 9.0 * gamma4 + gamma6
    if abs(denom) <= DENOM_FLOOR:
        return None
    return 1.0 - gamma4 * gamma4 / denom


def pooled_cumulants(samples) -> CumulantSummary:
    """Standardized cumulants c3, c4, gamma6 of a flat sample.

    Plug-in (biased) moment estimators.  The sixth cumulant is
    kappa_6 = mu_6 - 15 mu_4 mu_2 - 10 mu_3^2 + 30 mu_2^3.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < MIN_SAMPLES:
        raise InsufficientDataError(f"need at least {MIN_SAMPLES} samples, got {n}")
    mean, mu = central_moments(x)
    m2, m3, m4, m5, m6 = mu
    # relative floor: variance that is pure rounding noise counts as zero
    if m2 == 0.0 or m2 <= (4 * np.finfo(float).eps * abs(mean)) ** 2:
        raise DegenerateError("zero variance sample")
    c3 = m3 / m2**1.5
    c4 = m4 / m2**2 - 3.0
    kappa6 = m6 - 15.0 * m4 * m2 - 10.0 * m3 * m3 + 30.0 * m2**3
    gamma6 = kappa6 / m2**3
    return CumulantSummary(
        m1=mean,
        m2=float(m2),
        c3=float(c3),
        c4=float(c4),
        gamma4=float(c4),
        gamma6=float(gamma6),
        g2=g2_coefficient(c3, c4),
        g3=g3_coefficient(c4, gamma6),
        n_samples=n,
        central=tuple(float(m) for m in mu),
    )
