"""Gated choice between the MLE, PMM2 and the PMM3-location diagnostic."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum
from typing import Optional

from .cumulants import CumulantSummary, pooled_cumulants
from .estimators import (
    DensityVector,
    Estimator,
    Pmm3Config,
    mle_exp_density,
    pmm2_density,
    pmm3_location_density,
)
from .shell_geometry import SpacingPanel, normalize_spacings


class Branch(str, Enum):
    FLAT_MLE = "FlatMLE"
    PMM2 = "Pmm2"
    PMM3_DIAGNOSTIC = "Pmm3Diagnostic"
    GUARD_FALLBACK = "GuardFallbackMLE"


@dataclass(frozen=True)
class GateConfig:
    # flat / skew tolerances are tunable; the PMM3 thresholds are fixed values
    flat_c3_tol: float = 0.35
    flat_c4_tol: float = 1.5
    skew_gate_min_abs_c3: float = 0.5
    pmm3_c3_max: float = 0.3
    pmm3_c4_max: float = -0.7
    pmm3_g3_lo: float = 0.0
    pmm3_g3_hi: float = 0.8
    pmm3_k_min: int = 16
    pmm2_mean_one: bool = True

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class SelectorDecision:
    branch: Branch
    production: DensityVector
    summary: CumulantSummary
    diagnostic: Optional[DensityVector] = None

    def trace_row(self, config: GateConfig) -> dict:
        row = {"branch": self.branch.value}
        row.update(self.summary.row())
        row.update({f"gate_{k}": v for k, v in config.as_dict().items()})
        return row


def is_flat(summary: CumulantSummary, config: GateConfig) -> bool:
    return abs(summary.c3 - 2.0) <= config.flat_c3_tol and abs(summary.c4 - 6.0) <= config.flat_c4_tol


def pmm2_gate(summary: CumulantSummary, config: GateConfig) -> bool:
    g2 = summary.g2
    return abs(summary.c3) >= config.skew_gate_min_abs_c3 and g2 is not None and 0.0 < g2 < 1.0


def pmm3_gate(summary: CumulantSummary, k: int, config: GateConfig) -> bool:
    g3 = summary.g3
    return (
        abs(summary.c3) <= config.pmm3_c3_max
        and summary.c4 < config.pmm3_c4_max
        and g3 is not None
        and config.pmm3_g3_lo < g3 < config.pmm3_g3_hi
        and k >= config.pmm3_k_min
    )


def select_density(
    panel: SpacingPanel,
    config: GateConfig = GateConfig(),
    pmm3_config: Pmm3Config = Pmm3Config(),
    summary: Optional[CumulantSummary] = None,
) -> SelectorDecision:
    """Evaluate the gates in order: flat, PMM2, PMM3 diagnostic, fallback.

    The PMM3 branch never changes the production density; it only attaches
    the diagnostic candidate.  ``summary`` may be passed to reuse pooled
    cumulants already computed for ``panel``.
    """
    if summary is None:
        summary = pooled_cumulants(normalize_spacings(panel))
    mle = mle_exp_density(panel)
    mle = DensityVector(mle.rho, Estimator.PMM2)

    if is_flat(summary, config):
        return SelectorDecision(Branch.FLAT_MLE, mle, summary)
    if pmm2_gate(summary, config):
        return SelectorDecision(Branch.PMM2, pmm2_density(panel, summary, config.pmm2_mean_one), summary)
    if pmm3_gate(summary, panel.k, config):
        diag = pmm3_location_density(panel, summary, pmm3_config)
        if not diag.flagged.all():
            return SelectorDecision(Branch.PMM3_DIAGNOSTIC, mle, summary, diag)
    return SelectorDecision(Branch.GUARD_FALLBACK, mle, summary)
