"""Evaluation metrics for the density and resampling experiments."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from .errors import ConfigError, InsufficientDataError
from .shell_geometry import ParticleCloud, pairwise_distances


@dataclass(frozen=True)
class DensityErrorStats:
    mse: float
    bias: float
    variance: float
    mse_ratio_vs_mle: float = float("nan")


def density_error(estimate, truth: float, mle=None) -> DensityErrorStats:
    """MSE, bias and spread of per-particle density estimates around ``truth``.

    ``variance`` is the population variance of the estimates, so
    mse = bias^2 + variance.  Pass ``mle`` to fill the ratio column.
    """
    if truth <= 0:
        raise ValueError("true density must be positive")
    rho = np.asarray(getattr(estimate, "rho", estimate), dtype=float)
    err = rho - truth
    mse = float(np.mean(err * err))
    bias = float(err.mean())
    variance = float(np.var(rho))
    ratio = float("nan")
    if mle is not None:
        ref = np.asarray(getattr(mle, "rho", mle), dtype=float) - truth
        ratio = mse / float(np.mean(ref * ref))
    return DensityErrorStats(mse, bias, variance, ratio)


# ---------------------------------------------------------------- transport


def _points(cloud) -> np.ndarray:
    return np.asarray(getattr(cloud, "points", cloud), dtype=float)


def sq_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = pairwise_distances(a, b)
    return d * d


# below this C / reg range the Gibbs kernel cannot underflow and scaling iterations are exact
_KERNEL_RANGE = 600.0


def entropic_ot(C: np.ndarray, reg: float, max_iter: int = 500, tol: float = 1e-6):
    """Sinkhorn between uniform marginals.

    Returns (dual objective <a, f> + <b, g>, converged); the dual value
    equals the entropic OT cost at the optimum.  Iterates in kernel space
    when exp(-C / reg) is representable, otherwise in log space.
    """
    if reg <= 0:
        raise ValueError("reg must be positive")
    if np.ptp(C) / reg < _KERNEL_RANGE:
        return _sinkhorn_kernel(C, reg, max_iter, tol)
    return _sinkhorn_log(C, reg, max_iter, tol)


def _sinkhorn_kernel(C, reg, max_iter, tol):
    n, m = C.shape
    a = np.full(n, 1.0 / n)
    b = np.full(m, 1.0 / m)
    shift = C.min()
    K = np.exp(-(C - shift) / reg)
    v = np.ones(m)
    converged = False
    for it in range(max_iter):
        u = a / (K @ v)
        v = b / (K.T @ u)
        if it % 10 and it != max_iter - 1:
            continue
        err = np.abs(u * (K @ v) - a).sum()
        if err < tol:
            converged = True
            break
    f = reg * np.log(u / a) + shift
    g = reg * np.log(v / b)
    return float(a @ f + b @ g), converged


def _sinkhorn_log(C, reg, max_iter, tol):
    n, m = C.shape
    loga = np.full(n, -np.log(n))
    logb = np.full(m, -np.log(m))
    f = np.zeros(n)
    g = np.zeros(m)
    converged = False
    for it in range(max_iter):
        f = -reg * logsumexp(logb[None, :] + (g[None, :] - C) / reg, axis=1)
        g = -reg * logsumexp(loga[:, None] + (f[:, None] - C) / reg, axis=0)
        if it % 10 and it != max_iter - 1:
            continue
        # row marginal error after the g update
        logP = loga[:, None] + logb[None, :] + (f[:, None] + g[None, :] - C) / reg
        err = np.abs(np.exp(logsumexp(logP, axis=1)) - np.exp(loga)).sum()
        if err < tol:
            converged = True
            break
    return float(np.exp(loga) @ f + np.exp(logb) @ g), converged


def default_reg(a: np.ndarray, b: np.ndarray, scale: float = 0.05) -> float:
    """0.05 x median squared pairwise distance of the pooled clouds."""
    pts = np.vstack([a, b])
    d2 = sq_distances(pts, pts)
    iu = np.triu_indices(len(pts), 1)
    med = float(np.median(d2[iu])) if iu[0].size else 0.0
    return scale * med if med > 0 else 1.0


def sinkhorn_w2(cloud_a, cloud_b, reg: float | None = None, max_iter: int = 500, return_flag: bool = False):
    """Debiased Sinkhorn divergence with squared-Euclidean cost.

    S(a, b) = OT(a, b) - OT(a, a) / 2 - OT(b, b) / 2.  The default
    ``reg`` is 0.05 x the median squared pairwise distance.  A
    ``RuntimeWarning`` is issued when any of the three solves hits
    ``max_iter``; ``return_flag`` also returns that flag.
    """
    a, b = _points(cloud_a), _points(cloud_b)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("clouds must be non-empty")
    if a.shape[1] != b.shape[1]:
        raise ValueError("clouds must share the ambient dimension")
    if reg is None:
        reg = default_reg(a, b)
    ab, ok_ab = entropic_ot(sq_distances(a, b), reg, max_iter)
    aa, ok_aa = entropic_ot(sq_distances(a, a), reg, max_iter)
    bb, ok_bb = entropic_ot(sq_distances(b, b), reg, max_iter)
    ok = ok_ab and ok_aa and ok_bb
    if not ok:
        warnings.warn("Sinkhorn did not converge within max_iter", RuntimeWarning, stacklevel=2)
    value = max(ab - 0.5 * (aa + bb), 0.0)
    return (value, not ok) if return_flag else value


class SinkhornReference:
    """Sinkhorn divergence against one fixed reference cloud.

    Caches OT(b, b) and the self-cost of every cloud already seen, so
    estimators that resample to the same particles share one solve.
    """

    def __init__(self, reference, reg: float | None = None, reg_scale: float = 0.05, max_iter: int = 500):
        self.b = _points(reference)
        self.reg = default_reg(self.b, self.b[:0], reg_scale) if reg is None else float(reg)
        self.max_iter = max_iter
        self.bb, ok = entropic_ot(sq_distances(self.b, self.b), self.reg, max_iter)
        self.nonconverged = int(not ok)
        self._cache: dict[bytes, float] = {}

    def __call__(self, cloud) -> float:
        a = _points(cloud)
        key = a.tobytes()
        if key not in self._cache:
            ab, ok_ab = entropic_ot(sq_distances(a, self.b), self.reg, self.max_iter)
            aa, ok_aa = entropic_ot(sq_distances(a, a), self.reg, self.max_iter)
            self.nonconverged += int(not ok_ab) + int(not ok_aa)
            self._cache[key] = max(ab - 0.5 * (aa + self.bb), 0.0)
        return self._cache[key]


def nn_w2(cloud_a, cloud_b) -> float:
    """Symmetrized mean squared nearest-neighbour distance between clouds."""
    d2 = sq_distances(_points(cloud_a), _points(cloud_b))
    return float(0.5 * (d2.min(axis=1).mean() + d2.min(axis=0).mean()))


def pairwise_distance_kl(cloud_a, cloud_b, n_bins: int = 64, smoothing: float = 1e-9) -> float:
    """KL(hist_a || hist_b) of pairwise-distance histograms on shared bins."""
    a, b = _points(cloud_a), _points(cloud_b)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("need at least two points per cloud")
    da = pairwise_distances(a, a)[np.triu_indices(len(a), 1)]
    db = pairwise_distances(b, b)[np.triu_indices(len(b), 1)]
    lo = min(da.min(), db.min())
    hi = max(da.max(), db.max())
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, n_bins + 1)
    pa = np.histogram(da, edges)[0] + smoothing
    pb = np.histogram(db, edges)[0] + smoothing
    pa /= pa.sum()
    pb /= pb.sum()
    return float(max(np.sum(pa * np.log(pa / pb)), 0.0))


def component_loss(final: ParticleCloud, component_count: int) -> int:
    """Number of components that received no final particle."""
    if final.labels is None:
        raise ConfigError("component loss needs labelled particles")
    occupied = np.unique(final.labels)
    return int(component_count - np.isin(np.arange(component_count), occupied).sum())


# ---------------------------------------------------------------- statistics


def mean_ci95(values) -> tuple[float, float]:
    x = np.asarray(values, dtype=float)
    n = x.size
    if n < 2:
        raise InsufficientDataError("need at least two seeds for a confidence interval")
    half = stats.t.ppf(0.975, n - 1) * x.std(ddof=1) / np.sqrt(n)
    return float(x.mean()), float(half)


def holm_adjust(raw_p) -> np.ndarray:
    """Holm step-down adjusted p-values, in the input order."""
    p = np.asarray(raw_p, dtype=float)
    if np.any((p < 0) | (p > 1)) or np.any(~np.isfinite(p)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    adj = np.minimum(np.maximum.accumulate((m - np.arange(m)) * p[order]), 1.0)
    out = np.empty(m)
    out[order] = adj
    return out


def paired_test(values_a, values_b) -> tuple[float, bool]:
    """Two-sided paired t-test p-value on seed-aligned vectors.

    Returns (p, degenerate).  Constant differences have no t statistic:
    p = 1 when they are all zero, p = 0 otherwise, both flagged degenerate.
    """
    a = np.asarray(values_a, dtype=float)
    b = np.asarray(values_b, dtype=float)
    if a.shape != b.shape or a.size < 2:
        raise ValueError("paired test needs equal-length vectors with at least two entries")
    diff = a - b
    if np.all(diff == diff[0]):
        return (1.0 if diff[0] == 0 else 0.0), True
    return float(stats.ttest_rel(a, b).pvalue), False
