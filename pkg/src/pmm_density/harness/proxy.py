"""Resampling-proxy experiments: single step, iterated, temperature sweep, component sweep."""

from __future__ import annotations

import time
from collections import defaultdict

import numpy as np

from ..dgp import BENCHMARKS, ProxyName, gen_proxy_cloud, sample_benchmark, sample_components, seed_sequence
from ..errors import ConfigError
from ..estimators import (
    Estimator,
    default_k_set,
    k_ensemble_density,
    mle_exp_density,
    plugin_density,
)
from ..metrics import (
    SinkhornReference,
    component_loss,
    holm_adjust,
    mean_ci95,
    nn_w2,
    paired_test,
    pairwise_distance_kl,
)
from ..resampling import entropy_weights, resample
from ..selector import select_density
from ..shell_geometry import ParticleCloud, spacing_panel
from .config import RunConfig
from .io import write_csv
from .parallel import map_cells

PROXY_ESTIMATORS = (Estimator.PLUGIN, Estimator.KENSEMBLE, Estimator.MLE_EXP, Estimator.PMM2)

MAIN_HEADER = [
    "benchmark", "seed", "estimator", "w2_proxy", "nn_w2_proxy", "kl_pairwise",
    "component_losses", "wallclock_s", "config_hash",
]
SIG_HEADER = ["benchmark", "estimator", "reference", "w2_mean", "w2_ci95", "raw_p", "holm_p", "degenerate", "config_hash"]
ITER_HEADER = ["benchmark", "seed", "estimator", "round", "w2_proxy", "config_hash"]
TAU_HEADER = ["benchmark", "estimator", "tau", "w2_mean", "w2_ci95", "within_10pct", "config_hash"]
BREAK_HEADER = ["benchmark", "estimator", "breakpoint", "config_hash"]
COMP_HEADER = ["N", "seed", "replicate", "estimator", "component_losses", "config_hash"]


def estimate_density(est: Estimator, cloud: ParticleCloud, k: int, gate):
    if est is Estimator.KENSEMBLE:
        return k_ensemble_density(cloud, default_k_set(k, cloud.N))
    panel = spacing_panel(cloud, k)
    if est is Estimator.PLUGIN:
        return plugin_density(panel)
    if est is Estimator.MLE_EXP:
        return mle_exp_density(panel)
    if est is Estimator.PMM2:
        return select_density(panel, gate).production
    raise ConfigError(f"{est} is not a proxy estimator")


def bench_N(name: str, N: int) -> int:
    # the scaling-stress benchmark keeps its own small budget
    bench = BENCHMARKS[ProxyName(name)]
    return bench.default_N if bench.name is ProxyName.SCALING_STRESS else N


def resample_step(cloud, est, k, tau, gate, seed_seq):
    t0 = time.perf_counter()
    rho = estimate_density(est, cloud, k, gate)
    elapsed = time.perf_counter() - t0
    return resample(cloud, entropy_weights(rho, tau), seed_seq), elapsed


# ---------------------------------------------------------------- single step


def proxy_cell(name, seed, N, k, tau, bias, gate, reg_scale, max_iter, kl_bins, full=True) -> list[dict]:
    """One (benchmark, seed) cell; every estimator resamples the same proposal
    with the same systematic offset (common random numbers)."""
    proposal, reference = gen_proxy_cloud(name, bench_N(name, N), seed, bias)
    w2 = SinkhornReference(reference, reg_scale=reg_scale, max_iter=max_iter)
    count = BENCHMARKS[ProxyName(name)].component_count
    rows = []
    for est in PROXY_ESTIMATORS:
        final, elapsed = resample_step(proposal, est, k, tau, gate, seed_sequence(seed, "proxy", name, "resample", tau))
        row = {"benchmark": name, "seed": seed, "estimator": est.value, "tau": tau, "w2_proxy": w2(final)}
        if full:
            row.update(
                nn_w2_proxy=nn_w2(final, reference),
                kl_pairwise=pairwise_distance_kl(final, reference, kl_bins),
                component_losses=component_loss(final, count),
                wallclock_s=elapsed,
            )
        rows.append(row)
    return rows


def significance_rows(rows: list[dict]) -> list[dict]:
    """Paired tests of each estimator against Plugin, Holm-adjusted per benchmark."""
    table = defaultdict(dict)
    for r in rows:
        table[r["benchmark"]].setdefault(r["estimator"], {})[r["seed"]] = r["w2_proxy"]
    out = []
    for bench, by_est in table.items():
        seeds = sorted(by_est[Estimator.PLUGIN.value])
        plugin = [by_est[Estimator.PLUGIN.value][s] for s in seeds]
        m, ci = mean_ci95(plugin)
        out.append({"benchmark": bench, "estimator": Estimator.PLUGIN.value, "reference": None, "w2_mean": m,
                    "w2_ci95": ci, "raw_p": None, "holm_p": None, "degenerate": None})
        contrasts = []
        for est in PROXY_ESTIMATORS[1:]:
            vals = [by_est[est.value][s] for s in seeds]
            p, degenerate = paired_test(vals, plugin)
            m, ci = mean_ci95(vals)
            contrasts.append({"benchmark": bench, "estimator": est.value, "reference": Estimator.PLUGIN.value,
                              "w2_mean": m, "w2_ci95": ci, "raw_p": p, "degenerate": degenerate})
        for c, adj in zip(contrasts, holm_adjust([c["raw_p"] for c in contrasts])):
            c["holm_p"] = float(adj)
        out.extend(contrasts)
    return out


# ---------------------------------------------------------------- iterated


def rejuvenate(name, cloud: ParticleCloud, rng) -> ParticleCloud:
    """Replace repeated copies by fresh target draws in the parent's component."""
    _, first = np.unique(cloud.points, axis=0, return_index=True)
    dup = np.setdiff1d(np.arange(cloud.N), first)
    if dup.size == 0:
        return cloud
    fresh = sample_components(name, cloud.labels[dup], rng)
    pts = cloud.points.copy()
    pts[dup] = fresh.points
    return ParticleCloud(pts, cloud.p, cloud.labels.copy())


def refresh(name, cloud: ParticleCloud, fraction: float, bias: float, rng) -> ParticleCloud:
    """Swap a random ``fraction`` of particles for new biased-proposal draws."""
    m = int(round(fraction * cloud.N))
    if m == 0:
        return cloud
    idx = rng.choice(cloud.N, m, replace=False)
    new = sample_benchmark(name, m, rng, bias)
    pts, labels = cloud.points.copy(), cloud.labels.copy()
    pts[idx], labels[idx] = new.points, new.labels
    return ParticleCloud(pts, cloud.p, labels)


def iterated_cell(name, seed, N, k, tau, bias, gate, reg_scale, max_iter, rounds, fraction) -> list[dict]:
    proposal, reference = gen_proxy_cloud(name, bench_N(name, N), seed, bias)
    w2 = SinkhornReference(reference, reg_scale=reg_scale, max_iter=max_iter)
    start = w2(proposal)
    rows = []
    for est in PROXY_ESTIMATORS:
        cloud = proposal
        rows.append({"benchmark": name, "seed": seed, "estimator": est.value, "round": 0, "w2_proxy": start})
        for r in range(1, rounds + 1):
            cloud, _ = resample_step(cloud, est, k, tau, gate, seed_sequence(seed, "iterated", name, r, "resample"))
            # shared move / refresh streams: estimators differ only through their weights
            move = np.random.default_rng(seed_sequence(seed, "iterated", name, r, "move"))
            cloud = rejuvenate(name, cloud, move)
            rows.append({"benchmark": name, "seed": seed, "estimator": est.value, "round": r, "w2_proxy": w2(cloud)})
            cloud = refresh(name, cloud, fraction, bias, move)
    return rows


def run_proxy(cfg: RunConfig):
    cfg.layer = "proxy"
    h = cfg.config_hash()
    args = (cfg.proxy_N, cfg.proxy_k, cfg.tau, cfg.bias, cfg.gate, cfg.sinkhorn_reg_scale, cfg.sinkhorn_max_iter)
    cells = [(b, s) + args + (cfg.kl_bins,) for b in cfg.benchmarks for s in cfg.seeds]
    rows = [r for cell in map_cells(proxy_cell, cells) for r in cell]
    path = write_csv(cfg.out / "main_benchmarks.csv", MAIN_HEADER, [dict(r, config_hash=h) for r in rows])
    cfg.write_next_to(path)

    sig = [dict(r, config_hash=h) for r in significance_rows(rows)]
    spath = write_csv(cfg.out / "main_significance.csv", SIG_HEADER, sig)
    cfg.write_next_to(spath, {"holm_family": "per benchmark, three contrasts against Plugin"})

    icells = [(b, s) + args + (cfg.iter_rounds, cfg.refresh_fraction) for b in cfg.iter_benchmarks for s in cfg.seeds]
    irows = [r for cell in map_cells(iterated_cell, icells) for r in cell]
    ipath = write_csv(cfg.out / "iterated_proxy.csv", ITER_HEADER, [dict(r, config_hash=h) for r in irows])
    cfg.write_next_to(ipath)
    return path


# ---------------------------------------------------------------- temperature sweep


def breakpoint(taus, means, rule: float = 0.10) -> float:
    """Largest tested tau up to which the mean stays within ``rule`` of the
    tau = 0.5 value (relative increase; every smaller tau must also pass)."""
    order = np.argsort(taus)
    taus = np.asarray(taus, dtype=float)[order]
    means = np.asarray(means, dtype=float)[order]
    base = means[taus == 0.5]
    if base.size != 1:
        raise ConfigError("the tau grid must contain 0.5")
    best = 0.5
    for t, m in zip(taus, means):
        if t < 0.5:
            continue
        if m > (1 + rule) * base[0]:
            break
        best = float(t)
    return best


def run_tau_sweep(cfg: RunConfig):
    cfg.layer = "tau-sweep"
    if 0.5 not in cfg.tau_grid:
        raise ConfigError("the tau grid must contain the 0.5 baseline")
    h = cfg.config_hash()
    cells = [
        (b, s, cfg.proxy_N, cfg.proxy_k, t, cfg.bias, cfg.gate, cfg.sinkhorn_reg_scale, cfg.sinkhorn_max_iter,
         cfg.kl_bins, False)
        for b in cfg.tau_benchmarks for t in cfg.tau_grid for s in cfg.seeds
    ]
    raw = [r for cell in map_cells(proxy_cell, cells) for r in cell]
    vals = defaultdict(list)
    for r in raw:
        vals[(r["benchmark"], r["estimator"], r["tau"])].append(r["w2_proxy"])

    rows, brk = [], []
    for b in cfg.tau_benchmarks:
        for est in PROXY_ESTIMATORS:
            taus = sorted(cfg.tau_grid)
            means = [mean_ci95(vals[(b, est.value, t)]) for t in taus]
            bp = breakpoint(taus, [m for m, _ in means])
            base = means[taus.index(0.5)][0]
            for t, (m, ci) in zip(taus, means):
                rows.append({"benchmark": b, "estimator": est.value, "tau": t, "w2_mean": m, "w2_ci95": ci,
                             "within_10pct": m <= 1.1 * base, "config_hash": h})
            brk.append({"benchmark": b, "estimator": est.value, "breakpoint": bp, "config_hash": h})
    path = write_csv(cfg.out / "tau_tolerance.csv", TAU_HEADER, rows)
    cfg.write_next_to(path)
    bpath = write_csv(cfg.out / "tau_breakpoints.csv", BREAK_HEADER, brk)
    cfg.write_next_to(bpath, {"breakpoint_rule": "largest tau with every mean up to it <= 1.1 x the tau=0.5 mean"})
    return path


# ---------------------------------------------------------------- component sweep


def component_cell(N, seed, rep, k, tau, bias, gate) -> list[dict]:
    name = ProxyName.SCALING_STRESS.value
    proposal, _ = gen_proxy_cloud(name, N, seed, bias, stream=f"components/{N}/{rep}")
    count = BENCHMARKS[ProxyName.SCALING_STRESS].component_count
    rows = []
    for est in PROXY_ESTIMATORS:
        final, _ = resample_step(proposal, est, k, tau, gate, seed_sequence(seed, "components", N, rep, "resample"))
        rows.append({"N": N, "seed": seed, "replicate": rep, "estimator": est.value,
                     "component_losses": component_loss(final, count)})
    return rows


def run_component_sweep(cfg: RunConfig):
    cfg.layer = "components"
    h = cfg.config_hash()
    cells = [
        (n, s, r, cfg.proxy_k, cfg.tau, cfg.bias, cfg.gate)
        for n in cfg.component_N_grid for s in cfg.seeds for r in range(cfg.component_replicates)
    ]
    rows = [dict(r, config_hash=h) for cell in map_cells(component_cell, cells) for r in cell]
    path = write_csv(cfg.out / "component_sweep.csv", COMP_HEADER, rows)
    cfg.write_next_to(path)
    return path
