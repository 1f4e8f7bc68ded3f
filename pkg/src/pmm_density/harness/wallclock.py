"""Estimator wall-clock over benchmark cells, normalized to Plugin.

Cells run sequentially in this process regardless of PMM_DENSITY_THREADS,
so timings are not distorted by contention.
"""

from __future__ import annotations

import time

import numpy as np

from ..dgp import gen_proxy_cloud
from .config import RunConfig
from .io import write_csv
from .proxy import PROXY_ESTIMATORS, bench_N, estimate_density

HEADER = ["benchmark", "estimator", "mean_s", "relative_to_plugin", "config_hash"]


def time_estimator(est, cloud, k, gate, repeats: int, warmup: int) -> float:
    for _ in range(warmup):
        estimate_density(est, cloud, k, gate)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        estimate_density(est, cloud, k, gate)
        times.append(time.perf_counter() - t0)
    return float(np.mean(times))


def run_wallclock(cfg: RunConfig):
    cfg.layer = "wallclock"
    h = cfg.config_hash()
    per_bench = {}
    for b in cfg.benchmarks:
        clouds = [gen_proxy_cloud(b, bench_N(b, cfg.proxy_N), s, cfg.bias)[0] for s in cfg.seeds]
        per_bench[b] = {
            est.value: float(np.mean([
                time_estimator(est, c, cfg.proxy_k, cfg.gate, cfg.wallclock_repeats, cfg.wallclock_warmup)
                for c in clouds
            ]))
            for est in PROXY_ESTIMATORS
        }
    rows = []
    for b, times in per_bench.items():
        for est, t in times.items():
            rows.append({"benchmark": b, "estimator": est, "mean_s": t,
                         "relative_to_plugin": t / times["Plugin"], "config_hash": h})
    for est in (e.value for e in PROXY_ESTIMATORS):
        t = float(np.mean([times[est] for times in per_bench.values()]))
        plug = float(np.mean([times["Plugin"] for times in per_bench.values()]))
        rows.append({"benchmark": "all", "estimator": est, "mean_s": t, "relative_to_plugin": t / plug, "config_hash": h})
    path = write_csv(cfg.out / "wallclock.csv", HEADER, rows)
    cfg.write_next_to(path)
    return path
