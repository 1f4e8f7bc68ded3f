"""Tables and figures aggregated from the layer CSVs (nothing is recomputed)."""

from __future__ import annotations

from collections import Counter, defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .config import RunConfig  # noqa: E402
from .io import PRODUCERS, MissingArtifactError, read_csv  # noqa: E402

REQUIRED = tuple(PRODUCERS)
EST_ORDER = ("Plugin", "KEnsemble", "MleExp", "Pmm2Mle", "Pmm3Loc")


def _mean(values) -> float:
    return float(np.mean([float(v) for v in values]))


def _md(header, rows) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return "\n".join(lines) + "\n"


def check_artifacts(directory: Path) -> None:
    missing = [n for n in REQUIRED if not (Path(directory) / n).exists()]
    if missing:
        producers = sorted({PRODUCERS[n] for n in missing})
        raise MissingArtifactError(
            f"missing {', '.join(missing)} in {directory}; run subcommand(s) {', '.join(producers)} first"
        )


# ---------------------------------------------------------------- tables


def table_known_dgp(rows) -> str:
    by = defaultdict(list)
    for r in rows:
        by[r["regime"]].append(r)
    header = ["regime", "c3", "c4", "g2", "gamma6", "g3", "branch"] + [f"{e}/MLE" for e in EST_ORDER]
    out = []
    for regime, rs in by.items():
        sel = [r for r in rs if r["estimator"] == "Pmm2Mle"]

        def avg(col):
            vals = [float(r[col]) for r in sel if r[col] != ""]
            return f"{np.mean(vals):.3f}" if vals else "--"

        branches = Counter(r["branch"] for r in sel)
        branch = ", ".join(f"{b} {n}/{len(sel)}" for b, n in branches.most_common())
        ratios = [f"{_mean(r['mse_ratio_vs_mle'] for r in rs if r['estimator'] == e):.3f}" for e in EST_ORDER]
        out.append([regime, avg("c3"), avg("c4"), avg("g2"), avg("gamma6"), avg("g3"), branch] + ratios)
    return _md(header, out)


def table_proxy(sig) -> str:
    by = defaultdict(dict)
    for r in sig:
        cell = f"{float(r['w2_mean']):.4g} +/- {float(r['w2_ci95']):.2g}"
        if r["holm_p"] != "":
            cell += " (--)" if r["degenerate"] == "1" and float(r["raw_p"]) == 1.0 else f" ({float(r['holm_p']):.3f})"
        by[r["benchmark"]][r["estimator"]] = cell
    ests = EST_ORDER[:4]
    return _md(["benchmark"] + list(ests), [[b] + [cells.get(e, "") for e in ests] for b, cells in by.items()])


def table_tau(brk) -> str:
    by = defaultdict(dict)
    for r in brk:
        by[r["benchmark"]][r["estimator"]] = f"{float(r['breakpoint']):.2f}"
    ests = EST_ORDER[:4]
    return _md(["benchmark"] + list(ests), [[b] + [c[e] for e in ests] for b, c in by.items()])


def table_components(rows) -> str:
    runs = defaultdict(int)
    lost = defaultdict(int)
    for r in rows:
        key = (int(r["N"]), r["estimator"])
        runs[key] += 1
        lost[key] += int(r["component_losses"]) > 0
    Ns = sorted({k[0] for k in runs})
    ests = EST_ORDER[:4]
    return _md(["N"] + list(ests), [[n] + [f"{lost[(n, e)]}/{runs[(n, e)]}" for e in ests] for n in Ns])


def table_pmm3(rows) -> str:
    by = defaultdict(list)
    guard = defaultdict(list)
    for r in rows:
        by[(r["study"], r["law"], r["size"])].append(float(r["ratio"]))
        if r["guard_active"] != "":
            guard[(r["study"], r["law"], r["size"])].append(r["guard_active"] == "1")
    out = []
    for (study, law, size), vals in by.items():
        g = guard.get((study, law, size))
        out.append([study, law, size, f"{np.mean(vals):.3f}", "" if g is None else f"{sum(g)}/{len(g)}"])
    return _md(["study", "law", "n or k", "mean ratio", "guard active"], out)


def table_wallclock(rows) -> str:
    out = [[r["benchmark"], r["estimator"], f"{float(r['mean_s']) * 1e3:.2f}", f"{float(r['relative_to_plugin']):.2f}"]
           for r in rows]
    return _md(["benchmark", "estimator", "mean ms", "relative to Plugin"], out)


# ---------------------------------------------------------------- figures


def fig_density_mse(rows, path: Path) -> None:
    regimes = list(dict.fromkeys(r["regime"] for r in rows))
    fig, ax = plt.subplots(figsize=(8, 3.5))
    width = 0.8 / len(EST_ORDER)
    for j, est in enumerate(EST_ORDER):
        vals = [_mean(r["mse_ratio_vs_mle"] for r in rows if r["regime"] == g and r["estimator"] == est) for g in regimes]
        ax.bar(np.arange(len(regimes)) + j * width, vals, width, label=est)
    ax.axhline(1.0, color="k", lw=0.6)
    ax.set_xticks(np.arange(len(regimes)) + 0.4 - width / 2, regimes, fontsize=8)
    ax.set_ylabel("density MSE / MLE")
    ax.legend(fontsize=7, ncol=5)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def fig_iterated(rows, path: Path) -> None:
    benches = list(dict.fromkeys(r["benchmark"] for r in rows))
    fig, axes = plt.subplots(1, len(benches), figsize=(4 * len(benches), 3.2), squeeze=False)
    for ax, b in zip(axes[0], benches):
        for est in EST_ORDER[:4]:
            sel = [r for r in rows if r["benchmark"] == b and r["estimator"] == est]
            rounds = sorted({int(r["round"]) for r in sel})
            ax.plot(rounds, [_mean(r["w2_proxy"] for r in sel if int(r["round"]) == t) for t in rounds],
                    marker="o", label=est)
        ax.set_title(b)
        ax.set_xlabel("round")
        ax.set_ylabel("mean W2^2 proxy")
    axes[0][0].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def fig_tau(rows, path: Path) -> None:
    benches = list(dict.fromkeys(r["benchmark"] for r in rows))
    fig, axes = plt.subplots(1, len(benches), figsize=(4 * len(benches), 3.2), squeeze=False)
    for ax, b in zip(axes[0], benches):
        for est in EST_ORDER[:4]:
            sel = [r for r in rows if r["benchmark"] == b and r["estimator"] == est]
            t = [float(r["tau"]) for r in sel]
            m = np.array([float(r["w2_mean"]) for r in sel])
            ci = np.array([float(r["w2_ci95"]) for r in sel])
            ax.errorbar(t, m, yerr=ci, marker="o", capsize=2, label=est)
        ax.set_title(b)
        ax.set_xlabel("tau")
        ax.set_ylabel("mean W2^2 proxy")
    axes[0][0].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def fig_wallclock(rows, path: Path) -> None:
    sel = [r for r in rows if r["benchmark"] == "all"]
    fig, ax = plt.subplots(figsize=(4.5, 3))
    ax.bar([r["estimator"] for r in sel], [float(r["relative_to_plugin"]) for r in sel])
    ax.axhline(1.0, color="k", lw=0.6)
    ax.set_ylabel("time / Plugin")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def run_report(cfg: RunConfig) -> Path:
    cfg.layer = "report"
    src = Path(cfg.output_dir)
    check_artifacts(src)
    out = cfg.out / "report"
    out.mkdir(exist_ok=True)

    kd = read_csv(src, "known_dgp_mc.csv")
    tau = read_csv(src, "tau_tolerance.csv")
    wall = read_csv(src, "wallclock.csv")
    sections = [
        ("Known-DGP density error (means over seeds)", table_known_dgp(kd)),
        ("Single-step proxy, mean W2^2 +/- CI95 (Holm p vs Plugin)", table_proxy(read_csv(src, "main_significance.csv"))),
        ("Temperature tolerance breakpoints", table_tau(read_csv(src, "tau_breakpoints.csv"))),
        ("Runs with a lost component", table_components(read_csv(src, "component_sweep.csv"))),
        ("Platykurtic PMM3 study", table_pmm3(read_csv(src, "pmm3_platykurtic.csv"))),
        ("Wall-clock", table_wallclock(wall)),
    ]
    (out / "tables.md").write_text("".join(f"## {title}\n\n{body}\n" for title, body in sections))

    fig_density_mse(kd, out / "density_mse.svg")
    fig_iterated(read_csv(src, "iterated_proxy.csv"), out / "iterated_proxy.svg")
    fig_tau(tau, out / "tau_sweep.svg")
    fig_wallclock(wall, out / "wallclock.svg")
    cfg.write_next_to(out / "tables.md")
    return out
