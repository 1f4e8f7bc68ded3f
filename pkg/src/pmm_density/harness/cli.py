"""Command line: one subcommand per experiment layer, plus ``report`` and ``all``."""

from __future__ import annotations

import argparse
import sys
import time

from ..errors import ConfigError
from .config import load_config, parse_seeds
from .known_dgp import run_known_dgp
from .pmm3_study import run_pmm3_study
from .proxy import run_component_sweep, run_proxy, run_tau_sweep
from .report import run_report
from .wallclock import run_wallclock

LAYERS = {
    "known-dgp": run_known_dgp,
    "proxy": run_proxy,
    "tau-sweep": run_tau_sweep,
    "components": run_component_sweep,
    "pmm3-study": run_pmm3_study,
    "wallclock": run_wallclock,
    "report": run_report,
}

# --n / --k land on the field the layer actually uses
_N_FIELD = {"known-dgp": "N", "pmm3-study": "pmm3_N"}
_K_FIELD = {"known-dgp": "k"}


def _floats(text: str) -> tuple:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seeds", type=parse_seeds, help="e.g. 0,1,2 or 0-4 (default 0-4)")
    common.add_argument("--out", help="output directory (default results)")
    common.add_argument("--config", help="plain-text key = value config file")
    common.add_argument("--n", type=int, help="particle count / panel rows for this layer")
    common.add_argument("--k", type=int, help="neighbour count for this layer")
    common.add_argument("--tau-grid", type=_floats, help="temperatures for tau-sweep, must include 0.5")

    parser = argparse.ArgumentParser(prog="pmm-density", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(LAYERS) + ["all"]:
        sub.add_parser(name, parents=[common])
    return parser


def config_for(args, layer: str):
    overrides = {"seeds": args.seeds, "output_dir": args.out, "tau_grid": args.tau_grid}
    if args.n is not None:
        overrides[_N_FIELD.get(layer, "proxy_N")] = args.n
    if args.k is not None:
        overrides[_K_FIELD.get(layer, "proxy_k")] = args.k
    return load_config(args.config, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    layers = list(LAYERS) if args.command == "all" else [args.command]
    try:
        for layer in layers:
            t0 = time.perf_counter()
            out = LAYERS[layer](config_for(args, layer))
            print(f"{layer}: wrote {out} ({time.perf_counter() - t0:.1f} s)")
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error in {layer}: {exc}", file=sys.stderr)
        return 1
    return 0
