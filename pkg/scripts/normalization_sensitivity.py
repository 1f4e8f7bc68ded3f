"""Proxy and component-sweep outcomes under both PMM2 spacing normalizations.

The raw rule uses s = N * Delta, whose pooled mean carries the units of the
cloud's support volume; the default rescales s to pooled mean one.  This
prints the seven-lobes / swiss-roll W2 means and the component-loss counts
side by side.

    python3 scripts/normalization_sensitivity.py --out sensitivity
"""

import argparse
import csv
from collections import Counter
from pathlib import Path

from pmm_density.harness.config import load_config
from pmm_density.harness.proxy import run_component_sweep, run_proxy


def summarize(out: Path) -> None:
    with open(out / "main_significance.csv") as fh:
        for r in csv.DictReader(fh):
            if r["estimator"] in ("Plugin", "Pmm2Mle"):
                p = f"  holm p {float(r['holm_p']):.4f}" if r["holm_p"] else ""
                print(f"  {r['benchmark']:<18} {r['estimator']:<8} {float(r['w2_mean']):9.4f}{p}")
    lost = Counter()
    with open(out / "component_sweep.csv") as fh:
        for r in csv.DictReader(fh):
            if r["estimator"] == "Pmm2Mle":
                lost[int(r["N"])] += int(r["component_losses"]) > 0
    print("  PMM2 runs with a lost component:", dict(sorted(lost.items())))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="sensitivity")
    args = ap.parse_args()
    for label, mean_one in (("mean-one", True), ("raw", False)):
        out = Path(args.out) / label
        for fn in (run_proxy, run_component_sweep):
            fn(load_config(None, output_dir=str(out), **{"gate.pmm2_mean_one": mean_one}))
        print(f"{label} normalization")
        summarize(out)


if __name__ == "__main__":
    main()
