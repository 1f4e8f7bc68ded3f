"""CSV writing and reading shared by the experiment layers."""

from __future__ import annotations

import csv
import math
from pathlib import Path

from ..errors import ConfigError


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".12g")
    return str(getattr(value, "value", value))


def write_csv(path: Path, header: list[str], rows: list[dict]) -> Path:
    """Single writer per file; rows are written in the given (deterministic) order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(row[col]) for col in header])
    return path


# which subcommand produces each artifact, for actionable errors in the report
PRODUCERS = {
    "known_dgp_mc.csv": "known-dgp",
    "known_dgp_branches.csv": "known-dgp",
    "main_benchmarks.csv": "proxy",
    "main_significance.csv": "proxy",
    "iterated_proxy.csv": "proxy",
    "tau_tolerance.csv": "tau-sweep",
    "tau_breakpoints.csv": "tau-sweep",
    "component_sweep.csv": "components",
    "pmm3_platykurtic.csv": "pmm3-study",
    "wallclock.csv": "wallclock",
}


class MissingArtifactError(ConfigError):
    pass


def read_csv(directory: Path, name: str) -> list[dict]:
    path = Path(directory) / name
    if not path.exists():
        producer = PRODUCERS.get(name, "all")
        raise MissingArtifactError(
            f"missing {path}; run `python3 -m pmm_density {producer} --out {directory}` first"
        )
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))
