"""Run configuration: defaults, plain-text key = value files, hashing."""

from __future__ import annotations

import dataclasses
import hashlib
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .. import __version__
from ..errors import ConfigError
from ..selector import GateConfig

LAYERS = ("known-dgp", "proxy", "tau-sweep", "components", "pmm3-study", "wallclock", "report")

KNOWN_DGP_REGIMES = ("FlatExp1", "GammaMild", "GammaStrong", "BoundaryMixture", "PlatyUniform", "PlatyBeta")
PROXY_BENCHMARKS = (
    "DisconnectedDisks",
    "SevenLobes",
    "SineCurve",
    "SwissRoll",
    "ScalingStress",
    "RoboticsCorridor",
)


@dataclass
class RunConfig:
    layer: str = "all"
    seeds: tuple = (0, 1, 2, 3, 4)
    # known-DGP layer
    N: int = 500
    k: int = 16
    regimes: tuple = KNOWN_DGP_REGIMES
    dgp_p: int = 2
    # proxy layers
    proxy_N: int = 200
    proxy_k: int = 16
    tau: float = 1.0
    bias: float = 0.75
    benchmarks: tuple = PROXY_BENCHMARKS
    tau_grid: tuple = (0.5, 0.75, 1.0, 1.25, 1.5)
    tau_benchmarks: tuple = ("SevenLobes", "SwissRoll", "RoboticsCorridor")
    component_N_grid: tuple = (80, 140, 220, 340)
    component_replicates: int = 3
    iter_benchmarks: tuple = ("SevenLobes", "SwissRoll")
    iter_rounds: int = 3
    refresh_fraction: float = 0.25
    sinkhorn_reg_scale: float = 0.05
    sinkhorn_max_iter: int = 500
    kl_bins: int = 64
    resampler: str = "systematic"
    significance_test: str = "paired-t"
    # PMM3 study
    pmm3_N: int = 500
    pmm3_k_grid: tuple = (16, 32, 64, 128)
    pmm3_sizes: tuple = (50, 100, 200)
    pmm3_reps: int = 400
    # wall-clock
    wallclock_repeats: int = 5
    wallclock_warmup: int = 1
    gate: GateConfig = field(default_factory=GateConfig)
    output_dir: str = "results"

    # ------------------------------------------------------------ serialization

    def items(self):
        """Flat (key, value) pairs; gate fields are prefixed with ``gate.``."""
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "gate":
                for gk, gv in value.as_dict().items():
                    yield f"gate.{gk}", gv
            else:
                yield f.name, value

    def to_text(self) -> str:
        lines = [f"version = {__version__}"]
        lines += [f"{key} = {_fmt(value)}" for key, value in self.items() if key not in ("output_dir", "layer")]
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:12]

    def write_next_to(self, csv_path: Path, extra: dict | None = None) -> Path:
        path = csv_path.with_suffix(".config.txt")
        text = f"layer = {self.layer}\n" + self.to_text()
        if extra:
            text += "".join(f"{k} = {_fmt(v)}\n" for k, v in sorted(extra.items()))
        path.write_text(text)
        return path

    @property
    def out(self) -> Path:
        path = Path(self.output_dir)
        path.mkdir(parents=True, exist_ok=True)
        return path

    def with_updates(self, **updates) -> "RunConfig":
        gate_updates = {k[5:]: v for k, v in updates.items() if k.startswith("gate.")}
        plain = {k: v for k, v in updates.items() if not k.startswith("gate.")}
        cfg = dataclasses.replace(self, **plain)
        if gate_updates:
            cfg = dataclasses.replace(cfg, gate=dataclasses.replace(cfg.gate, **gate_updates))
        return cfg


def _fmt(value) -> str:
    if isinstance(value, (tuple, list)):
        return ",".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _field_types() -> dict:
    types = {f.name: f.default for f in fields(RunConfig) if f.name != "gate"}
    types.update({f"gate.{k}": v for k, v in GateConfig().as_dict().items()})
    return types


def _coerce(key: str, raw: str, default):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if isinstance(default, tuple):
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            if default and isinstance(default[0], int):
                return tuple(int(p) for p in parts)
            if default and isinstance(default[0], float):
                return tuple(float(p) for p in parts)
            return tuple(parts)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    types = _field_types()
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key in ("version", "layer"):
            continue
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, raw, types[key])
    return out


def load_config(path: str | os.PathLike | None = None, **overrides) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        cfg = cfg.with_updates(**parse_config_text(Path(path).read_text()))
    cfg = cfg.with_updates(**{k: v for k, v in overrides.items() if v is not None})
    validate(cfg)
    return cfg


def parse_seeds(text: str) -> tuple:
    """'0,1,2' or '0-4' (inclusive range)."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise ConfigError("no seeds given")
    return tuple(seeds)


def validate(cfg: RunConfig) -> None:
    if len(cfg.seeds) < 1:
        raise ConfigError("need at least one seed")
    if cfg.k < 1 or cfg.proxy_k < 1:
        raise ConfigError("k must be positive")
    if cfg.tau < 0 or any(t < 0 for t in cfg.tau_grid):
        raise ConfigError("temperatures must be non-negative")
    if not 0 < cfg.bias < 1:
        raise ConfigError("bias must lie in (0, 1)")
    if not 0 <= cfg.refresh_fraction <= 1:
        raise ConfigError("refresh_fraction must lie in [0, 1]")
    if cfg.resampler != "systematic":
        raise ConfigError("only systematic resampling is implemented")


def worker_count() -> int:
    raw = os.environ.get("PMM_DENSITY_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ConfigError(f"PMM_DENSITY_THREADS must be an integer, got {raw!r}") from exc
