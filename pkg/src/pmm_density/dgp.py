"""Synthetic inputs: known-law spacing panels and biased proxy clouds.

Seed splitting: every random stream is ``SeedSequence(seed,
spawn_key=crc32(label) for label in labels)``, so a stream is a pure
function of its base seed and its string labels.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError
from .shell_geometry import ParticleCloud, SpacingPanel, unit_ball_volume


def seed_sequence(seed: int, *labels) -> np.random.SeedSequence:
    key = tuple(zlib.crc32(str(lbl).encode()) for lbl in labels)
    return np.random.SeedSequence(int(seed), spawn_key=key)


def substream(seed: int, *labels) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed, *labels))


# ---------------------------------------------------------------- spacing laws


class SpacingKind(str, Enum):
    FLAT_EXP1 = "FlatExp1"
    GAMMA_MILD = "GammaMild"
    GAMMA_STRONG = "GammaStrong"
    BOUNDARY_MIXTURE = "BoundaryMixture"
    PLATY_UNIFORM = "PlatyUniform"
    PLATY_BETA = "PlatyBeta"
    PLATY_TRIANGULAR = "PlatyTriangular"
    TWO_POINT = "TwoPoint"


# gamma shapes from skewness 2 / sqrt(a) = 2.41 and 3.01
DEFAULT_PARAMS = {
    SpacingKind.FLAT_EXP1: {},
    SpacingKind.GAMMA_MILD: {"shape": (2 / 2.41) ** 2},
    SpacingKind.GAMMA_STRONG: {"shape": (2 / 3.01) ** 2},
    SpacingKind.BOUNDARY_MIXTURE: {"weight": 0.2, "tail_shape": 0.5, "tail_mean": 2.0},
    SpacingKind.PLATY_UNIFORM: {"half_width": 0.9},
    SpacingKind.PLATY_BETA: {"half_width": 0.9},
    SpacingKind.PLATY_TRIANGULAR: {"half_width": 0.9},
    SpacingKind.TWO_POINT: {"half_width": 0.5, "jitter": 0.025},
}


@dataclass(frozen=True)
class SpacingDgp:
    kind: SpacingKind
    true_density: float = 1.0
    params: dict = field(default_factory=dict)

    def resolved_params(self) -> dict:
        out = dict(DEFAULT_PARAMS[SpacingKind(self.kind)])
        out.update(self.params)
        return out

    def describe(self) -> str:
        items = ";".join(f"{k}={v:.6g}" for k, v in sorted(self.resolved_params().items()))
        return f"{SpacingKind(self.kind).value}(rho={self.true_density:.6g};{items})"


def draw_unit_spacings(kind: SpacingKind, params: dict, size, rng: np.random.Generator) -> np.ndarray:
    """Positive i.i.d. draws with mean exactly 1 under the law ``kind``."""
    kind = SpacingKind(kind)
    if kind is SpacingKind.FLAT_EXP1:
        return rng.exponential(1.0, size)
    if kind in (SpacingKind.GAMMA_MILD, SpacingKind.GAMMA_STRONG):
        a = params["shape"]
        if a <= 0:
            raise ConfigError("gamma shape must be positive")
        return rng.gamma(a, 1.0 / a, size)
    if kind is SpacingKind.BOUNDARY_MIXTURE:
        wt, a, tail_mean = params["weight"], params["tail_shape"], params["tail_mean"]
        if not 0 <= wt <= 1 or a <= 0 or tail_mean <= 0:
            raise ConfigError("invalid boundary-mixture parameters")
        pick = rng.random(size) < wt
        bulk = rng.exponential(1.0, size)
        tail = rng.gamma(a, tail_mean / a, size)
        return np.where(pick, tail, bulk) / ((1 - wt) + wt * tail_mean)
    hw = params["half_width"]
    if not 0 < hw < 1:
        raise ConfigError("half_width must lie in (0, 1) to keep spacings positive")
    if kind is SpacingKind.PLATY_UNIFORM:
        return rng.uniform(1 - hw, 1 + hw, size)
    if kind is SpacingKind.PLATY_BETA:
        return 1 + hw * (2 * rng.beta(2.0, 2.0, size) - 1)
    if kind is SpacingKind.PLATY_TRIANGULAR:
        return 1 + hw * rng.triangular(-1.0, 0.0, 1.0, size)
    if kind is SpacingKind.TWO_POINT:
        jitter = params["jitter"]
        if hw + 4 * jitter >= 1:
            raise ConfigError("two-point law would produce non-positive spacings")
        signs = rng.choice(np.array([-1.0, 1.0]), size)
        noise = np.clip(rng.normal(0.0, jitter, size), -4 * jitter, 4 * jitter)
        return 1 + hw * signs + noise
    raise ConfigError(f"unknown spacing law {kind}")


@dataclass
class KnownPanel:
    panel: SpacingPanel
    true_density: float
    dgp: SpacingDgp


def gen_spacing_panel(dgp: SpacingDgp, N: int, k: int, seed, p: int = 2) -> KnownPanel:
    """N x k i.i.d. spacings law / (N rho) with the matching nested radii.

    An int ``seed`` is split per law: the stream is
    ``substream(seed, "spacing", kind)``.  A Generator is used as is.
    """
    if N < 1 or k < 1:
        raise ConfigError("N and k must be positive")
    if dgp.true_density <= 0:
        raise ConfigError("true density must be positive")
    if isinstance(seed, np.random.Generator):
        rng = seed
    else:
        rng = substream(seed, "spacing", SpacingKind(dgp.kind).value)
    s = draw_unit_spacings(dgp.kind, dgp.resolved_params(), (N, k), rng)
    spacings = s / (N * dgp.true_density)
    radii = (np.cumsum(spacings, axis=1) / unit_ball_volume(p)) ** (1.0 / p)
    return KnownPanel(SpacingPanel(radii, spacings, p), dgp.true_density, dgp)


# ---------------------------------------------------------------- proxy clouds


class ProxyName(str, Enum):
    DISKS = "DisconnectedDisks"
    SEVEN_LOBES = "SevenLobes"
    SINE = "SineCurve"
    SWISS_ROLL = "SwissRoll"
    SCALING_STRESS = "ScalingStress"
    CORRIDOR = "RoboticsCorridor"


@dataclass(frozen=True)
class ProxyBenchmark:
    name: ProxyName
    p: int
    d: int
    component_count: int
    default_N: int


BENCHMARKS = {
    ProxyName.DISKS: ProxyBenchmark(ProxyName.DISKS, 2, 2, 2, 200),
    ProxyName.SEVEN_LOBES: ProxyBenchmark(ProxyName.SEVEN_LOBES, 2, 2, 7, 200),
    ProxyName.SINE: ProxyBenchmark(ProxyName.SINE, 1, 2, 4, 200),
    ProxyName.SWISS_ROLL: ProxyBenchmark(ProxyName.SWISS_ROLL, 2, 3, 4, 200),
    ProxyName.SCALING_STRESS: ProxyBenchmark(ProxyName.SCALING_STRESS, 2, 2, 2, 80),
    ProxyName.CORRIDOR: ProxyBenchmark(ProxyName.CORRIDOR, 2, 2, 2, 200),
}

DISK_CENTERS = np.array([[-3.0, 0.0], [3.0, 0.0]])
LOBE_RADIUS = 4.0
LOBE_SIGMA = 0.3
SINE_NOISE = 0.05
SWISS_T = (1.5 * np.pi, 4.5 * np.pi)
SWISS_HEIGHT = 10.0
CORRIDOR_LENGTH = 4.0
CORRIDOR_WIDTH = 1.0


def geometry_metadata() -> dict:
    return {
        "disk_centers": DISK_CENTERS.tolist(),
        "lobe_radius": LOBE_RADIUS,
        "lobe_sigma": LOBE_SIGMA,
        "sine_noise": SINE_NOISE,
        "swiss_t": list(SWISS_T),
        "swiss_height": SWISS_HEIGHT,
        "corridor": [CORRIDOR_LENGTH, CORRIDOR_WIDTH],
    }


def component_counts(N: int, n_comp: int, bias: float | None, rng: np.random.Generator) -> np.ndarray:
    """Multinomial component sizes; with ``bias`` component 0 gets that share."""
    if bias is None:
        probs = np.full(n_comp, 1.0 / n_comp)
    else:
        probs = np.full(n_comp, (1 - bias) / (n_comp - 1))
        probs[0] = bias
    return rng.multinomial(N, probs)


def _disk_points(labels, rng):
    r = np.sqrt(rng.random(labels.size))
    theta = rng.uniform(0, 2 * np.pi, labels.size)
    return DISK_CENTERS[labels] + np.c_[r * np.cos(theta), r * np.sin(theta)]


def _lobe_points(labels, rng):
    angles = 2 * np.pi * np.arange(7) / 7
    centers = LOBE_RADIUS * np.c_[np.cos(angles), np.sin(angles)]
    return centers[labels] + rng.normal(0, LOBE_SIGMA, (labels.size, 2))


def _segment_t(labels, n_seg, t0, t1, rng):
    width = (t1 - t0) / n_seg
    return t0 + width * (labels + rng.random(labels.size))


def _sine_points(labels, rng):
    t = _segment_t(labels, 4, 0.0, 4 * np.pi, rng)
    return np.c_[t, np.sin(t) + rng.normal(0, SINE_NOISE, t.size)]


def swiss_roll_embed(t, z):
    return np.c_[t * np.cos(t), t * np.sin(t), z]


def _swiss_arc_t(labels, rng):
    # area element of the roll is sqrt(1 + t^2) dt dz; rejection keeps t area-uniform per segment
    t0, t1 = SWISS_T
    width = (t1 - t0) / 4
    t = np.empty(labels.size)
    todo = np.arange(labels.size)
    cap = np.sqrt(1 + t1 * t1)
    while todo.size:
        cand = t0 + width * (labels[todo] + rng.random(todo.size))
        keep = rng.random(todo.size) * cap <= np.sqrt(1 + cand * cand)
        t[todo[keep]] = cand[keep]
        todo = todo[~keep]
    return t


def swiss_segment_areas() -> np.ndarray:
    t0, t1 = SWISS_T
    edges = np.linspace(t0, t1, 5)

    def arc(t):
        return 0.5 * (t * np.sqrt(1 + t * t) + np.arcsinh(t))

    return np.diff(arc(edges))


def _swiss_points(labels, rng):
    t = _swiss_arc_t(labels, rng)
    z = rng.uniform(0, SWISS_HEIGHT, t.size)
    return swiss_roll_embed(t, z)


def _corridor_points(labels, rng):
    # L-shape: horizontal arm [0, L] x [0, W] (label 0), vertical arm [0, W] x [W, L] (label 1)
    L, W = CORRIDOR_LENGTH, CORRIDOR_WIDTH
    u, v = rng.random(labels.size), rng.random(labels.size)
    horiz = np.c_[L * u, W * v]
    vert = np.c_[W * v, W + (L - W) * u]
    return np.where((labels == 0)[:, None], horiz, vert)


_SAMPLERS = {
    ProxyName.DISKS: _disk_points,
    ProxyName.SCALING_STRESS: _disk_points,
    ProxyName.SEVEN_LOBES: _lobe_points,
    ProxyName.SINE: _sine_points,
    ProxyName.SWISS_ROLL: _swiss_points,
    ProxyName.CORRIDOR: _corridor_points,
}


def target_component_mass(name: ProxyName) -> np.ndarray:
    """Share of target mass per component (uniform measure on the manifold)."""
    name = ProxyName(name)
    n = BENCHMARKS[name].component_count
    if name is ProxyName.CORRIDOR:
        mass = np.array([CORRIDOR_LENGTH, CORRIDOR_LENGTH - CORRIDOR_WIDTH])
    elif name is ProxyName.SWISS_ROLL:
        mass = swiss_segment_areas()
    else:
        mass = np.ones(n)
    return mass / mass.sum()


def sample_components(name: ProxyName, labels: np.ndarray, rng: np.random.Generator) -> ParticleCloud:
    """Fresh target-law points, one per entry of ``labels``, in the given components."""
    bench = BENCHMARKS[ProxyName(name)]
    labels = np.asarray(labels, dtype=int)
    return ParticleCloud(_SAMPLERS[bench.name](labels, rng), bench.p, labels)


def sample_benchmark(name: ProxyName, N: int, rng: np.random.Generator, bias: float | None) -> ParticleCloud:
    bench = BENCHMARKS[ProxyName(name)]
    if bias is None:
        mass = target_component_mass(bench.name)
        counts = rng.multinomial(N, mass)
    else:
        counts = component_counts(N, bench.component_count, bias, rng)
    return sample_components(bench.name, np.repeat(np.arange(bench.component_count), counts), rng)


def gen_proxy_cloud(name: ProxyName, N: int, seed: int, bias: float = 0.75, stream: str = "proxy"):
    """Biased proposal cloud and an independent target reference cloud.

    The proposal puts a ``bias`` share of particles on component 0 and
    splits the rest evenly; within a component points follow the target
    law.  Both clouds come from separate substreams of (stream, name, seed).
    """
    if N < 20:
        raise ConfigError("proxy clouds need N >= 20")
    name = ProxyName(name)
    proposal = sample_benchmark(name, N, substream(seed, stream, name.value, "proposal"), bias)
    reference = sample_benchmark(name, N, substream(seed, stream, name.value, "reference"), None)
    return proposal, reference
