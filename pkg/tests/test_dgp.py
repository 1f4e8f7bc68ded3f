import numpy as np
import pytest

from pmm_density.cumulants import pooled_cumulants
from pmm_density.dgp import (
    BENCHMARKS,
    CORRIDOR_LENGTH,
    CORRIDOR_WIDTH,
    DISK_CENTERS,
    ProxyName,
    SpacingDgp,
    SpacingKind,
    draw_unit_spacings,
    gen_proxy_cloud,
    gen_spacing_panel,
    substream,
    swiss_segment_areas,
    target_component_mass,
)
from pmm_density.errors import ConfigError
from pmm_density.shell_geometry import normalize_spacings, shell_spacings


def test_panel_seed_determinism():
    dgp = SpacingDgp(SpacingKind.GAMMA_MILD)
    a = gen_spacing_panel(dgp, 100, 8, 3).panel
    b = gen_spacing_panel(dgp, 100, 8, 3).panel
    np.testing.assert_array_equal(a.spacings, b.spacings)
    np.testing.assert_array_equal(a.radii, b.radii)
    c = gen_spacing_panel(dgp, 100, 8, 4).panel
    assert not np.array_equal(a.spacings, c.spacings)


def test_laws_use_separate_streams():
    a = gen_spacing_panel(SpacingDgp(SpacingKind.FLAT_EXP1), 50, 4, 0).panel
    b = gen_spacing_panel(SpacingDgp(SpacingKind.GAMMA_STRONG), 50, 4, 0).panel
    assert not np.allclose(np.argsort(a.spacings, axis=None), np.argsort(b.spacings, axis=None))


def test_substream_depends_on_labels():
    assert substream(0, "a").random() != substream(0, "b").random()
    assert substream(0, "a", "b").random() == substream(0, "a", "b").random()


def test_radii_reproduce_spacings():
    known = gen_spacing_panel(SpacingDgp(SpacingKind.BOUNDARY_MIXTURE), 40, 6, 1, p=3)
    again = shell_spacings(known.panel.radii, 3)
    np.testing.assert_allclose(again.spacings, known.panel.spacings, rtol=1e-9, atol=1e-15)


@pytest.mark.parametrize("rho", [0.5, 1.0, 7.0])
def test_true_density_scaling(rho):
    known = gen_spacing_panel(SpacingDgp(SpacingKind.FLAT_EXP1, true_density=rho), 2000, 4, 0)
    assert np.mean(normalize_spacings(known.panel)) * rho == pytest.approx(1.0, abs=0.05)


@pytest.mark.parametrize("kind", list(SpacingKind))
def test_unit_mean(kind):
    from pmm_density.dgp import DEFAULT_PARAMS

    x = draw_unit_spacings(kind, DEFAULT_PARAMS[kind], 400_000, np.random.default_rng(0))
    assert np.all(x > 0)
    assert x.mean() == pytest.approx(1.0, abs=0.01)


# cumulant targets at N k = 8000: analytic values with Monte Carlo bands
@pytest.mark.parametrize(
    "kind,c3,c4,tol3,tol4",
    [
        (SpacingKind.FLAT_EXP1, 2.0, 6.0, 0.35, 3.0),
        (SpacingKind.GAMMA_MILD, 2.41, 8.71, 0.4, 4.0),
        (SpacingKind.GAMMA_STRONG, 3.01, 13.59, 0.6, 8.0),
        (SpacingKind.PLATY_UNIFORM, 0.0, -1.2, 0.05, 0.05),
        (SpacingKind.PLATY_BETA, 0.0, -6 / 7, 0.06, 0.07),
        (SpacingKind.PLATY_TRIANGULAR, 0.0, -0.6, 0.06, 0.08),
    ],
)
def test_cumulant_targets(kind, c3, c4, tol3, tol4):
    for seed in range(3):
        known = gen_spacing_panel(SpacingDgp(kind), 500, 16, seed)
        s = pooled_cumulants(normalize_spacings(known.panel))
        assert s.c3 == pytest.approx(c3, abs=tol3)
        assert s.c4 == pytest.approx(c4, abs=tol4)


def test_boundary_mixture_is_right_skewed():
    s = pooled_cumulants(normalize_spacings(gen_spacing_panel(SpacingDgp(SpacingKind.BOUNDARY_MIXTURE), 500, 16, 0).panel))
    assert s.c3 > 2.5 and 0 < s.g2 < 1


def test_bad_parameters():
    with pytest.raises(ConfigError):
        gen_spacing_panel(SpacingDgp(SpacingKind.PLATY_UNIFORM, params={"half_width": 1.2}), 10, 2, 0)
    with pytest.raises(ConfigError):
        gen_spacing_panel(SpacingDgp(SpacingKind.FLAT_EXP1, true_density=0.0), 10, 2, 0)
    with pytest.raises(ConfigError):
        gen_spacing_panel(SpacingDgp(SpacingKind.TWO_POINT, params={"jitter": 0.2}), 10, 2, 0)


# ---------------------------------------------------------------- proxies


@pytest.mark.parametrize("name", list(ProxyName))
def test_proxy_clouds_deterministic_and_shaped(name):
    bench = BENCHMARKS[name]
    a, ref = gen_proxy_cloud(name, 120, 5)
    b, _ = gen_proxy_cloud(name, 120, 5)
    np.testing.assert_array_equal(a.points, b.points)
    assert a.points.shape == (120, bench.d) and a.p == bench.p
    assert set(np.unique(ref.labels)) <= set(range(bench.component_count))
    assert not np.array_equal(a.points, ref.points)


def test_proposal_bias_and_reference_balance():
    prop, ref = gen_proxy_cloud(ProxyName.SEVEN_LOBES, 7000, 0, bias=0.75)
    share = np.bincount(prop.labels, minlength=7) / 7000
    assert share[0] == pytest.approx(0.75, abs=0.02)
    np.testing.assert_allclose(np.bincount(ref.labels, minlength=7) / 7000, 1 / 7, atol=0.015)


def test_disk_geometry():
    prop, _ = gen_proxy_cloud(ProxyName.DISKS, 500, 1)
    dist = np.linalg.norm(prop.points - DISK_CENTERS[prop.labels], axis=1)
    assert dist.max() <= 1.0


def test_corridor_inside_l_shape():
    _, ref = gen_proxy_cloud(ProxyName.CORRIDOR, 2000, 2)
    x, y = ref.points.T
    L, W = CORRIDOR_LENGTH, CORRIDOR_WIDTH
    inside = ((0 <= x) & (x <= L) & (0 <= y) & (y <= W)) | ((0 <= x) & (x <= W) & (W <= y) & (y <= L))
    assert inside.all()
    mass = target_component_mass(ProxyName.CORRIDOR)
    assert np.mean(ref.labels == 0) == pytest.approx(mass[0], abs=0.03)


def test_swiss_roll_segments_follow_area():
    _, ref = gen_proxy_cloud(ProxyName.SWISS_ROLL, 20_000, 3)
    areas = swiss_segment_areas()
    np.testing.assert_allclose(np.bincount(ref.labels) / 20_000, areas / areas.sum(), atol=0.01)
    np.testing.assert_allclose(target_component_mass(ProxyName.SWISS_ROLL), areas / areas.sum())


def test_small_proxy_rejected():
    with pytest.raises(ConfigError):
        gen_proxy_cloud(ProxyName.DISKS, 10, 0)
