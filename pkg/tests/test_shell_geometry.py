import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pmm_density.errors import InsufficientDataError
from pmm_density.shell_geometry import (
    ParticleCloud,
    knn_radii,
    normalize_spacings,
    shell_spacings,
    spacing_panel,
    unit_ball_volume,
)


def brute_force_radii(points, k):
    """Quadratic scan with python loops, same per-pair distance formula."""
    n = len(points)
    out = []
    for i in range(n):
        d = []
        for j in range(n):
            if j == i:
                continue
            diff = points[i] - points[j]
            d.append((float(np.sqrt((diff * diff).sum())), j))
        d.sort()
        out.append([dist for dist, _ in d[:k]])
    return np.array(out)


def test_unit_ball_volume_low_dims():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)


@pytest.mark.parametrize("p", [0, -1, 1.5])
def test_unit_ball_volume_rejects_bad_dimension(p):
    with pytest.raises(ValueError):
        unit_ball_volume(p)


def test_knn_radii_on_line():
    cloud = ParticleCloud(np.array([[0.0], [1.0], [3.0]]), 1)
    np.testing.assert_array_equal(knn_radii(cloud, 2), [[1, 3], [1, 2], [2, 3]])


def test_k1_is_nearest_neighbour_distance():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(40, 2))
    cloud = ParticleCloud(pts, 2)
    d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    np.fill_diagonal(d, np.inf)
    np.testing.assert_array_equal(knn_radii(cloud, 1)[:, 0], d.min(axis=1))


def test_knn_radii_matches_brute_force():
    pts = np.random.default_rng(0).uniform(size=(50, 3))
    np.testing.assert_array_equal(knn_radii(ParticleCloud(pts, 3), 5), brute_force_radii(pts, 5))


@settings(max_examples=25, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(3, 200), st.integers(1, 3)), elements=st.floats(-10, 10)),
    st.integers(1, 6),
)
def test_knn_radii_oracle_property(pts, k):
    k = min(k, len(pts) - 1)
    cloud = ParticleCloud(pts, 1)
    np.testing.assert_array_equal(knn_radii(cloud, k), brute_force_radii(pts, k))


def test_too_few_particles():
    cloud = ParticleCloud(np.zeros((3, 2)) + np.arange(3)[:, None], 2)
    with pytest.raises(InsufficientDataError):
        knn_radii(cloud, 3)


def test_duplicates_give_zero_radii():
    cloud = ParticleCloud(np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]), 2)
    assert knn_radii(cloud, 1)[0, 0] == 0.0


def test_cloud_invariants():
    with pytest.raises(ValueError):
        ParticleCloud(np.zeros((4, 2)), 3)
    with pytest.raises(ValueError):
        ParticleCloud(np.array([[0.0, np.nan]]), 1)


def test_shell_spacings_hand_values():
    np.testing.assert_allclose(shell_spacings(np.array([[0.1, 0.3]]), 1).spacings, [[0.2, 0.4]])
    np.testing.assert_allclose(shell_spacings(np.array([[1.0, 2.0]]), 2).spacings, [[math.pi, 3 * math.pi]])


def test_shell_spacings_rejects_unsorted():
    with pytest.raises(ValueError):
        shell_spacings(np.array([[0.3, 0.1]]), 1)


@settings(max_examples=50, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(1, 20), st.integers(1, 12)), elements=st.floats(1e-3, 50.0)),
    st.integers(1, 4),
)
def test_telescoping_identity(raw, p):
    radii = np.sort(raw, axis=1)
    panel = shell_spacings(radii, p)
    assert np.all(panel.spacings >= 0)
    total = panel.spacings.sum(axis=1)
    np.testing.assert_allclose(total, unit_ball_volume(p) * radii[:, -1] ** p, rtol=1e-10)


def test_permutation_and_prefix_invariance():
    rng = np.random.default_rng(11)
    pts = rng.normal(size=(60, 2))
    perm = rng.permutation(60)
    a = spacing_panel(ParticleCloud(pts, 2), 6)
    b = spacing_panel(ParticleCloud(pts[perm], 2), 6)
    np.testing.assert_array_equal(a.radii[perm], b.radii)
    longer = spacing_panel(ParticleCloud(pts, 2), 9)
    np.testing.assert_array_equal(longer.radii[:, :6], a.radii)
    np.testing.assert_array_equal(longer.spacings[:, :6], a.spacings)


def test_normalize_spacings():
    panel = shell_spacings(np.full((100, 1), np.sqrt(0.01 / math.pi)), 2)
    np.testing.assert_allclose(normalize_spacings(panel), 1.0)
    single = shell_spacings(np.array([[0.5, 0.7]]), 1)
    np.testing.assert_array_equal(normalize_spacings(single), single.spacings)


def test_flat_dgp_normalized_mean_near_one():
    from pmm_density.dgp import SpacingDgp, SpacingKind, gen_spacing_panel

    known = gen_spacing_panel(SpacingDgp(SpacingKind.FLAT_EXP1), 1000, 10, seed=0)
    assert abs(normalize_spacings(known.panel).mean() - 1.0) < 0.05
