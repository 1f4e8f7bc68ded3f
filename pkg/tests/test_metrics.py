import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from pmm_density.errors import ConfigError, InsufficientDataError
from pmm_density.metrics import (
    SinkhornReference,
    component_loss,
    density_error,
    entropic_ot,
    holm_adjust,
    mean_ci95,
    nn_w2,
    paired_test,
    pairwise_distance_kl,
    sinkhorn_w2,
    sq_distances,
)
from pmm_density.shell_geometry import ParticleCloud


def cloud(seed, n=40, d=2, shift=0.0):
    return np.random.default_rng(seed).normal(size=(n, d)) + shift


def test_density_error_decomposition():
    est = np.array([0.8, 1.1, 1.3, 0.9])
    s = density_error(est, 1.0, mle=np.array([0.5, 1.5, 1.5, 0.5]))
    assert s.mse == pytest.approx(s.bias**2 + s.variance)
    assert s.bias == pytest.approx(0.025)
    assert s.mse_ratio_vs_mle == pytest.approx(s.mse / 0.25)
    assert math.isnan(density_error(est, 1.0).mse_ratio_vs_mle)
    with pytest.raises(ValueError):
        density_error(est, 0.0)


# ---------------------------------------------------------------- transport


def test_identical_clouds_score_zero():
    a = cloud(0)
    assert sinkhorn_w2(a, a) < 1e-6
    assert nn_w2(a, a) == 0.0


def test_two_points_at_distance_d():
    for dist in (0.5, 2.0, 7.0):
        a = np.array([[0.0, 0.0]])
        b = np.array([[dist, 0.0]])
        assert sinkhorn_w2(a, b, reg=0.1) == pytest.approx(dist**2, rel=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 3.0))
def test_sinkhorn_symmetry(seed, shift):
    a, b = cloud(seed, 25), cloud(seed + 1, 30, shift=shift)
    assert sinkhorn_w2(a, b) == pytest.approx(sinkhorn_w2(b, a), abs=1e-9)


def test_translation_adds_squared_shift():
    a = cloud(3, 60)
    shift = np.array([4.0, 0.0])
    assert sinkhorn_w2(a, a + shift) == pytest.approx(16.0, rel=1e-3)


@pytest.mark.parametrize("seed", range(10))
def test_lp_oracle_10x10(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(10, 2))
    b = rng.normal(size=(10, 2)) + 0.5
    C = sq_distances(a, b)
    i, j = linear_sum_assignment(C)
    exact = C[i, j].mean()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        approx = sinkhorn_w2(a, b, reg=2e-3 * float(np.median(C)), max_iter=3000)
    assert approx == pytest.approx(exact, rel=0.02)


def test_kernel_and_log_paths_agree():
    from pmm_density.metrics import _sinkhorn_kernel, _sinkhorn_log

    C = sq_distances(cloud(1, 50), cloud(2, 60, shift=1.0))
    reg = 0.05 * float(np.median(C))
    vk, ok_k = _sinkhorn_kernel(C, reg, 500, 1e-9)
    vl, ok_l = _sinkhorn_log(C, reg, 500, 1e-9)
    assert ok_k and ok_l
    assert vk == pytest.approx(vl, rel=1e-10)


def test_nonconvergence_warns_and_flags():
    a, b = cloud(0), cloud(1, shift=2.0)
    with pytest.warns(RuntimeWarning):
        value, flag = sinkhorn_w2(a, b, max_iter=2, return_flag=True)
    assert flag and value >= 0


def test_entropic_ot_rejects_bad_reg():
    with pytest.raises(ValueError):
        entropic_ot(np.zeros((2, 2)), 0.0)


def test_reference_cache_matches_direct():
    a, b = cloud(4), cloud(5, shift=1.0)
    ref = SinkhornReference(b)
    assert ref(a) == pytest.approx(sinkhorn_w2(a, b, reg=ref.reg), rel=1e-12)
    assert ref(a) == ref(a.copy())


def test_kl_pairwise():
    a = cloud(0, 80)
    assert pairwise_distance_kl(a, a) == 0.0
    assert pairwise_distance_kl(a, 3 * cloud(1, 80)) > 0.5
    with pytest.raises(ValueError):
        pairwise_distance_kl(a[:1], a)


def test_component_loss():
    pts = np.zeros((4, 1)) + np.arange(4)[:, None]
    assert component_loss(ParticleCloud(pts, 1, np.array([0, 0, 2, 2])), 3) == 1
    assert component_loss(ParticleCloud(pts, 1, np.array([0, 1, 2, 2])), 3) == 0
    with pytest.raises(ConfigError):
        component_loss(ParticleCloud(pts, 1), 3)


# ---------------------------------------------------------------- statistics


def test_ci_half_width():
    m, h = mean_ci95([0.0, 1.0])
    assert m == 0.5
    assert h == pytest.approx(12.706204736 * math.sqrt(0.5) / math.sqrt(2), rel=1e-9)
    assert h == pytest.approx(6.3531, abs=1e-4)
    with pytest.raises(InsufficientDataError):
        mean_ci95([1.0])


def test_holm_hand_values():
    np.testing.assert_allclose(holm_adjust([0.01, 0.04]), [0.02, 0.04])
    np.testing.assert_allclose(holm_adjust([0.04, 0.01]), [0.04, 0.02])
    # monotone step-down: 3 * 0.02 = 0.06 carries over to the next p-value
    np.testing.assert_allclose(holm_adjust([0.02, 0.025, 0.5]), [0.06, 0.06, 0.5])
    np.testing.assert_allclose(holm_adjust([0.6, 0.9]), [1.0, 1.0])
    with pytest.raises(ValueError):
        holm_adjust([1.5])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=12))
def test_holm_properties(p):
    adj = holm_adjust(p)
    assert np.all(adj >= np.asarray(p) - 1e-15) and np.all(adj <= 1)
    order = np.argsort(p, kind="stable")
    assert np.all(np.diff(adj[order]) >= -1e-15)


def test_paired_test_cases():
    a = [1.0, 2.0, 3.0, 4.0, 5.0]
    assert paired_test(a, a) == (1.0, True)
    assert paired_test(a, [x - 1 for x in a]) == (0.0, True)
    p, deg = paired_test(a, [1.1, 1.8, 3.3, 3.9, 5.2])
    assert not deg and 0 < p < 1
    from scipy import stats

    assert p == pytest.approx(stats.ttest_rel(a, [1.1, 1.8, 3.3, 3.9, 5.2]).pvalue)
    with pytest.raises(ValueError):
        paired_test([1.0], [2.0])
