import cmath
import math

import numpy as np
import pytest

from ma_isac import (
    ArrayLayout,
    DiskRegion,
    InfeasibleLayoutError,
    RectRegion,
    WaveVector2D,
    build_upa,
    min_pairwise_distance,
    quadratic_form_B,
    steering_vector,
    var_cov,
    var_terms,
)

from conftest import LAM, REGION, random_feasible_layout


def test_steering_zero_direction_is_all_ones():
    layout = build_upa(9, LAM / 2, REGION, LAM)
    np.testing.assert_allclose(steering_vector(layout, (0.0, 0.0)), np.ones(9))


def test_steering_two_element_endfire():
    layout = ArrayLayout([0.0, LAM / 2], [0.0, 0.0], REGION, LAM)
    sv = steering_vector(layout, (1.0, 0.0))
    np.testing.assert_allclose(sv, [1.0, -1.0], atol=1e-12)


def test_steering_matches_per_element_evaluation():
    # oracle: scalar complex exponential per element
    layout = build_upa(16, LAM / 2, REGION, LAM)
    u, v = 0.35, 0.71
    sv = steering_vector(layout, WaveVector2D(u, v))
    for n in range(16):
        expected = cmath.exp(1j * 2 * cmath.pi / LAM * (u * layout.y[n] + v * layout.z[n]))
        assert abs(sv[n] - expected) < 1e-12
    np.testing.assert_allclose(np.abs(sv), 1.0, atol=1e-12)


def test_steering_conjugate_symmetry():
    rng = np.random.default_rng(5)
    layout = random_feasible_layout(rng, 8)
    chi = (0.4, -0.3)
    sv_pos = steering_vector(layout, chi)
    sv_neg = steering_vector(layout, (-chi[0], -chi[1]))
    np.testing.assert_allclose(sv_neg, sv_pos.conj(), atol=1e-12)


def test_steering_translation_gives_global_phase():
    rng = np.random.default_rng(6)
    layout = random_feasible_layout(rng, 6)
    wide = RectRegion.square(10 * LAM)
    shifted = ArrayLayout(layout.y + 2 * LAM, layout.z, wide, LAM)
    a = steering_vector(layout, (0.3, 0.2))
    b = steering_vector(shifted, (0.3, 0.2))
    ratio = b / a
    np.testing.assert_allclose(ratio, ratio[0], atol=1e-12)
    assert abs(abs(ratio[0]) - 1.0) < 1e-12


def test_var_cov_two_point_symmetric():
    a = 0.7
    var_y, var_z, cov = var_cov([-a, a], [0.0, 0.0])
    assert var_y == pytest.approx(a * a)
    assert var_z == 0.0
    assert cov == 0.0


def test_var_cov_upa_against_direct_summation():
    # oracle: direct summation of the defining formula
    spacing = LAM / 2
    offsets = np.arange(4) * spacing
    y = np.tile(offsets, 4)
    z = np.repeat(offsets, 4)
    var_y, var_z, cov = var_cov(y, z)

    def direct_var(x):
        mu = sum(x) / len(x)
        return sum((xi - mu) ** 2 for xi in x) / len(x)

    assert var_y == pytest.approx(direct_var(y), rel=1e-12)
    assert var_z == pytest.approx(direct_var(z), rel=1e-12)
    assert var_y == pytest.approx(0.3125 * LAM**2, rel=1e-12)
    assert cov == pytest.approx(0.0, abs=1e-15)


def test_var_cov_constant_axis_degenerates():
    rng = np.random.default_rng(7)
    y = rng.uniform(-1, 1, 10)
    var_y, var_z, cov = var_cov(y, np.full(10, 0.3))
    assert var_z == 0.0
    assert cov == pytest.approx(0.0, abs=1e-12)


def test_var_cov_translation_invariant():
    rng = np.random.default_rng(8)
    y = rng.uniform(-1, 1, 12)
    z = rng.uniform(-1, 1, 12)
    assert var_cov(y, z) == pytest.approx(var_cov(y + 5.0, z - 3.0))


def test_quadratic_form_annihilates_constants():
    assert quadratic_form_B(np.ones(7), np.ones(7)) == pytest.approx(0.0, abs=1e-15)


def test_quadratic_form_matches_var_cov():
    rng = np.random.default_rng(9)
    x = rng.standard_normal(8)
    w = rng.standard_normal(8)
    var_x, var_w, cov = var_cov(x, w)
    assert quadratic_form_B(x, x) == pytest.approx(var_x, rel=1e-12)
    assert quadratic_form_B(w, w) == pytest.approx(var_w, rel=1e-12)
    assert quadratic_form_B(x, w) == pytest.approx(cov, rel=1e-12)


def test_quadratic_form_two_by_two_hand_value():
    assert quadratic_form_B([-1.0, 1.0], [1.0, -1.0]) == pytest.approx(-1.0)


def test_build_upa_dense_and_sparse():
    dense = build_upa(16, LAM / 2, REGION, LAM)
    assert min_pairwise_distance(dense) == pytest.approx(LAM / 2)
    sparse = build_upa(16, 5 * LAM / 3, REGION, LAM)
    assert min_pairwise_distance(sparse) == pytest.approx(5 * LAM / 3)
    # sparse grid spans the full region
    assert sparse.y.max() - sparse.y.min() == pytest.approx(5 * LAM)


def test_build_upa_four_elements():
    layout = build_upa(4, LAM / 2, REGION, LAM)
    assert layout.n == 4
    assert min_pairwise_distance(layout) == pytest.approx(LAM / 2)


def test_build_upa_rejects_oversized_grid():
    with pytest.raises(InfeasibleLayoutError):
        build_upa(16, 2 * LAM, REGION, LAM)


def test_build_upa_centered_in_disk():
    disk = DiskRegion(1.0, -1.0, 0.5)
    layout = build_upa(9, 0.1, disk, LAM)
    assert np.mean(layout.y) == pytest.approx(1.0)
    assert np.mean(layout.z) == pytest.approx(-1.0)


def test_min_pairwise_distance_small_cases():
    grid = build_upa(4, 0.07, REGION, LAM)
    assert min_pairwise_distance(grid) == pytest.approx(0.07)
    colinear = ArrayLayout([0.0, 1.0, 3.0], [0.0, 0.0, 0.0], RectRegion.square(10), LAM)
    assert min_pairwise_distance(colinear) == pytest.approx(1.0)


def test_min_pairwise_distance_matches_brute_force():
    rng = np.random.default_rng(10)
    layout = random_feasible_layout(rng, 16, min_spacing=0.0)
    pts = layout.positions()
    brute = min(
        math.dist(pts[i], pts[j]) for i in range(16) for j in range(i + 1, 16)
    )
    assert min_pairwise_distance(layout) == pytest.approx(brute, rel=1e-14)


def test_min_pairwise_distance_needs_two_antennas():
    layout = build_upa(4, LAM / 2, REGION, LAM)
    with pytest.raises(ValueError):
        ArrayLayout([0.0], [0.0], REGION, LAM)
    assert min_pairwise_distance(layout) > 0


def test_wave_vector_bounds_validated():
    with pytest.raises(ValueError):
        WaveVector2D(1.3, 0.0)


def test_layout_outside_region_rejected():
    with pytest.raises(InfeasibleLayoutError):
        ArrayLayout([0.0, 10.0], [0.0, 0.0], REGION, LAM)


def test_aperture_bound_on_min_variance_term():
    # the smaller variance term can never exceed half the squared
    # circumscribed radius, whatever the in-region layout
    rng = np.random.default_rng(11)
    bound = REGION.circumradius**2 / 2
    for _ in range(200):
        layout = random_feasible_layout(rng, int(rng.integers(2, 17)), min_spacing=0.0)
        term_u, term_v = var_terms(layout.y, layout.z)
        assert min(term_u, term_v) <= bound + 1e-12


def test_region_circumradius():
    assert REGION.circumradius == pytest.approx(5 * LAM / math.sqrt(2))
    assert DiskRegion(0, 0, 2.0).circumradius == 2.0
