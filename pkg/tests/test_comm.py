import numpy as np
import pytest

from ma_isac import (
    CommScenario,
    SingularChannelError,
    UserZone,
    build_upa,
    expected_min_rate,
    los_channel,
    rate_upper_bound,
    rates,
    sample_batch,
    sample_user_locations,
    sinr_per_user,
    zf_min_sinr,
    zf_precoder,
)
from ma_isac.comm import channel_matrix, wave_vector_2d

from conftest import LAM, REGION


def make_scenario(zones, q=50, seed=0, power=100.0):
    return CommScenario(
        zones=tuple(zones),
        power_mw=power,
        noise_mw=1e-8,
        wavelength=LAM,
        realizations=q,
        seed=seed,
    )


def random_channel(rng, n, k):
    return rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))


ZONES_4 = (
    UserZone((30, 25, 5), 5.0),
    UserZone((18, 5, -30), 5.0),
    UserZone((25, -30, 14), 5.0),
    UserZone((7, -18, -22), 5.0),
)


# --- sampling -----------------------------------------------------------


def test_sampling_degenerate_radius_returns_center():
    zone = UserZone((20.0, 5.0, -3.0), 1e-15)
    scenario = make_scenario([zone], q=1)
    pts = sample_user_locations(scenario, 0)
    np.testing.assert_allclose(pts[0], zone.center, atol=1e-12)


def test_sampling_statistics_uniform_ball():
    zone = UserZone((25.0, 0.0, 0.0), 5.0)
    scenario = make_scenario([zone], q=1)
    pts = np.array([sample_user_locations(scenario, q)[0] for q in range(20000)])
    offsets = pts - np.array(zone.center)
    assert np.all(np.linalg.norm(offsets, axis=1) <= 5.0 + 1e-12)
    assert np.linalg.norm(offsets.mean(axis=0)) < 0.1


def test_sampling_deterministic_and_stable_under_q():
    scenario = make_scenario(ZONES_4, q=10, seed=42)
    a = sample_user_locations(scenario, 3)
    b = sample_user_locations(scenario, 3)
    np.testing.assert_array_equal(a, b)
    # growing the batch never reshuffles earlier realizations
    big = sample_batch(make_scenario(ZONES_4, q=20, seed=42))
    small = sample_batch(make_scenario(ZONES_4, q=10, seed=42))
    np.testing.assert_array_equal(big[:10], small)


def test_zone_validation():
    with pytest.raises(ValueError):
        UserZone((0.0, 5.0, 5.0), 1.0)  # not in front of the array
    with pytest.raises(ValueError):
        UserZone((1.0, 0.0, 0.0), 2.0)  # contains the origin


# --- LoS channel --------------------------------------------------------


def test_los_channel_broadside():
    layout = build_upa(8, LAM / 2, REGION, LAM)
    d = 40.0
    h = los_channel(layout, (d, 0.0, 0.0))
    expected = LAM / (4 * np.pi * d) * np.exp(1j * 2 * np.pi * d / LAM)
    np.testing.assert_allclose(h, expected * np.ones(8), atol=1e-15)


def test_los_channel_norm():
    layout = build_upa(16, LAM / 2, REGION, LAM)
    point = (22.0, -7.0, 13.0)
    d = np.linalg.norm(point)
    h = los_channel(layout, point)
    assert np.linalg.norm(h) ** 2 == pytest.approx(16 * LAM**2 / (16 * np.pi**2 * d**2))


def test_dense_zone_wave_vector_value():
    chi = wave_vector_2d((20.0, 41.0, -11.0))
    assert chi[0] == pytest.approx(0.87, abs=5e-3)
    assert chi[1] == pytest.approx(-0.23, abs=5e-3)


# --- ZF precoding -------------------------------------------------------


def test_zf_reduces_to_mrt_for_orthogonal_columns():
    n, k, p = 8, 4, 50.0
    h = np.linalg.qr(random_channel(np.random.default_rng(0), n, k))[0] * 1e-3
    w = zf_precoder(h, p)
    # proportional to H, with per-column power P/K
    np.testing.assert_allclose(w, np.sqrt(p / k) * h / 1e-3, rtol=1e-9)
    np.testing.assert_allclose(np.linalg.norm(w, axis=0) ** 2, p / k, rtol=1e-12)


def test_zf_single_user_is_matched_filter():
    rng = np.random.default_rng(1)
    h = random_channel(rng, 8, 1)
    w = zf_precoder(h, 9.0)
    np.testing.assert_allclose(w, 3.0 * h / np.linalg.norm(h), rtol=1e-12)


def test_zf_nulls_interference():
    rng = np.random.default_rng(2)
    h = random_channel(rng, 8, 4)
    w = zf_precoder(h, 100.0)
    product = h.conj().T @ w
    off = product - np.diag(np.diag(product))
    assert np.abs(off).max() < 1e-10 * np.linalg.norm(product)


def test_zf_power_normalization():
    rng = np.random.default_rng(3)
    for _ in range(20):
        h = random_channel(rng, 10, 5)
        w = zf_precoder(h, 123.0)
        assert np.linalg.norm(w) ** 2 == pytest.approx(123.0, rel=1e-12)


def test_zf_rejects_rank_deficiency():
    rng = np.random.default_rng(4)
    h = random_channel(rng, 8, 3)
    h[:, 2] = h[:, 1]
    with pytest.raises(SingularChannelError):
        zf_precoder(h, 1.0)


def test_zf_min_sinr_closed_forms():
    rng = np.random.default_rng(5)
    # orthonormal-scaled columns: gamma = P g / (K sigma2)
    g = 2.5e-6
    h = np.linalg.qr(random_channel(rng, 8, 4))[0] * np.sqrt(g)
    sigma2 = 1e-8
    assert zf_min_sinr(h, 10.0, sigma2) == pytest.approx(10.0 * g / (4 * sigma2), rel=1e-9)
    # single user: gamma = P ||h||^2 / sigma2
    h1 = random_channel(rng, 8, 1)
    assert zf_min_sinr(h1, 10.0, sigma2) == pytest.approx(
        10.0 * np.linalg.norm(h1) ** 2 / sigma2, rel=1e-9
    )


def test_zf_min_sinr_matches_per_user_evaluation():
    rng = np.random.default_rng(6)
    for _ in range(25):
        h = random_channel(rng, 8, 4)
        closed = zf_min_sinr(h, 100.0, 1e-8)
        per_user = sinr_per_user(h, zf_precoder(h, 100.0), 1e-8)
        np.testing.assert_allclose(per_user, closed, rtol=1e-9)


# --- SINR / rates -------------------------------------------------------


def test_zero_precoder_gives_zero_rate():
    rng = np.random.default_rng(7)
    h = random_channel(rng, 8, 3)
    w = np.zeros_like(h)
    assert np.all(sinr_per_user(h, w, 1e-8) == 0)
    assert np.all(rates(h, w, 1e-8) == 0)


def test_sinr_matches_naive_summation():
    # oracle: direct scalar evaluation of the SINR definition
    rng = np.random.default_rng(8)
    h = random_channel(rng, 8, 3)
    w = random_channel(rng, 8, 3)
    sigma2 = 0.3
    got = sinr_per_user(h, w, sigma2)
    for k in range(3):
        signal = abs(np.vdot(w[:, k], h[:, k])) ** 2
        interference = sum(
            abs(np.vdot(w[:, i], h[:, k])) ** 2 for i in range(3) if i != k
        )
        assert got[k] == pytest.approx(signal / (interference + sigma2), rel=1e-12)


# --- expected rate and upper bound -------------------------------------


def test_expected_min_rate_single_user_closed_form():
    zone = UserZone((40.0, 3.0, -2.0), 1e-15)
    scenario = make_scenario([zone], q=1)
    layout = build_upa(8, LAM / 2, REGION, LAM)
    d = np.linalg.norm(zone.center)
    gamma = 100.0 * LAM**2 * 8 / (16 * np.pi**2 * d**2 * 1e-8)
    assert expected_min_rate(layout, scenario) == pytest.approx(
        np.log2(1 + gamma), rel=1e-12
    )


def test_expected_min_rate_single_user_equals_upper_bound():
    scenario = make_scenario([UserZone((35.0, -4.0, 9.0), 5.0)], q=30)
    layout = build_upa(8, LAM / 2, REGION, LAM)
    batch = sample_batch(scenario)
    assert expected_min_rate(layout, scenario, batch) == pytest.approx(
        rate_upper_bound(scenario, 8, batch), rel=1e-12
    )


def test_rate_upper_bound_equal_distances():
    d = 50.0
    batch = np.array([[[d, 0, 0], [0, d, 0]]], dtype=float)
    scenario = make_scenario(ZONES_4[:2], q=1)
    gamma = 100.0 * LAM**2 * 8 / (16 * np.pi**2 * 1e-8 * 2 * d**2)
    assert rate_upper_bound(scenario, 8, batch) == pytest.approx(
        np.log2(1 + gamma), rel=1e-12
    )


def test_upper_bound_dominates_random_layouts():
    rng = np.random.default_rng(9)
    scenario = make_scenario(ZONES_4, q=40)
    batch = sample_batch(scenario)
    bound = rate_upper_bound(scenario, 8, batch)
    from conftest import random_feasible_layout

    for _ in range(10):
        layout = random_feasible_layout(rng, 8)
        assert expected_min_rate(layout, scenario, batch) <= bound + 1e-12


def test_expected_min_rate_monotone_in_power():
    layout = build_upa(8, LAM / 2, REGION, LAM)
    values = []
    for power in (10.0, 100.0, 1000.0):
        scenario = make_scenario(ZONES_4, q=30, power=power)
        values.append(expected_min_rate(layout, scenario))
    assert values[0] < values[1] < values[2]


def test_channel_matrix_column_magnitudes():
    layout = build_upa(8, LAM / 2, REGION, LAM)
    pts = sample_user_locations(make_scenario(ZONES_4, q=1), 0)
    h = channel_matrix(layout, pts)
    for k, p in enumerate(pts):
        expected = LAM / (4 * np.pi * np.linalg.norm(p))
        np.testing.assert_allclose(np.abs(h[:, k]), expected, rtol=1e-12)
