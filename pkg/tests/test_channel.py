"""Array response identities and Rician moment checks (seeded Monte Carlo)."""

import numpy as np
import pytest

from wpcnsim.channel import ChannelConfig, ChannelSampler, path_gain, sample_rician, ula_steering
from wpcnsim.model import NetworkTopology


def small_topology():
    return NetworkTopology(
        n_nodes=3,
        n_antennas=8,
        links=((0, 1), (1, 2)),
        streams=((0, 2),),
        node_angles=(0.0, 0.9, 2.2),
    )


# --- steering vector ---


def test_steering_broadside_is_all_ones():
    np.testing.assert_array_equal(ula_steering(0.0, 6), np.ones(6, dtype=complex))


def test_steering_single_element():
    np.testing.assert_array_equal(ula_steering(1.234, 1), [1.0 + 0j])


def test_steering_endfire_two_elements_alternates_sign():
    a = ula_steering(np.pi / 2, 2, spacing=0.5)
    assert a[0] == 1.0 + 0j
    assert a[1] == pytest.approx(-1.0 + 0j, abs=1e-15)


@pytest.mark.parametrize("seed", range(10))
def test_steering_squared_norm_is_element_count(seed):
    rng = np.random.default_rng(seed)
    angle = rng.uniform(-np.pi, np.pi)
    m = rng.integers(1, 33)
    a = ula_steering(angle, m)
    assert np.sum(np.abs(a) ** 2) == pytest.approx(m, rel=1e-12)


def test_steering_mirror_angle_same_response():
    # the response depends on the angle only through its sine
    a = ula_steering(0.4, 8)
    b = ula_steering(np.pi - 0.4, 8)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


# --- scalar Rician draws ---


def test_pure_los_draw_is_deterministic():
    rng = np.random.default_rng(0)
    los = ula_steering(0.7, 4)
    h = sample_rician(2.5, 1e12, los, rng)
    np.testing.assert_array_equal(h, np.sqrt(2.5) * los)
    # rng untouched on the pure-LOS path
    h2 = sample_rician(2.5, 1e12, los, np.random.default_rng(99))
    np.testing.assert_array_equal(h, h2)


def test_rayleigh_mean_is_near_zero():
    rng = np.random.default_rng(42)
    n = 100_000
    draws = sample_rician(1.0, 0.0, np.ones(n, dtype=complex), rng)
    # each component ~ N(0, 1/(2n)) after averaging
    assert abs(draws.mean()) < 4.0 / np.sqrt(2 * n)


@pytest.mark.parametrize("k", [0.0, 1.0, 5.0])
def test_second_moment_matches_mean_gain(k):
    rng = np.random.default_rng(int(10 * k) + 3)
    n = 100_000
    gain = 3.7e-7
    draws = sample_rician(gain, k, np.exp(1j * 0.3) * np.ones(n), rng)
    assert np.mean(np.abs(draws) ** 2) == pytest.approx(gain, rel=0.02)


def test_los_power_fraction_scales_with_k():
    # with k = 1 the deterministic part carries half the power
    rng = np.random.default_rng(8)
    n = 200_000
    draws = sample_rician(1.0, 1.0, np.ones(n, dtype=complex), rng)
    assert draws.mean() == pytest.approx(np.sqrt(0.5), rel=0.02)


def test_negative_k_rejected():
    with pytest.raises(ValueError):
        sample_rician(1.0, -0.5, 1.0 + 0j, np.random.default_rng(0))


# --- slot sampler ---


def make_sampler(seed, k=1.0):
    topo = small_topology()
    cfg = ChannelConfig(
        data_mean_gains=(1e-7, 2e-7),
        energy_mean_gains=(1e-6, 2e-6, 5e-7),
        rician_k=k,
    )
    return topo, ChannelSampler(topo, cfg, np.random.default_rng(seed))


def test_sampler_is_seed_deterministic():
    _, s1 = make_sampler(123)
    _, s2 = make_sampler(123)
    for _ in range(5):
        g1, h1 = s1.draw()
        g2, h2 = s2.draw()
        np.testing.assert_array_equal(g1, g2)
        np.testing.assert_array_equal(h1, h2)


def test_sampler_draws_fresh_fading_each_slot():
    _, s = make_sampler(5)
    g1, h1 = s.draw()
    g2, h2 = s.draw()
    assert not np.array_equal(g1, g2)
    assert not np.array_equal(h1, h2)


def test_sampler_energy_norm_tracks_antennas_times_gain():
    topo, s = make_sampler(77)
    acc = np.zeros(topo.n_nodes)
    n = 10_000
    for _ in range(n):
        _, h = s.draw()
        acc += np.sum(np.abs(h) ** 2, axis=1)
    want = topo.n_antennas * np.array([1e-6, 2e-6, 5e-7])
    np.testing.assert_allclose(acc / n, want, rtol=0.03)


def test_sampler_pure_los_uses_steering_rows():
    topo, s = make_sampler(1, k=1e15)
    g, h = s.draw()
    for i, angle in enumerate(topo.angles):
        want = np.sqrt(s.config.energy_mean_gains[i]) * ula_steering(angle, topo.n_antennas)
        np.testing.assert_array_equal(h[i], want)
    np.testing.assert_allclose(np.abs(g) ** 2, [1e-7, 2e-7], rtol=1e-15)


def test_sampler_shape_validation():
    topo = small_topology()
    cfg = ChannelConfig(data_mean_gains=(1e-7,), energy_mean_gains=(1e-6, 1e-6, 1e-6))
    with pytest.raises(ValueError):
        ChannelSampler(topo, cfg, np.random.default_rng(0))


def test_path_gain_helper():
    assert path_gain(1.0, 3e-7) == 3e-7
    assert path_gain(2.0, 3e-7) == pytest.approx(7.5e-8)
    assert path_gain(2.0, 3e-7, exponent=3.0) == pytest.approx(3.75e-8)
