"""Rate model checks: exact anchors, a high-precision oracle, bound/shape."""

import mpmath
import numpy as np
import pytest

from wpcnsim.capacity import CapacityParams, capacity_cap, clip_gain_sq, link_capacity, rate_slope


PARAMS = CapacityParams(bandwidth=1e4, noise_psd=10 ** (-16.5), g_max_sq=1e-6)


def capacity_oracle(power, gain_sq, params, dps=50):
    """Same formula at 50 decimal digits."""
    with mpmath.workdps(dps):
        snr = mpmath.mpf(power) * mpmath.mpf(gain_sq) / (
            mpmath.mpf(params.bandwidth) * mpmath.mpf(params.noise_psd)
        )
        return float(params.bandwidth * mpmath.log(1 + snr) / mpmath.log(2))


def test_zero_power_gives_zero_rate():
    assert link_capacity(0.0, 1e-7, PARAMS) == 0.0
    assert link_capacity(0.0, 0.0, PARAMS) == 0.0


def test_unit_snr_gives_exactly_bandwidth():
    # power * gain_sq == bandwidth * noise_psd  =>  one bit per slot per Hz
    p = PARAMS.bandwidth * PARAMS.noise_psd / 1e-7
    assert link_capacity(p, 1e-7, PARAMS) == PARAMS.bandwidth


@pytest.mark.parametrize("seed", range(5))
def test_matches_high_precision_oracle(seed):
    rng = np.random.default_rng(seed)
    for _ in range(40):
        p = rng.uniform(0, 4e-6)
        g2 = rng.uniform(0, 1e-6)
        want = capacity_oracle(p, g2, PARAMS)
        got = link_capacity(p, g2, PARAMS)
        assert got == pytest.approx(want, rel=1e-12)


def test_operating_point_against_oracle():
    want = capacity_oracle(4e-6, 1e-6, PARAMS)
    got = link_capacity(4e-6, 1e-6, PARAMS)
    assert got == pytest.approx(want, rel=1e-13)
    # and the slope bound comfortably dominates at this point
    assert got < rate_slope(PARAMS) * 4e-6


def test_rate_never_exceeds_linear_slope():
    rng = np.random.default_rng(123)
    p = rng.uniform(0, 4e-6, 10_000)
    g2, _ = clip_gain_sq(rng.uniform(0, 2e-6, 10_000), PARAMS)
    rate = link_capacity(p, g2, PARAMS)
    assert np.all(rate <= rate_slope(PARAMS) * p)


def test_monotone_in_power_and_gain():
    p = np.linspace(0, 4e-6, 200)
    r = link_capacity(p, 5e-7, PARAMS)
    assert np.all(np.diff(r) > 0)
    g = np.linspace(0, 1e-6, 200)
    r = link_capacity(2e-6, g, PARAMS)
    assert np.all(np.diff(r) > 0)


def test_concave_in_power():
    rng = np.random.default_rng(9)
    for _ in range(200):
        p1, p2 = sorted(rng.uniform(0, 4e-6, 2))
        g2 = rng.uniform(1e-8, 1e-6)
        mid = link_capacity(0.5 * (p1 + p2), g2, PARAMS)
        chord = 0.5 * (link_capacity(p1, g2, PARAMS) + link_capacity(p2, g2, PARAMS))
        assert mid >= chord - 1e-9 * max(chord, 1.0)


def test_gain_clipping_counts_and_caps():
    g2 = np.array([0.5e-6, 1e-6, 3e-6, 9e-6])
    clipped, n = clip_gain_sq(g2, PARAMS)
    assert n == 2
    np.testing.assert_array_equal(clipped, [0.5e-6, 1e-6, 1e-6, 1e-6])
    # scalar path
    c, n = clip_gain_sq(5e-6, PARAMS)
    assert c == 1e-6 and n == 1


def test_capacity_cap_is_rate_at_both_maxima():
    p_max = 4e-6
    assert capacity_cap(PARAMS, p_max) == link_capacity(p_max, PARAMS.g_max_sq, PARAMS)
    # clipped draws at peak power never beat it
    rng = np.random.default_rng(5)
    g2, _ = clip_gain_sq(rng.uniform(0, 4e-6, 1000), PARAMS)
    assert np.all(link_capacity(p_max, g2, PARAMS) <= capacity_cap(PARAMS, p_max))


def test_rate_depends_only_on_own_link():
    # vectorized evaluation must equal independent scalar evaluation
    rng = np.random.default_rng(2)
    p = rng.uniform(0, 4e-6, 50)
    g2 = rng.uniform(0, 1e-6, 50)
    vec = link_capacity(p, g2, PARAMS)
    for i in range(50):
        assert vec[i] == link_capacity(p[i], g2[i], PARAMS)


def test_rejects_bad_params_and_inputs():
    with pytest.raises(ValueError):
        CapacityParams(bandwidth=0.0, noise_psd=1e-17, g_max_sq=1e-6)
    with pytest.raises(ValueError):
        CapacityParams(bandwidth=1e4, noise_psd=-1e-17, g_max_sq=1e-6)
    with pytest.raises(ValueError):
        link_capacity(-1e-9, 1e-7, PARAMS)
