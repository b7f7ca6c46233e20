import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import PED, VEH, make
from strategies import log_mu, log_rate, log_tau, stable_params

from mmsp_offload import (
    ChannelParams,
    OffloadPolicy,
    SystemParams,
    average_rate,
    derive_rates,
    is_stable,
    steady_state,
)
from mmsp_offload.scenarios import PRESETS


def test_presets_are_hard_coded_constants():
    assert PRESETS["pedestrian"].channel == ChannelParams(0.007, 0.016)
    assert PRESETS["vehicular"].channel == ChannelParams(0.035, 0.079)
    for sc in PRESETS.values():
        assert (sc.mu1, sc.mu2, sc.lam) == (0.564, 0.564, 0.1)


def test_ratio_and_mobility_of_presets():
    assert PED.wifi_ratio == pytest.approx(0.304348, abs=1e-6)
    assert PED.mobility == pytest.approx(0.0048696, rel=1e-4)
    assert VEH.wifi_ratio == pytest.approx(0.307018, abs=1e-6)
    assert VEH.mobility == pytest.approx(0.0242544, rel=1e-4)


def test_steady_state_pedestrian_frozen():
    # null vector of the 3x3 generator (tests/_oracle.py); the often-quoted
    # 0.286612 / 0.409040 are arithmetic slips
    pi = steady_state(PED, OffloadPolicy(100.0))
    np.testing.assert_allclose(pi, [0.286445012788, 0.409207161125, 0.304347826087], atol=1e-11)


def test_average_rate_frozen():
    assert average_rate(make()) == pytest.approx(0.40244501278772, rel=1e-12)


def test_rates_follow_policy():
    r = derive_rates(PED, OffloadPolicy(50.0))
    assert (r.f_20, r.f_01, r.f_02, r.f_12) == (0.016, 0.02, 0.007, 0.007)


def test_generator_forbids_backward_switches():
    q = derive_rates(PED, OffloadPolicy(5.0)).generator()
    assert q[1, 0] == 0.0 and q[2, 1] == 0.0
    np.testing.assert_allclose(q.sum(axis=1), 0.0, atol=1e-15)


def test_tiny_deadline_approaches_no_delay_chain():
    pi = steady_state(PED, OffloadPolicy(1e-9))
    R = PED.wifi_ratio
    np.testing.assert_allclose(pi, [0.0, 1 - R, R], atol=1e-8)


def test_huge_deadline_drives_cellular_share_to_zero():
    pi = steady_state(PED, OffloadPolicy(1e9))
    assert pi[1] < 1e-6
    assert pi[2] == pytest.approx(PED.wifi_ratio)


def test_stability_flag():
    ok, rho = is_stable(make())
    assert ok and rho == pytest.approx(0.1 / 0.40244501278772)
    bad, rho = is_stable(make(tau=1e6, lam=0.6))
    assert not bad and rho > 1


@pytest.mark.parametrize("kwargs", [dict(f_C=0.0, f_F=1.0), dict(f_C=1.0, f_F=-2.0),
                                    dict(f_C=float("nan"), f_F=1.0)])
def test_channel_rejects_bad_rates(kwargs):
    with pytest.raises(ValueError):
        ChannelParams(**kwargs)


def test_policy_and_system_validation():
    with pytest.raises(ValueError):
        OffloadPolicy(0.0)
    with pytest.raises(ValueError):
        SystemParams(PED, OffloadPolicy(1.0), 0.5, 0.5, 0.0)
    with pytest.raises(ValueError):
        ChannelParams.from_ratio_mobility(1.2, 0.01)


@given(st.floats(0.01, 0.99), log_rate)
def test_ratio_mobility_round_trip(R, f):
    ch = ChannelParams.from_ratio_mobility(R, f)
    assert ch.wifi_ratio == pytest.approx(R, rel=1e-12)
    assert ch.mobility == pytest.approx(f, rel=1e-12)


@given(log_rate, log_rate, log_tau)
def test_steady_state_is_generator_null_vector(f_C, f_F, tau):
    ch = ChannelParams(f_C, f_F)
    policy = OffloadPolicy(tau)
    pi = steady_state(ch, policy)
    q = derive_rates(ch, policy).generator()
    assert pi.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(pi >= 0)
    assert pi[2] == pytest.approx(ch.wifi_ratio, rel=1e-12)
    np.testing.assert_allclose(pi @ q, 0.0, atol=1e-12 * np.abs(q).max())


@given(log_rate, log_rate, log_mu, log_mu)
def test_average_rate_decreases_with_deadline(f_C, f_F, mu1, mu2):
    ch = ChannelParams(f_C, f_F)
    rates = [average_rate(SystemParams(ch, OffloadPolicy(t), mu1, mu2, 0.1))
             for t in (0.1, 1.0, 10.0, 100.0)]
    assert all(a >= b - 1e-12 for a, b in zip(rates, rates[1:]))


@given(stable_params())
def test_sampled_points_are_stable(params):
    ok, rho = is_stable(params)
    assert ok and 0 < rho < 1
