import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PED, VEH, make
from strategies import stable_params

from mmsp_offload import qbd
from mmsp_offload.embedded import (
    build_chain,
    closed_form_start_state,
    iterate_start_state,
    mean_service_times,
    start_service_closed_form,
    start_service_recursion,
    step_start_state,
)

simplex = st.lists(st.floats(0.0, 1.0), min_size=3, max_size=3).filter(
    lambda v: sum(v) > 1e-3
).map(lambda v: np.array(v) / sum(v))


def test_beta_without_deadline_frozen():
    # second eigenvalue of the transfer matrix, tau -> 0 (tests/_oracle.py style eigen solve)
    assert build_chain(make(tau=1e-9)).beta == pytest.approx(0.9608177172063, rel=1e-10)


def test_service_times_frozen():
    # fundamental-matrix oracle (tests/_oracle.py)
    st_ = mean_service_times(make())
    np.testing.assert_allclose(st_.ET, [61.284408879228, 1.793175474952, 3.41474231391], rtol=1e-11)
    st_ = mean_service_times(make(VEH, 10.0, 10.0, 1.28))
    np.testing.assert_allclose(st_.ET, [7.792507423962, 0.103797582855, 1.188821255698], rtol=1e-11)


def test_start_state_split_tracks_recursion_frozen(ped100):
    sol = qbd.solve(ped100)
    rec = start_service_recursion(sol, build_chain(ped100))
    np.testing.assert_allclose(rec.pi_hat, [0.03135885, 0.55844576, 0.41019539], atol=5e-9)
    assert rec.pi_hat[0] == pytest.approx(sol.p[0, 0], rel=1e-12)


def test_printed_closed_form_breaks_normalization(ped100):
    sol = qbd.solve(ped100)
    chain = build_chain(ped100)
    verbatim = start_service_closed_form(sol, chain)
    fixed = start_service_closed_form(sol, chain, corrected=True)
    assert abs(verbatim.pi_hat.sum() - 1.0) > 1e-3
    assert fixed.pi_hat.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(fixed.discrepancy)) < 1e-10


def test_phi_balance_within_one_service(ped100):
    chain = build_chain(ped100)
    prev = np.array([0.2, 0.5, 0.3])
    nxt, phi = step_start_state(chain, prev)
    # every entry into a state is matched by a service end or an exit
    assert nxt.sum() == pytest.approx(1.0, abs=1e-14)
    assert nxt[0] == 0.0
    assert np.all(phi >= 0)


def test_expected_switch_count_can_exceed_one():
    # phi is an expected number of entries, not a probability
    params = make(PED, 100.0, mu1=1e-3, mu2=1e-3, lam=1e-4)
    _, phi = step_start_state(build_chain(params), np.array([0.0, 0.0, 1.0]))
    assert phi.max() > 1.0


@settings(max_examples=80)
@given(stable_params())
def test_transfer_matrix_structure(params):
    chain = build_chain(params)
    q = chain.Qhat
    assert 0.0 < chain.beta < 1.0
    assert np.all(q >= 0) and np.all(q[0] == 0)
    np.testing.assert_allclose(q.sum(axis=0), 1.0, atol=1e-12)
    ev = np.sort(np.linalg.eigvals(q).real)
    np.testing.assert_allclose(ev, [0.0, chain.beta, 1.0], atol=1e-9)
    np.testing.assert_allclose(q @ chain.theta, chain.theta, atol=1e-12)
    assert chain.theta[0] == 0.0


@settings(max_examples=80)
@given(stable_params(), simplex, st.integers(1, 50))
def test_closed_form_matches_iteration(params, start, m):
    chain = build_chain(params)
    it = iterate_start_state(chain, start, m)
    np.testing.assert_allclose(closed_form_start_state(chain, start, m), it[m], atol=1e-10)
    np.testing.assert_allclose(it[1:], (np.linalg.matrix_power(chain.Qhat, 1) @ it[:-1].T).T,
                               atol=1e-12)


@given(stable_params())
def test_service_times_agree(params):
    st_ = mean_service_times(params)
    np.testing.assert_allclose(st_.ET, st_.ET_linear_solve, rtol=1e-10)
    assert np.all(st_.ET > 0)


@settings(max_examples=40)
@given(stable_params())
def test_start_state_probabilities_form_distribution(params):
    sol = qbd.solve(params)
    chain = build_chain(params)
    rec = start_service_recursion(sol, chain)
    assert rec.pi_hat.sum() == pytest.approx(1.0, abs=1e-8)
    assert np.all((rec.pi_hat >= -1e-15) & (rec.pi_hat <= 1 + 1e-12))
    fixed = start_service_closed_form(sol, chain, rec, corrected=True)
    np.testing.assert_allclose(fixed.pi_hat, rec.pi_hat, atol=1e-8)


@pytest.mark.parametrize("channel", [PED, VEH])
@pytest.mark.parametrize("rates", [(0.564, 0.564), (0.6, 1.28), (10.0, 1.28)])
def test_intermediate_values_bounded_on_scenario_grid(channel, rates):
    # start vectors that actually occur: state law seen with n files present
    for tau in np.logspace(-2, 5, 20):
        params = make(channel, tau, *rates)
        chain = build_chain(params)
        sol = qbd.solve(params)
        for n in range(0, 40, 3):
            cur = sol.p[n] / sol.p[n].sum()
            for _ in range(50):
                cur, phi = step_start_state(chain, cur)
                assert np.all((cur >= 0) & (cur <= 1))
                assert np.all((phi >= 0) & (phi <= 1))


def test_pure_delayed_start_can_count_past_one():
    # from state 0 the Wi-Fi state may be entered twice during one service
    chain = build_chain(make(PED, 1e5))
    _, phi = step_start_state(chain, np.array([1.0, 0.0, 0.0]))
    assert phi[2] > 1.0
