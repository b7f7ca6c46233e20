"""Hybrid embedded Markov chain: which service state each file starts in,
and the mean service time given that start state.

Embedded points are service-state transitions and start-of-service epochs.
``Qhat`` maps the start-state distribution of the m-th file behind the
head-of-line file to that of the (m+1)-th; it is column stochastic with
eigenvalues {1, beta, 0} and an all-zero first row.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import SystemParams, derive_rates, steady_state
from .errors import SingularSystemError
from .qbd import QueueSolution, generating_function

SERVICE_TIME_RTOL = 1e-10


@dataclass(frozen=True)
class EmbeddedChain:
    Qhat: np.ndarray
    beta: float
    theta: np.ndarray
    params: SystemParams

    @property
    def split_to_cellular(self) -> float:
        """f_01 / (f_01 + f_02): chance the delayed state exits to cellular."""
        r = derive_rates(self.params.channel, self.params.policy)
        return r.f_01 / (r.f_01 + r.f_02)


@dataclass(frozen=True)
class StartServiceProbs:
    pi_hat: np.ndarray
    method: str
    error_bound: float = 0.0
    discrepancy: np.ndarray | None = None


@dataclass(frozen=True)
class ServiceTimes:
    ET: np.ndarray
    ET_mean: float | None = None
    ET_linear_solve: np.ndarray | None = None


def _beta(params: SystemParams) -> float:
    R = params.channel.wifi_ratio
    f = params.channel.mobility
    g = 1.0 - R + params.tau * f
    mu1, mu2 = params.mu1, params.mu2
    num = R * (1.0 - R) * g * mu1 * mu2
    return num / ((1.0 - R) ** 2 * f * mu1 + R * g * f * mu2 + num)


def build_chain(params: SystemParams) -> EmbeddedChain:
    r = derive_rates(params.channel, params.policy)
    mu1, mu2 = params.mu1, params.mu2
    beta = _beta(params)
    a = r.f_01 / (r.f_01 + r.f_02)
    b = r.f_02 / (r.f_01 + r.f_02)
    x = r.f_20 / mu2
    y = r.f_12 / mu1
    qhat = beta * np.array(
        [
            [0.0, 0.0, 0.0],
            [a * (1.0 + x), 1.0 + a * x, a * x],
            [y + b, y, 1.0 + y],
        ]
    )
    pi = steady_state(params.channel, params.policy)
    weights = pi * params.mu
    return EmbeddedChain(qhat, beta, weights / weights.sum(), params)


def step_start_state(chain: EmbeddedChain, prev: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One step of the element-wise start-state recursion.

    ``prev`` is the start-state distribution of file m-1. Returns
    (pi_hat(m), phi_hat(m-1)), where phi_hat(m-1) is the probability that the
    state switches into j while file m-1 is in service. Transitions form the
    cycle 0 -> 1 -> 2 -> 0 plus the chord 0 -> 2, solved exactly.
    """
    r = derive_rates(chain.params.channel, chain.params.policy)
    mu1, mu2 = chain.params.mu1, chain.params.mu2
    a = r.f_01 / (r.f_01 + r.f_02)
    c1 = r.f_12 / (mu1 + r.f_12)
    c2 = r.f_20 / (mu2 + r.f_20)
    p0, p1, p2 = prev
    # phi0 = c2 (p2 + phi2), phi1 = a (p0 + phi0),
    # phi2 = (1 - a)(p0 + phi0) + c1 (p1 + phi1); eliminate to phi0
    k = p2 + (1.0 - a) * p0 + c1 * (p1 + a * p0)
    phi0 = c2 * k / (1.0 - c2 * ((1.0 - a) + c1 * a))
    phi1 = a * (p0 + phi0)
    phi2 = (1.0 - a) * (p0 + phi0) + c1 * (p1 + phi1)
    nxt = np.array([0.0, (1.0 - c1) * (p1 + phi1), (1.0 - c2) * (p2 + phi2)])
    return nxt, np.array([phi0, phi1, phi2])


def iterate_start_state(chain: EmbeddedChain, start: np.ndarray, m: int) -> np.ndarray:
    """pi_hat(0..m) from the element-wise recursion; shape (m+1, 3)."""
    out = np.empty((m + 1, 3))
    out[0] = start
    for i in range(1, m + 1):
        out[i], _ = step_start_state(chain, out[i - 1])
    return out


def closed_form_start_state(chain: EmbeddedChain, start: np.ndarray, m: int) -> np.ndarray:
    """pi_hat(m) for m >= 1 from the spectral closed form (eigenvalues 1, beta)."""
    if m == 0:
        return np.asarray(start, dtype=float).copy()
    t1, t2 = chain.theta[1], chain.theta[2]
    b = 1.0 - chain.split_to_cellular
    s0, s1, s2 = start
    bm = chain.beta**m
    drift = (t2 - b) * bm * s0 + t2 * bm * s1 - t1 * bm * s2
    return np.array([0.0, t1 + drift, t2 - drift])


def start_service_recursion(sol: QueueSolution, chain: EmbeddedChain) -> StartServiceProbs:
    """Start-state probabilities seen by an arriving file (PASTA).

    pi_hat = sum_n p_n pi_hat_n(n) = sum_n Qhat^n p[n, :], accumulated by a
    backward pass of the recursion over the whole truncation range.
    """
    sol.require_converged()
    qhat = np.ascontiguousarray(chain.Qhat)
    pi_hat = kernels.start_service_sum(qhat, np.ascontiguousarray(sol.p))
    return StartServiceProbs(pi_hat, "recursion", error_bound=sol.tail_mass)


def start_service_closed_form(
    sol: QueueSolution,
    chain: EmbeddedChain,
    reference: StartServiceProbs | None = None,
    corrected: bool = False,
) -> StartServiceProbs:
    """Closed form through G_j(beta) and p00.

    As printed, the last term of pi_hat_2 is -(1-R)/(tau f+1-R) p00, which
    breaks normalization. ``corrected=True`` uses tau f/(tau f+1-R) instead,
    the coefficient that the derivation from the start-state closed form gives.
    """
    params = chain.params
    R = params.channel.wifi_ratio
    tf = params.tau * params.channel.mobility
    g = tf + 1.0 - R
    t1, t2 = chain.theta[1], chain.theta[2]
    G = [generating_function(sol, j, chain.beta)[0] for j in range(3)]
    p00 = sol.p[0, 0]
    drift = (t2 - tf / g) * G[0] + t2 * G[1] - t1 * G[2]
    last2 = tf / g if corrected else (1.0 - R) / g
    pi_hat = np.array(
        [p00, t1 + drift - (1.0 - R) / g * p00, t2 - drift - last2 * p00]
    )
    if reference is None:
        reference = start_service_recursion(sol, chain)
    method = "closed_form_corrected" if corrected else "closed_form"
    return StartServiceProbs(
        pi_hat, method, error_bound=sol.tail_mass, discrepancy=pi_hat - reference.pi_hat
    )


def _service_times_closed(params: SystemParams) -> np.ndarray:
    R = params.channel.wifi_ratio
    f = params.channel.mobility
    tau = params.tau
    mu1, mu2 = params.mu1, params.mu2
    g = tau * f + 1.0 - R
    den = (1 - R) ** 2 * f * mu1 + R * g * f * mu2 + R * (1 - R) * g * mu1 * mu2
    head = tau * f**2 + (1 - R) * f
    return np.array(
        [
            head + (1 - R) * tau * f * mu1 + R * (1 - R) * g * mu2
            + R * (1 - R) ** 2 * tau * mu1 * mu2,
            head + R * (1 - R) * g * mu2,
            head + R * (1 - R) ** 2 * mu1 + (1 - R) * tau * f * mu1,
        ]
    ) / den


def _service_times_linear(params: SystemParams) -> np.ndarray:
    """First-step equations for E[T_j] solved as a 3x3 linear system."""
    r = derive_rates(params.channel, params.policy)
    mu1, mu2 = params.mu1, params.mu2
    out0 = r.f_01 + r.f_02
    a = np.array(
        [
            [1.0, -r.f_01 / out0, -r.f_02 / out0],
            [0.0, 1.0, -r.f_12 / (mu1 + r.f_12)],
            [-r.f_20 / (mu2 + r.f_20), 0.0, 1.0],
        ]
    )
    rhs = np.array([1.0 / out0, 1.0 / (mu1 + r.f_12), 1.0 / (mu2 + r.f_20)])
    try:
        return np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc


def mean_service_times(params: SystemParams, pi_hat: np.ndarray | None = None) -> ServiceTimes:
    """E[T_j] in closed form, checked against the linear first-step system.

    E[T] = sum_j pi_hat_j E[T_j] is filled in when ``pi_hat`` is given.
    """
    closed = _service_times_closed(params)
    direct = _service_times_linear(params)
    if not np.allclose(closed, direct, rtol=SERVICE_TIME_RTOL, atol=0.0):
        raise SingularSystemError(
            f"service-time closed form {closed} disagrees with linear solve {direct}"
        )
    mean = None if pi_hat is None else float(np.dot(pi_hat, closed))
    return ServiceTimes(closed, mean, direct)
