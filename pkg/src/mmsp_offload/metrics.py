"""Mean waiting time, mean delay, offloading efficiency and the large-deadline
delay asymptote, each available by more than one route."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels, qbd
from .channel import SystemParams, average_rate, steady_state
from .embedded import (
    EmbeddedChain,
    build_chain,
    mean_service_times,
    start_service_closed_form,
    start_service_recursion,
)
from .errors import DomainError, InstabilityError

READINGS = ("corrected", "literal")


def _require_stable(params: SystemParams) -> float:
    mu_hat = average_rate(params)
    if params.lam >= mu_hat:
        raise InstabilityError(
            f"lambda={params.lam:.6g} >= mean service rate {mu_hat:.6g}"
        )
    return params.lam / mu_hat


def waiting_time_closed_form(
    params: SystemParams,
    chain: EmbeddedChain,
    pi_hat: np.ndarray,
    ET: np.ndarray,
    reading: str = "corrected",
) -> float:
    """Closed-form mean wait.

    ``reading="corrected"`` weights the start-state correction by E[T_j];
    ``"literal"`` uses the overall E[T], which makes that sum vanish and
    is kept only as a diagnostic.
    """
    if reading not in READINGS:
        raise ValueError(f"reading must be one of {READINGS}, got {reading!r}")
    rho = _require_stable(params)
    pi = steady_state(params.channel, params.policy)
    R = params.channel.wifi_ratio
    f = params.channel.mobility
    tau = params.tau
    beta = chain.beta
    et_mean = float(np.dot(pi_hat, ET))
    weights = ET if reading == "corrected" else np.full(3, et_mean)
    residual = float(np.dot(weights, pi - pi_hat)) / (1.0 - beta)
    delayed = beta / (1.0 - beta) * (1.0 - R) * tau / (1.0 - R + tau * f) * (pi[0] - pi_hat[0])
    return (rho * et_mean + residual - delayed) / (1.0 - rho)


def waiting_time_recursion(sol: qbd.QueueSolution, chain: EmbeddedChain, ET: np.ndarray) -> float:
    """Mean wait averaged over the (n, j) an arrival sees.

    A file that finds n files ahead waits for the residual service of the
    head-of-line file plus n-1 full services, whose start states follow the
    embedded chain.
    """
    sol.require_converged()
    return float(
        kernels.waiting_time_sum(
            np.ascontiguousarray(chain.Qhat),
            np.ascontiguousarray(ET, dtype=float),
            np.ascontiguousarray(sol.p),
        )
    )


def mean_delay(W: float, ET_mean: float) -> float:
    return W + ET_mean


def delay_via_little(sol: qbd.QueueSolution, lam: float) -> float:
    """Mean system time L / lambda, L counting the file in service."""
    return sol.mean_queue_length / lam


def efficiency(sol: qbd.QueueSolution, params: SystemParams) -> float:
    """Share of files delivered over Wi-Fi: mu2 (pi2 - p02) / lambda."""
    pi2 = params.channel.wifi_ratio
    return params.mu2 / params.lam * (pi2 - sol.p[0, 2])


def asymptotic_delay(params: SystemParams) -> float:
    """Mean delay as the deadline grows without bound (Wi-Fi rate mu2)."""
    R = params.channel.wifi_ratio
    f = params.channel.mobility
    mu = params.mu2
    if params.lam >= R * mu:
        raise DomainError(
            f"asymptote undefined: lambda={params.lam:.6g} >= R*mu2={R * mu:.6g}"
        )
    return (1.0 + R * (1.0 - R) ** 2 * mu / f) / (R * mu - params.lam)


@dataclass
class PerfReport:
    f_C: float
    f_F: float
    tau: float
    lam: float
    mu1: float
    mu2: float
    R: float
    f: float
    mu_hat: float
    rho: float
    stable: bool
    pi: np.ndarray
    beta: float
    theta: np.ndarray
    pi_hat: np.ndarray
    ET: np.ndarray
    ET_mean: float
    W: float
    W_closed: float
    D: float
    D_little: float
    eta: float
    D_star: float
    p_empty: np.ndarray
    L: float
    N: int
    tail_mass: float
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Flat mapping; vectors become name0, name1, name2."""
        out = {}
        for key, value in asdict(self).items():
            if key == "provenance":
                continue
            if isinstance(value, np.ndarray):
                for i, v in enumerate(value):
                    out[f"{key}{i}"] = float(v)
            elif isinstance(value, (bool, np.bool_)):
                out[key] = bool(value)
            elif isinstance(value, (int, np.integer)):
                out[key] = int(value)
            else:
                out[key] = float(value)
        out["provenance"] = dict(self.provenance)
        return out


PROVENANCE = {
    "pi": "closed_form",
    "mu_hat": "closed_form",
    "beta": "closed_form",
    "theta": "closed_form",
    "pi_hat": "recursion over CTMC solution",
    "ET": "closed_form (checked by linear solve)",
    "ET_mean": "closed_form + recursion pi_hat",
    "W": "recursion over CTMC solution",
    "W_closed": "closed_form (corrected reading)",
    "D": "W + ET_mean",
    "D_little": "CTMC mean queue length / lambda",
    "eta": "closed_form with CTMC p02",
    "D_star": "closed_form asymptote",
    "p_empty": "CTMC",
    "L": "CTMC",
}


def evaluate(params: SystemParams, tol: float = qbd.DEFAULT_TOL) -> PerfReport:
    """Full analytic pipeline for one parameter point."""
    rho = _require_stable(params)
    sol = qbd.solve(params, tol)
    chain = build_chain(params)
    pi_hat = start_service_recursion(sol, chain).pi_hat
    st = mean_service_times(params, pi_hat)
    W = waiting_time_recursion(sol, chain, st.ET)
    W_closed = waiting_time_closed_form(params, chain, pi_hat, st.ET)
    try:
        d_star = asymptotic_delay(params)
    except DomainError:
        d_star = math.nan
    return PerfReport(
        f_C=params.channel.f_C,
        f_F=params.channel.f_F,
        tau=params.tau,
        lam=params.lam,
        mu1=params.mu1,
        mu2=params.mu2,
        R=params.channel.wifi_ratio,
        f=params.channel.mobility,
        mu_hat=average_rate(params),
        rho=rho,
        stable=True,
        pi=steady_state(params.channel, params.policy),
        beta=chain.beta,
        theta=chain.theta,
        pi_hat=pi_hat,
        ET=st.ET,
        ET_mean=st.ET_mean,
        W=W,
        W_closed=W_closed,
        D=mean_delay(W, st.ET_mean),
        D_little=delay_via_little(sol, params.lam),
        eta=efficiency(sol, params),
        D_star=d_star,
        p_empty=sol.p[0].copy(),
        L=sol.mean_queue_length,
        N=sol.N,
        tail_mass=sol.tail_mass,
        provenance=dict(PROVENANCE),
    )


def known_discrepancies(params: SystemParams, tol: float = qbd.DEFAULT_TOL) -> dict:
    """Machine-readable comparison of the printed closed forms with the
    recursion results.

    Covers the start-state closed form (verbatim and with the corrected
    pi_hat_2 coefficient) and the mean wait (literal and corrected readings).
    """
    sol = qbd.solve(params, tol)
    chain = build_chain(params)
    rec = start_service_recursion(sol, chain)
    verbatim = start_service_closed_form(sol, chain, rec)
    fixed = start_service_closed_form(sol, chain, rec, corrected=True)
    st = mean_service_times(params, rec.pi_hat)
    W_rec = waiting_time_recursion(sol, chain, st.ET)
    W_corr = waiting_time_closed_form(params, chain, rec.pi_hat, st.ET, "corrected")
    W_lit = waiting_time_closed_form(params, chain, rec.pi_hat, st.ET, "literal")
    return {
        "params": {
            "f_C": params.channel.f_C,
            "f_F": params.channel.f_F,
            "tau": params.tau,
            "lambda": params.lam,
            "mu1": params.mu1,
            "mu2": params.mu2,
        },
        "start_service": {
            "recursion": rec.pi_hat.tolist(),
            "closed_form_verbatim": verbatim.pi_hat.tolist(),
            "closed_form_corrected": fixed.pi_hat.tolist(),
            "verbatim_sum": float(verbatim.pi_hat.sum()),
            "corrected_sum": float(fixed.pi_hat.sum()),
            "max_abs_diff_verbatim": float(np.max(np.abs(verbatim.discrepancy))),
            "max_abs_diff_corrected": float(np.max(np.abs(fixed.discrepancy))),
        },
        "waiting_time": {
            "recursion": W_rec,
            "closed_form_corrected": W_corr,
            "closed_form_literal": W_lit,
            "rel_diff_corrected": abs(W_corr - W_rec) / W_rec,
            "rel_diff_literal": abs(W_lit - W_rec) / W_rec,
        },
    }
