"""Markov channel, delayed-offloading policy, and the three-state service
process they induce (0 = delayed, 1 = cellular, 2 = Wi-Fi)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DELAYED, CELLULAR, WIFI = 0, 1, 2


def _check_rate(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class ChannelParams:
    """Two-state Markov channel: C (cellular only) and F (Wi-Fi available).

    f_C is the rate of leaving C, f_F the rate of leaving F.
    """

    f_C: float
    f_F: float

    def __post_init__(self):
        _check_rate("f_C", self.f_C)
        _check_rate("f_F", self.f_F)

    @property
    def mobility(self) -> float:
        """f = 1 / (1/f_F + 1/f_C)."""
        return self.f_C * self.f_F / (self.f_C + self.f_F)

    @property
    def wifi_ratio(self) -> float:
        """R, the long-run fraction of time Wi-Fi is available."""
        return self.f_C / (self.f_C + self.f_F)

    @classmethod
    def from_ratio_mobility(cls, R: float, f: float) -> "ChannelParams":
        """Channel with the given Wi-Fi ratio and mobility (f_F = f/R, f_C = f/(1-R))."""
        if not 0 < R < 1:
            raise ValueError(f"R must lie in (0, 1), got {R!r}")
        _check_rate("f", f)
        return cls(f_C=f / (1.0 - R), f_F=f / R)


@dataclass(frozen=True)
class OffloadPolicy:
    """Exponential deadline with mean ``tau`` seconds for the delayed state."""

    tau: float

    def __post_init__(self):
        _check_rate("tau", self.tau)

    @property
    def f_D(self) -> float:
        return 1.0 / self.tau


@dataclass(frozen=True)
class SystemParams:
    channel: ChannelParams
    policy: OffloadPolicy
    mu1: float
    mu2: float
    lam: float

    def __post_init__(self):
        _check_rate("mu1", self.mu1)
        _check_rate("mu2", self.mu2)
        _check_rate("lambda", self.lam)

    @property
    def mu(self) -> np.ndarray:
        """Service rate per state; the delayed state serves nothing."""
        return np.array([0.0, self.mu1, self.mu2])

    @property
    def tau(self) -> float:
        return self.policy.tau

    @classmethod
    def build(cls, f_C, f_F, tau, mu1, mu2, lam) -> "SystemParams":
        return cls(ChannelParams(f_C, f_F), OffloadPolicy(tau), mu1, mu2, lam)

    def with_tau(self, tau: float) -> "SystemParams":
        return SystemParams(self.channel, OffloadPolicy(tau), self.mu1, self.mu2, self.lam)


@dataclass(frozen=True)
class ServiceStateRates:
    """The four nonzero transition rates of the service-state process."""

    f_20: float
    f_01: float
    f_02: float
    f_12: float

    def generator(self) -> np.ndarray:
        """3x3 generator over {delayed, cellular, Wi-Fi}."""
        q = np.array(
            [
                [0.0, self.f_01, self.f_02],
                [0.0, 0.0, self.f_12],
                [self.f_20, 0.0, 0.0],
            ]
        )
        q[np.diag_indices(3)] = -q.sum(axis=1)
        return q


def derive_rates(channel: ChannelParams, policy: OffloadPolicy) -> ServiceStateRates:
    return ServiceStateRates(
        f_20=channel.f_F, f_01=policy.f_D, f_02=channel.f_C, f_12=channel.f_C
    )


def steady_state(channel: ChannelParams, policy: OffloadPolicy) -> np.ndarray:
    """Closed-form stationary probabilities (pi0, pi1, pi2) of the service states."""
    R = channel.wifi_ratio
    tf = policy.tau * channel.mobility
    denom = tf + 1.0 - R
    return np.array([(1.0 - R) * tf / denom, (1.0 - R) ** 2 / denom, R])


def average_rate(params: SystemParams) -> float:
    """Long-run service capacity pi1*mu1 + pi2*mu2."""
    pi = steady_state(params.channel, params.policy)
    return float(pi[1] * params.mu1 + pi[2] * params.mu2)


def is_stable(params: SystemParams) -> tuple[bool, float]:
    """(stable, rho) with rho = lambda / mu_hat; stable iff rho < 1."""
    rho = params.lam / average_rate(params)
    return rho < 1.0, rho
