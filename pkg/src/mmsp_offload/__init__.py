"""Delayed Wi-Fi offloading as an M/MMSP/1 queue: closed forms, the joint
(queue length, service state) chain, and a discrete-event simulator."""
from ._accel import BACKEND
from .channel import (
    ChannelParams,
    OffloadPolicy,
    ServiceStateRates,
    SystemParams,
    average_rate,
    derive_rates,
    is_stable,
    steady_state,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    InstabilityError,
    OffloadError,
    SingularSystemError,
)
from .metrics import PerfReport, evaluate, known_discrepancies
from .scenarios import PRESETS, Scenario

__all__ = [
    "BACKEND",
    "ChannelParams",
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "InstabilityError",
    "OffloadError",
    "OffloadPolicy",
    "PRESETS",
    "PerfReport",
    "Scenario",
    "ServiceStateRates",
    "SingularSystemError",
    "SystemParams",
    "average_rate",
    "derive_rates",
    "evaluate",
    "is_stable",
    "known_discrepancies",
    "steady_state",
]
