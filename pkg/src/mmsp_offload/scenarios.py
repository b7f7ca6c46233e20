"""Named parameter presets and tau-grid parsing."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .channel import ChannelParams, OffloadPolicy, SystemParams
from .errors import ConfigError

DEFAULT_TAU_GRID = tuple(np.logspace(-2, 5, 20))


@dataclass(frozen=True)
class Scenario:
    name: str
    channel: ChannelParams
    mu1: float = 0.564
    mu2: float = 0.564
    lam: float = 0.1
    tau_grid: tuple = field(default=DEFAULT_TAU_GRID)

    def __post_init__(self):
        grid = np.asarray(self.tau_grid, dtype=float)
        if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
            raise ConfigError("tau_grid must be nonempty, positive and strictly increasing")

    def params(self, tau: float) -> SystemParams:
        return SystemParams(self.channel, OffloadPolicy(tau), self.mu1, self.mu2, self.lam)

    def with_rates(self, mu1=None, mu2=None, lam=None) -> "Scenario":
        return replace(
            self,
            mu1=self.mu1 if mu1 is None else mu1,
            mu2=self.mu2 if mu2 is None else mu2,
            lam=self.lam if lam is None else lam,
        )


PRESETS = {
    "pedestrian": Scenario("pedestrian", ChannelParams(f_C=0.007, f_F=0.016)),
    "vehicular": Scenario("vehicular", ChannelParams(f_C=0.035, f_F=0.079)),
}

# rate settings of the equal-rate, mu1 < mu2 and mu1 > mu2 studies
RATE_SETTINGS = ((0.564, 0.564), (0.6, 1.28), (10.0, 1.28))


def parse_tau_grid(text: str) -> tuple:
    """Comma list ("1,10,100") or "logspace:lo:hi:n" with lo, hi in seconds."""
    text = text.strip()
    if text.startswith("logspace:"):
        try:
            _, lo, hi, n = text.split(":")
            lo, hi, n = float(lo), float(hi), int(n)
        except ValueError as exc:
            raise ConfigError(f"bad logspace spec {text!r}") from exc
        if lo <= 0 or hi <= lo or n < 1:
            raise ConfigError(f"bad logspace spec {text!r}")
        return tuple(np.logspace(np.log10(lo), np.log10(hi), n))
    try:
        grid = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad tau grid {text!r}") from exc
    grid_arr = np.asarray(grid)
    if grid_arr.size == 0 or np.any(grid_arr <= 0) or np.any(np.diff(grid_arr) <= 0):
        raise ConfigError("tau grid must be positive and strictly increasing")
    return grid


CONFIG_KEYS = {"name", "f_C", "f_F", "mu1", "mu2", "lambda", "tau_grid", "tau"}


def load_config(path) -> dict:
    """Flat JSON object keyed by Scenario field names (``lambda`` for the rate)."""
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a flat JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key, value in data.items():
        if isinstance(value, (dict, list)) and key != "tau_grid":
            raise ConfigError(f"config value for {key!r} must be scalar")
    return data
