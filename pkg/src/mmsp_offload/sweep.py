"""Parameter sweeps and analytic-vs-simulation comparison tables."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics, simulator
from .channel import SystemParams
from .errors import OffloadError
from .scenarios import Scenario

COLUMNS = (
    "scenario", "f_C", "f_F", "tau", "lambda", "mu1", "mu2", "R", "f",
    "pi0", "pi1", "pi2", "beta", "ET", "W", "D", "D_little", "eta", "D_star",
    "method", "D_ci_low", "D_ci_high", "eta_ci_low", "eta_ci_high", "error",
)
TEXT_COLUMNS = ("scenario", "method", "error")


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)

    def to_csv(self, path_or_file) -> None:
        if hasattr(path_or_file, "write"):
            _write(path_or_file, self.rows)
        else:
            with Path(path_or_file).open("w", newline="") as fh:
                _write(fh, self.rows)

    @classmethod
    def from_csv(cls, path) -> "SweepResult":
        rows = []
        with Path(path).open(newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != COLUMNS:
                raise ValueError(f"unexpected columns {reader.fieldnames}")
            for raw in reader:
                rows.append({k: _parse(k, v) for k, v in raw.items()})
        return cls(rows)

    def select(self, scenario: str, method: str = "analytic") -> list:
        return [r for r in self.rows if r["scenario"] == scenario and r["method"] == method]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return repr(float(value))


def _parse(key, text):
    if key in TEXT_COLUMNS:
        return text
    return None if text == "" else float(text)


def _write(fh, rows) -> None:
    writer = csv.writer(fh)
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in COLUMNS])


def _base_row(name: str, params: SystemParams, method: str) -> dict:
    row = dict.fromkeys(COLUMNS)
    row.update(
        scenario=name, f_C=params.channel.f_C, f_F=params.channel.f_F, tau=params.tau,
        mu1=params.mu1, mu2=params.mu2, R=params.channel.wifi_ratio,
        f=params.channel.mobility, method=method, error="",
    )
    row["lambda"] = params.lam
    try:
        row["D_star"] = metrics.asymptotic_delay(params)
    except OffloadError:
        row["D_star"] = None
    return row


def analytic_row(name: str, params: SystemParams) -> dict:
    row = _base_row(name, params, "analytic")
    try:
        rep = metrics.evaluate(params)
    except OffloadError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    row.update(
        pi0=rep.pi[0], pi1=rep.pi[1], pi2=rep.pi[2], beta=rep.beta, ET=rep.ET_mean,
        W=rep.W, D=rep.D, D_little=rep.D_little, eta=rep.eta,
    )
    return row


def simulation_row(name: str, params: SystemParams, **sim_kwargs) -> dict:
    row = _base_row(name, params, "simulation")
    try:
        est = simulator.run(simulator.SimConfig(params, **sim_kwargs))
    except OffloadError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    frac = est.state_fractions
    d, lo, hi = est.mean_delay
    e, elo, ehi = est.efficiency
    w = est.mean_wait[0]
    row.update(
        pi0=frac[0], pi1=frac[1], pi2=frac[2], ET=d - w, W=w, D=d,
        D_little=est.interval("D_little")[0], eta=e,
        D_ci_low=lo, D_ci_high=hi, eta_ci_low=elo, eta_ci_high=ehi,
    )
    if est.unstable_trend:
        row["error"] = f"queue growth trend (p={est.growth_pvalue:.3g})"
    return row


def sweep(scenario: Scenario, tau_grid=None, simulate: bool = False, **sim_kwargs) -> SweepResult:
    """One analytic row per tau, plus a simulation row when ``simulate``.

    Rows are ordered by (tau, method). Errors at a point go to the error
    column and the sweep carries on.
    """
    grid = scenario.tau_grid if tau_grid is None else tau_grid
    rows = []
    for tau in grid:
        params = scenario.params(float(tau))
        rows.append(analytic_row(scenario.name, params))
        if simulate:
            rows.append(simulation_row(scenario.name, params, **sim_kwargs))
    return SweepResult(rows)


def compare(params: SystemParams, **sim_kwargs) -> list:
    """Analytic value next to the simulation interval for D, W, eta, pi_j, p0j."""
    rep = metrics.evaluate(params)
    est = simulator.run(simulator.SimConfig(params, **sim_kwargs))
    pairs = [
        ("D", rep.D, est.mean_delay),
        ("W", rep.W, est.mean_wait),
        ("eta", rep.eta, est.efficiency),
    ]
    pairs += [(f"pi{j}", rep.pi[j], est.interval(f"pi{j}")) for j in range(3)]
    pairs += [(f"p0{j}", rep.p_empty[j], est.interval(f"p0{j}")) for j in range(3)]
    table = []
    for name, value, (point, lo, hi) in pairs:
        table.append({
            "quantity": name,
            "analytic": float(value),
            "sim": point,
            "ci_low": lo,
            "ci_high": hi,
            "inside": bool(lo <= value <= hi),
            "rel_half_width": (hi - point) / abs(point) if point else math.inf,
        })
    return table


def increments(result: SweepResult, scenario: str) -> dict:
    """eta and D change from the first to the last analytic point."""
    rows = [r for r in result.select(scenario) if r["eta"] is not None]
    eta = np.array([r["eta"] for r in rows])
    D = np.array([r["D"] for r in rows])
    return {"eta": float(eta[-1] - eta[0]), "D": float(D[-1] - D[0])}
