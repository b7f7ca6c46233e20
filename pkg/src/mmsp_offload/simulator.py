"""Discrete-event simulation of the delayed-offloading queue.

Random variates come from three independent streams per replication
(arrivals, work sizes, modulation) so policy comparisons share arrivals and
work. The event loop itself lives in ``kernels.simulate``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import kernels
from ._accel import BACKEND
from .channel import SystemParams, derive_rates, steady_state
from .errors import ConfigError

EVENT_NAMES = {
    kernels.EV_ARRIVAL: "arrival",
    kernels.EV_DEPARTURE: "departure",
    kernels.EV_0_TO_1: "0->1",
    kernels.EV_0_TO_2: "0->2",
    kernels.EV_1_TO_2: "1->2",
    kernels.EV_2_TO_0: "2->0",
}
LEGAL_SWITCHES = {"0->1": (0, 1), "0->2": (0, 2), "1->2": (1, 2), "2->0": (2, 0)}
_MAX_REGROW = 12


@dataclass(frozen=True)
class SimConfig:
    params: SystemParams
    n_files: int | None = 100_000
    duration: float | None = None
    warmup: float = 0.1
    replications: int = 10
    seed: int = 0
    batch_count: int = 20
    confidence: float = 0.95
    hist_levels: int = 64

    def __post_init__(self):
        if (self.n_files is None) == (self.duration is None):
            raise ConfigError("give exactly one of n_files or duration")
        if self.n_files is not None and self.n_files < 1:
            raise ConfigError(f"n_files must be >= 1, got {self.n_files}")
        if self.duration is not None and not self.duration > 0:
            raise ConfigError(f"duration must be > 0, got {self.duration}")
        if not 0.0 <= self.warmup < 1.0:
            raise ConfigError(f"warmup fraction must lie in [0, 1), got {self.warmup}")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.batch_count < 10:
            raise ConfigError("batch_count must be >= 10 for batch-means intervals")
        if self.n_files is not None and self.n_files - int(self.warmup * self.n_files) < self.batch_count:
            raise ConfigError("too few files after warmup for the batch count")
        if not 0.0 < self.confidence < 1.0:
            raise ConfigError("confidence must lie in (0, 1)")


@dataclass(frozen=True)
class SimEstimate:
    mean_delay: tuple
    efficiency: tuple
    mean_wait: tuple
    files_completed: int
    files_via_wifi: int
    time_in_state: np.ndarray
    empty_time_in_state: np.ndarray
    observed_time: float
    arrivals: int
    seen: np.ndarray
    replicates: dict = field(repr=False)
    batch_delay_means: np.ndarray = field(repr=False)
    growth_pvalue: float = math.nan
    unstable_trend: bool = False
    confidence: float = 0.95
    backend: str = BACKEND

    def interval(self, name: str) -> tuple:
        """(point, low, high) for any scalar per-replication statistic."""
        return _t_interval(self.replicates[name], self.confidence, self.batch_delay_means
                           if name == "delay" else None)

    @property
    def state_fractions(self) -> np.ndarray:
        return self.time_in_state / self.time_in_state.sum()

    @property
    def empty_fractions(self) -> np.ndarray:
        return self.empty_time_in_state / self.time_in_state.sum()


def _t_interval(values, confidence, batches=None) -> tuple:
    values = np.asarray(values, dtype=float)
    if values.size >= 2:
        sample = values
    elif batches is not None and np.size(batches) >= 2:
        sample = np.asarray(batches, dtype=float)
    else:
        v = float(values.mean())
        return (v, v, v)
    point = float(values.mean())
    spread = float(sample.std(ddof=1) / math.sqrt(sample.size))
    half = float(stats.t.ppf(0.5 + confidence / 2.0, sample.size - 1)) * spread
    return (point, point - half, point + half)


@dataclass
class _Replication:
    scalars: np.ndarray
    state_time: np.ndarray
    empty_time: np.ndarray
    b_delay: np.ndarray
    b_count: np.ndarray
    b_qsum: np.ndarray
    b_qcnt: np.ndarray
    seen: np.ndarray
    trace: tuple | None = None


def _modulation_rate(params: SystemParams) -> float:
    r = derive_rates(params.channel, params.policy)
    pi = steady_state(params.channel, params.policy)
    return float(pi[0] * (r.f_01 + r.f_02) + pi[1] * r.f_12 + pi[2] * r.f_20)


def _run_one(config: SimConfig, seq: np.random.SeedSequence, trace_cap: int = 0) -> _Replication:
    params = config.params
    lam = params.lam
    rates = derive_rates(params.channel, params.policy)
    pi = steady_state(params.channel, params.policy)
    mod_rate = _modulation_rate(params)
    mu = params.mu
    if config.n_files is not None:
        base_arr = config.n_files + config.n_files // 20 + 1000
    else:
        m = lam * config.duration
        base_arr = int(m + 10.0 * math.sqrt(m) + 1000)
    s_arr, s_work, s_mod = seq.spawn(3)
    grow = 1
    for _ in range(_MAX_REGROW):
        n_arr = base_arr * grow
        span = n_arr / lam
        n_mod = int(1.2 * span * mod_rate + 10.0 * math.sqrt(span * mod_rate) + 1000)
        g_arr = np.random.default_rng(s_arr)
        g_work = np.random.default_rng(s_work)
        g_mod = np.random.default_rng(s_mod)
        arr_t = np.cumsum(g_arr.exponential(1.0 / lam, n_arr))
        work = g_work.standard_exponential(n_arr)
        j0 = int(np.searchsorted(np.cumsum(pi), g_mod.random(), side="right"))
        j0 = min(j0, 2)
        hold = g_mod.standard_exponential(n_mod)
        branch = g_mod.random(n_mod)

        if config.n_files is not None:
            n_target = config.n_files
            t_end = math.inf
            warm_idx = int(config.warmup * config.n_files)
            t_warm = float(arr_t[warm_idx]) if warm_idx > 0 else 0.0
            batch_size = max(1, (n_target - warm_idx) // config.batch_count)
        else:
            n_target = n_arr + 1
            t_end = float(config.duration)
            t_warm = config.warmup * t_end
            warm_idx = int(np.searchsorted(arr_t, t_warm))
            batch_size = 0

        rep = _Replication(
            scalars=np.zeros(10),
            state_time=np.zeros(3),
            empty_time=np.zeros(3),
            b_delay=np.zeros(config.batch_count),
            b_count=np.zeros(config.batch_count),
            b_qsum=np.zeros(config.batch_count),
            b_qcnt=np.zeros(config.batch_count),
            seen=np.zeros((config.hist_levels, 3)),
        )
        tr = (np.zeros(trace_cap), np.zeros(trace_cap, dtype=np.int64),
              np.zeros(trace_cap, dtype=np.int64), np.zeros(trace_cap, dtype=np.int64))
        status = kernels.simulate(
            arr_t, work, hold, branch, rates.f_01, rates.f_02, rates.f_20, mu, j0,
            n_target, t_end, warm_idx, t_warm, batch_size,
            rep.state_time, rep.empty_time, rep.scalars, rep.b_delay, rep.b_count,
            rep.b_qsum, rep.b_qcnt, rep.seen, *tr,
        )
        if status == kernels.STATUS_OK:
            if trace_cap:
                k = int(rep.scalars[8])
                rep.trace = tuple(a[:k] for a in tr)
            return rep
        grow *= 2
    raise ConfigError("simulation buffers kept running out; is the system unstable?")


def run(config: SimConfig) -> SimEstimate:
    """Replicated simulation with Student-t intervals over replication means."""
    children = np.random.SeedSequence(config.seed).spawn(config.replications)
    reps = [_run_one(config, seq) for seq in children]
    lam = config.params.lam

    per = {k: [] for k in ("delay", "wait", "eta", "L", "D_little")}
    for i in range(3):
        per[f"pi{i}"] = []
        per[f"p0{i}"] = []
    for rep in reps:
        s = rep.scalars
        n_counted = max(s[2], 1.0)
        obs = s[6] if s[6] > 0 else 1.0
        per["delay"].append(s[0] / n_counted)
        per["wait"].append(s[1] / n_counted)
        per["eta"].append(s[3] / n_counted)
        per["L"].append(s[4] / obs)
        per["D_little"].append(s[4] / obs / lam)
        for i in range(3):
            per[f"pi{i}"].append(rep.state_time[i] / obs)
            per[f"p0{i}"].append(rep.empty_time[i] / obs)
    replicates = {k: np.asarray(v) for k, v in per.items()}
    # per-replication arrival-view histograms, shape (reps, hist_levels, 3)
    replicates["seen"] = np.stack([r.seen / max(r.seen.sum(), 1.0) for r in reps])

    batch_delay = np.concatenate(
        [r.b_delay[r.b_count > 0] / r.b_count[r.b_count > 0] for r in reps]
    )
    qx, qy = [], []
    for rep in reps:
        ok = rep.b_qcnt > 0
        qx.append(np.flatnonzero(ok))
        qy.append(rep.b_qsum[ok] / rep.b_qcnt[ok])
    qx = np.concatenate(qx)
    qy = np.concatenate(qy)
    pvalue = math.nan
    growing = False
    if qx.size >= 3 and np.ptp(qx) > 0 and np.ptp(qy) > 0:
        fit = stats.linregress(qx, qy)
        pvalue = float(fit.pvalue)
        growing = bool(fit.slope > 0 and pvalue < 0.05)

    seen = sum(r.seen for r in reps)
    total_seen = seen.sum()
    return SimEstimate(
        mean_delay=_t_interval(replicates["delay"], config.confidence, batch_delay),
        efficiency=_t_interval(replicates["eta"], config.confidence),
        mean_wait=_t_interval(replicates["wait"], config.confidence),
        files_completed=int(sum(r.scalars[2] for r in reps)),
        files_via_wifi=int(sum(r.scalars[3] for r in reps)),
        time_in_state=sum(r.state_time for r in reps),
        empty_time_in_state=sum(r.empty_time for r in reps),
        observed_time=float(sum(r.scalars[6] for r in reps)),
        arrivals=int(sum(r.scalars[7] for r in reps)),
        seen=seen / total_seen if total_seen else seen,
        replicates=replicates,
        batch_delay_means=batch_delay,
        growth_pvalue=pvalue,
        unstable_trend=growing,
        confidence=config.confidence,
    )


@dataclass(frozen=True)
class TraceEvent:
    t: float
    event: str
    n_after: int
    j_after: int


def state_machine_trace(config: SimConfig, duration: float) -> list[TraceEvent]:
    """Every event of one replication over ``duration`` seconds."""
    cfg = SimConfig(config.params, n_files=None, duration=duration, warmup=0.0,
                    replications=1, seed=config.seed, batch_count=config.batch_count)
    params = config.params
    expected = duration * (2.0 * params.lam + _modulation_rate(params))
    cap = int(2.0 * expected + 20.0 * math.sqrt(expected + 1.0) + 1000)
    seq = np.random.SeedSequence(config.seed).spawn(1)[0]
    rep = _run_one(cfg, seq, trace_cap=cap)
    t, ev, n, j = rep.trace
    return [TraceEvent(float(a), EVENT_NAMES[int(b)], int(c), int(d))
            for a, b, c, d in zip(t, ev, n, j)]


def check_trace(events: list[TraceEvent], initial_state: int | None = None) -> None:
    """Raise ValueError on a transition outside the four allowed switches, a
    state change without a switch event, or an inconsistent queue length."""
    prev_j = initial_state
    prev_n = 0
    for e in events:
        if e.event in LEGAL_SWITCHES:
            src, dst = LEGAL_SWITCHES[e.event]
            if prev_j is not None and prev_j != src:
                raise ValueError(f"{e.event} at t={e.t} from state {prev_j}")
            if e.j_after != dst or e.n_after != prev_n:
                raise ValueError(f"bad switch record {e}")
        elif e.event == "arrival":
            if e.n_after != prev_n + 1 or (prev_j is not None and e.j_after != prev_j):
                raise ValueError(f"bad arrival record {e}")
        elif e.event == "departure":
            if e.n_after != prev_n - 1 or e.j_after not in (1, 2):
                raise ValueError(f"bad departure record {e}")
            if prev_j is not None and e.j_after != prev_j:
                raise ValueError(f"departure changed state {e}")
        else:
            raise ValueError(f"unknown event {e.event!r}")
        prev_j, prev_n = e.j_after, e.n_after


def write_trace_csv(events: list[TraceEvent], path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "event", "n_after", "j_after"])
        for e in events:
            writer.writerow([repr(e.t), e.event, e.n_after, e.j_after])
