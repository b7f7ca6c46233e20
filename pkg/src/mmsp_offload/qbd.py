"""Joint stationary law of (queue length n, service state j).

Level n counts files in the system, the phase is the service state. The
service-state process is autonomous: it keeps switching (and the deadline
keeps running) while the queue is empty.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .channel import SystemParams, average_rate, derive_rates
from .errors import ConvergenceError, DomainError, InstabilityError

DEFAULT_TOL = 1e-10
DEFAULT_MAX_LEVELS = 2**20
SCALAR_RTOL = 1e-8


@dataclass(frozen=True)
class QbdGenerator:
    """Level-independent QBD blocks.

    ``up`` moves n -> n+1, ``down`` moves n -> n-1 (n >= 1), ``local`` stays
    at an interior level, ``local0`` at level 0.
    """

    params: SystemParams
    modulation: np.ndarray
    up: np.ndarray
    down: np.ndarray
    local: np.ndarray
    local0: np.ndarray

    @property
    def lam(self) -> float:
        return self.params.lam

    @property
    def mu(self) -> np.ndarray:
        return np.diag(self.down).copy()

    def dense(self, n_max: int) -> np.ndarray:
        """Full generator truncated at level ``n_max`` (no arrivals out of it)."""
        size = 3 * (n_max + 1)
        q = np.zeros((size, size))
        for n in range(n_max + 1):
            s = slice(3 * n, 3 * n + 3)
            if n == 0:
                q[s, s] = self.local0
            elif n == n_max:
                q[s, s] = self.local + self.up
            else:
                q[s, s] = self.local
            if n < n_max:
                q[s, 3 * (n + 1): 3 * (n + 2)] = self.up
            if n > 0:
                q[s, 3 * (n - 1): 3 * n] = self.down
        if n_max == 0:
            q[0:3, 0:3] = self.modulation
        return q


def build_generator(params: SystemParams) -> QbdGenerator:
    modulation = derive_rates(params.channel, params.policy).generator()
    up = params.lam * np.eye(3)
    down = np.diag(params.mu)
    local = modulation - up - down
    local0 = modulation - up
    return QbdGenerator(params, modulation, up, down, local, local0)


@dataclass(frozen=True)
class QueueSolution:
    """Truncated stationary distribution p[n, j], 0 <= n <= N."""

    p: np.ndarray
    N: int
    tail_mass: float
    converged: bool
    decay_rate: float
    params: SystemParams = field(repr=False)
    history: tuple = field(default=(), repr=False)

    @property
    def level_probs(self) -> np.ndarray:
        return self.p.sum(axis=1)

    @property
    def marginal(self) -> np.ndarray:
        return self.p.sum(axis=0)

    @property
    def mean_queue_length(self) -> float:
        """Mean number of files in the system, the one in service included."""
        return float(np.arange(self.N + 1) @ self.level_probs)

    def require_converged(self) -> None:
        if not self.converged:
            raise ConvergenceError(
                f"queue solution not converged (N={self.N}, tail={self.tail_mass:.3g})"
            )

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "p0", "p1", "p2"])
            for n, row in enumerate(self.p):
                writer.writerow([n, *(repr(float(v)) for v in row)])


def _tail_estimate(p: np.ndarray, r1: np.ndarray) -> tuple[float, float]:
    eta = float(max(abs(np.linalg.eigvals(r1))))
    if eta >= 1.0:
        return math.inf, eta
    return float(p[-1].sum() * eta / (1.0 - eta)), eta


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= SCALAR_RTOL * abs(b) + 1e-300


def solve_stationary(
    gen: QbdGenerator,
    tol: float = DEFAULT_TOL,
    max_levels: int = DEFAULT_MAX_LEVELS,
    n_start: int | None = None,
) -> QueueSolution:
    """Solve the truncated balance equations, doubling N until converged.

    Converged means tail mass below ``tol`` and p00, p02 and the mean queue
    length stable to 1e-8 relative between successive truncation levels.
    """
    params = gen.params
    mu_hat = average_rate(params)
    if params.lam >= mu_hat:
        raise InstabilityError(
            f"lambda={params.lam:.6g} >= mean service rate {mu_hat:.6g}"
        )
    rho = params.lam / mu_hat
    n_max = n_start or max(64, math.ceil(20.0 / (1.0 - rho)))
    if n_max > max_levels:
        raise ConvergenceError(
            f"rho={rho:.12f} needs more than {max_levels} levels to start"
        )
    lam = float(params.lam)
    mu = np.ascontiguousarray(gen.mu, dtype=float)
    mod = np.ascontiguousarray(gen.modulation, dtype=float)

    prev = None
    history = []
    while True:
        p, r1 = kernels.solve_levels(lam, mu, mod, n_max)
        tail, eta = _tail_estimate(p, r1)
        mean_len = float(np.arange(n_max + 1) @ p.sum(axis=1))
        scalars = (p[0, 0], p[0, 2], mean_len)
        history.append((n_max, tail) + scalars)
        if prev is not None and tail < tol and all(
            _close(a, b) for a, b in zip(scalars, prev)
        ):
            return QueueSolution(p, n_max, tail, True, eta, params, tuple(history))
        if 2 * n_max > max_levels:
            raise ConvergenceError(
                f"no convergence below {max_levels} levels (tail={tail:.3g}, rho={rho:.6f})"
            )
        prev = scalars
        n_max *= 2


def solve(params: SystemParams, tol: float = DEFAULT_TOL, **kwargs) -> QueueSolution:
    return solve_stationary(build_generator(params), tol, **kwargs)


def generating_function(sol: QueueSolution, j: int, z: float) -> tuple[float, float]:
    """(G_j(z), error bound) for the truncated sum of p[n, j] z^n."""
    if not 0.0 <= z < 1.0:
        raise DomainError(f"z must lie in [0, 1), got {z!r}")
    sol.require_converged()
    value = np.polynomial.polynomial.polyval(z, sol.p[:, j])
    return float(value), float(sol.tail_mass * z**sol.N)


def empty_probabilities(sol: QueueSolution) -> np.ndarray:
    sol.require_converged()
    return sol.p[0].copy()
