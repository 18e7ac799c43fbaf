"""Physical layer of the two-link repeater: generation rates, service time, fidelity.

Each of the two elementary links is produced by ``N`` parallel channels that
attempt at rate ``R`` and succeed with probability ``exp(-L / L_att)``.  The
first link to succeed is stored in memory; if the second one does not arrive
within the cutoff ``tau`` the stored link is discarded and the cycle restarts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# below this value of mu * tau the success probability per cycle underflows
MIN_MU_TAU = 1e-12


class UnserviceableError(ValueError):
    """The (N, tau) operating point has an effectively infinite service time."""


@dataclass(frozen=True)
class PhysicalParams:
    """Link distance and attenuation length in km, attempt rate in 1/s, T2 in s."""

    L: float = 100.0
    L_att: float = 22.0
    R: float = 1e6
    T2: float = 1e-5
    v0: float = 0.86

    def __post_init__(self):
        if not self.L >= 0:
            raise ValueError(f"L must be >= 0, got {self.L}")
        for name in ("L_att", "R", "T2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0.0 <= self.v0 <= 1.0:
            raise ValueError(f"v0 must lie in [0, 1], got {self.v0}")


@dataclass(frozen=True)
class ServiceSample:
    total_time: float
    dwell: float
    restarts: int


def generation_probability(p: PhysicalParams) -> float:
    return math.exp(-p.L / p.L_att)


def effective_rate(p: PhysicalParams, N: int) -> float:
    """Aggregate link generation rate mu(N) = N R p_gen."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return N * p.R * generation_probability(p)


def _check_tau(tau: float) -> None:
    if not tau > 0:
        raise ValueError(f"cutoff tau must be > 0, got {tau}")


def _success_probability(mu: float, tau: float) -> float:
    """1 - exp(-mu tau): chance the second link beats the cutoff."""
    if math.isinf(tau):
        return 1.0
    if mu * tau < MIN_MU_TAU:
        raise UnserviceableError(
            f"mu*tau = {mu * tau:.3e} is below {MIN_MU_TAU:g}; mean service time diverges"
        )
    return -math.expm1(-mu * tau)


def mean_service_time_mu(mu: float, tau: float) -> float:
    """Closed-form E[T] for link rate ``mu`` and cutoff ``tau``."""
    _check_tau(tau)
    success = _success_probability(mu, tau)
    # 3/2 - q = 1/2 + (1 - q)
    return (0.5 + success) / (mu * success)


def mean_service_time(p: PhysicalParams, N: int, tau: float) -> float:
    """Mean time to deliver one end-to-end pair, restarts included.

    Solves E[T] = 1/(2 mu) + E[min(Z, tau)] + q E[T] with q = exp(-mu tau),
    giving (3/2 - q) / (mu (1 - q)).  ``tau = inf`` yields 3 / (2 mu).
    """
    return mean_service_time_mu(effective_rate(p, N), tau)


def service_rate(p: PhysicalParams, N: int, tau: float) -> float:
    return 1.0 / mean_service_time(p, N, tau)


def fidelity_of_dwell(p: PhysicalParams, dwell: float) -> float:
    """Werner-state fidelity after ``dwell`` seconds in memory."""
    v = p.v0 * math.exp(-dwell / p.T2)
    return 0.25 + 0.75 * v * v


def expected_fidelity_mu(p: PhysicalParams, mu: float, tau: float) -> float:
    _check_tau(tau)
    success = _success_probability(mu, tau)
    a = mu + 2.0 / p.T2
    decay = 1.0 if math.isinf(tau) else -math.expm1(-a * tau)
    return 0.25 + 0.75 * p.v0**2 * (mu / a) * decay / success


def expected_fidelity(p: PhysicalParams, N: int, tau: float) -> float:
    """Mean delivered fidelity, dwell ~ Exp(mu) conditioned on dwell < tau."""
    return expected_fidelity_mu(p, effective_rate(p, N), tau)


def dwell_from_uniform(u, mu: float, tau: float):
    """Invert the truncated Exp(mu) law on [0, tau); ``u`` may be an array."""
    success = _success_probability(mu, tau)
    dwell = -np.log1p(-np.asarray(u) * success) / mu
    if math.isinf(tau):
        return dwell
    # guard against rounding up to tau itself
    return np.minimum(dwell, np.nextafter(tau, 0.0))


def sample_dwell(rng: np.random.Generator, p: PhysicalParams, N: int, tau: float) -> float:
    return float(dwell_from_uniform(rng.random(), effective_rate(p, N), tau))


def sample_service(
    rng: np.random.Generator, p: PhysicalParams, N: int, tau: float
) -> ServiceSample:
    """Simulate one delivery by explicit restart cycles.

    Each cycle waits Exp(2 mu) for the first link, then Z ~ Exp(mu) for the
    second.  Z < tau completes the service; otherwise the cycle costs tau
    extra and restarts.
    """
    _check_tau(tau)
    mu = effective_rate(p, N)
    elapsed = 0.0
    restarts = 0
    while True:
        elapsed += rng.exponential(1.0 / (2.0 * mu))
        z = rng.exponential(1.0 / mu)
        if z < tau:
            return ServiceSample(total_time=elapsed + z, dwell=z, restarts=restarts)
        elapsed += tau
        restarts += 1


def sample_service_batch(
    rng: np.random.Generator, p: PhysicalParams, N: int, tau: float, size: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised :func:`sample_service`; returns (total_time, dwell, restarts).

    Cycles are simulated round by round for the samples still in service, so
    the result follows the same restart process as the scalar version.
    """
    _check_tau(tau)
    mu = effective_rate(p, N)
    total = np.zeros(size)
    dwell = np.zeros(size)
    restarts = np.zeros(size, dtype=np.int64)
    active = np.arange(size)
    while active.size:
        first = rng.exponential(1.0 / (2.0 * mu), active.size)
        z = rng.exponential(1.0 / mu, active.size)
        done = z < tau
        total[active] += first + np.where(done, z, tau)
        dwell[active[done]] = z[done]
        active = active[~done]
        restarts[active] += 1
    return total, dwell, restarts
