"""Discrete-time, rate-based request queue.

Service is a fluid approximation: every step adds ``S * dt`` to a credit
counter and one request departs per whole unit of credit.  Requests are kept
as FIFO arrival timestamps so delay is measured per request.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from itertools import repeat
from typing import Callable, NamedTuple

from .link_physics import PhysicalParams, fidelity_of_dwell


class Departure(NamedTuple):
    arrival_time: float
    departure_time: float
    delay: float
    fidelity: float


class Regime(str, enum.Enum):
    SUBCRITICAL = "Subcritical"
    CRITICAL = "Critical"
    SUPERCRITICAL = "Supercritical"


@dataclass
class QueueState:
    pending: deque = field(default_factory=deque)
    credit: float = 0.0
    total_arrived: int = 0
    total_served: int = 0

    def __len__(self) -> int:
        return len(self.pending)

    def enqueue(self, n: int, t: float) -> None:
        if n < 0:
            raise ValueError(f"arrival count must be >= 0, got {n}")
        if n:
            self.pending.extend(repeat(t, n))
            self.total_arrived += n

    def serve(
        self,
        rate: float,
        dt: float,
        t: float,
        sample_dwell: Callable[[], float],
        physical: PhysicalParams,
    ) -> list[Departure]:
        """Advance service by one step of length ``dt`` starting at ``t``.

        Departures leave at ``t + dt`` in FIFO order.  Credit left over when
        the queue runs dry is capped below one: an idle server cannot bank
        service for future requests.
        """
        credit = self.credit + rate * dt
        k = min(int(credit), len(self.pending))
        credit -= k
        # only reachable when the queue has just run dry
        if credit >= 1.0:
            credit = 0.0
        self.credit = credit
        if not k:
            return []
        self.total_served += k
        t_out = t + dt
        pop = self.pending.popleft
        out = []
        for _ in range(k):
            t_in = pop()
            out.append(
                Departure(t_in, t_out, t_out - t_in, fidelity_of_dwell(physical, sample_dwell()))
            )
        return out


def load(lam: float, mean_T: float) -> float:
    """Load parameter rho = lambda E[T]."""
    if lam < 0 or mean_T < 0:
        raise ValueError("lambda and E[T] must be >= 0")
    return lam * mean_T


def classify_regime(rho: float, eps: float = 0.05) -> Regime:
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if math.isnan(rho) or rho < 0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    if rho < 1.0 - eps:
        return Regime.SUBCRITICAL
    if rho > 1.0 + eps:
        return Regime.SUPERCRITICAL
    return Regime.CRITICAL
