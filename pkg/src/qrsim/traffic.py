"""Request arrival processes: constant-rate Poisson and two-state ON-OFF MMPP.

Modulation transitions happen once per simulation step, so ``p01``/``p10`` are
per-step probabilities and their meaning depends on ``dt``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np


class Kind(str, enum.Enum):
    POISSON = "poisson"
    ONOFF = "onoff"


class State(str, enum.Enum):
    ON = "on"
    OFF = "off"


@dataclass(frozen=True)
class ArrivalProcess:
    kind: Kind = Kind.POISSON
    lam: float = 4.5e4
    lam_on: float = 0.0
    lam_off: float = 0.0
    p01: float = 0.0
    p10: float = 0.0
    state: State = State.OFF

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "state", State(self.state))
        for name in ("lam", "lam_on", "lam_off"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("p01", "p10"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {getattr(self, name)}")
        if self.kind is Kind.ONOFF and self.p01 + self.p10 <= 0:
            raise ValueError("ON-OFF process needs p01 + p10 > 0")

    @classmethod
    def poisson(cls, lam: float) -> "ArrivalProcess":
        return cls(kind=Kind.POISSON, lam=lam)

    @classmethod
    def on_off(cls, lam_on, lam_off, p01, p10, state=State.OFF) -> "ArrivalProcess":
        return cls(kind=Kind.ONOFF, lam_on=lam_on, lam_off=lam_off, p01=p01, p10=p10, state=state)

    @property
    def current_rate(self) -> float:
        if self.kind is Kind.POISSON:
            return self.lam
        return self.lam_on if self.state is State.ON else self.lam_off


def arrivals_in_step(rng: np.random.Generator, proc: ArrivalProcess, dt: float) -> int:
    """Poisson count with mean ``current_rate * dt``; the state is left untouched."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    return int(rng.poisson(proc.current_rate * dt))


def step_modulation(rng: np.random.Generator, proc: ArrivalProcess) -> ArrivalProcess:
    if proc.kind is not Kind.ONOFF:
        raise TypeError("step_modulation needs an ON-OFF process")
    u = rng.random()
    if proc.state is State.ON:
        return replace(proc, state=State.OFF) if u < proc.p10 else proc
    return replace(proc, state=State.ON) if u < proc.p01 else proc


def stationary_on_probability(p01: float, p10: float) -> float:
    if not p01 + p10 > 0:
        raise ValueError("p01 + p10 must be > 0")
    return p01 / (p01 + p10)


def average_rate(proc: ArrivalProcess) -> float:
    if proc.kind is Kind.POISSON:
        return proc.lam
    p_on = stationary_on_probability(proc.p01, proc.p10)
    return p_on * proc.lam_on + (1.0 - p_on) * proc.lam_off


def modulation_path(rng: np.random.Generator, proc: ArrivalProcess, n_steps: int) -> np.ndarray:
    """Boolean ON indicator for ``n_steps`` successive :func:`step_modulation` calls.

    Consumes the generator exactly as the step-by-step version does.
    """
    if proc.kind is not Kind.ONOFF:
        raise TypeError("modulation_path needs an ON-OFF process")
    u = rng.random(n_steps).tolist()
    on = proc.state is State.ON
    p01, p10 = proc.p01, proc.p10
    path = np.empty(n_steps, dtype=bool)
    for k in range(n_steps):
        if on:
            on = not u[k] < p10
        else:
            on = u[k] < p01
        path[k] = on
    return path


def rate_path(modulation_rng, proc: ArrivalProcess, n_steps: int) -> np.ndarray:
    """Instantaneous arrival rate for each step (modulation advanced first)."""
    if proc.kind is Kind.POISSON:
        return np.full(n_steps, proc.lam)
    on = modulation_path(modulation_rng, proc, n_steps)
    return np.where(on, proc.lam_on, proc.lam_off)


def arrival_counts(rng: np.random.Generator, rates: np.ndarray, dt: float) -> np.ndarray:
    """Exact Poisson counts for a whole rate path in one draw."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    return rng.poisson(np.asarray(rates) * dt)
