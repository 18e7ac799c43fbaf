"""Queue-feedback control laws for cutoff time and channel count."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class Mode(str, enum.Enum):
    FIXED = "fixed"
    ADAPTIVE_CUTOFF = "adaptive_cutoff"
    ADAPTIVE_CHANNELS = "adaptive_channels"
    JOINT = "joint"


@dataclass(frozen=True)
class ControlPolicy:
    mode: Mode = Mode.FIXED
    tau0: float = 5e-6
    kappa_tau: float = 5e-7
    tau_min: float = 1e-6
    tau_max: float = 5e-5
    N0: int = 16
    kappa_N: float = 0.5
    N_min: int = 1
    N_max: int = 32
    Q_target: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not 0 < self.tau_min <= self.tau0 <= self.tau_max:
            raise ValueError(
                f"need 0 < tau_min <= tau0 <= tau_max, got "
                f"tau_min={self.tau_min}, tau0={self.tau0}, tau_max={self.tau_max}"
            )
        if not 1 <= self.N_min <= self.N0 <= self.N_max:
            raise ValueError(
                f"need 1 <= N_min <= N0 <= N_max, got "
                f"N_min={self.N_min}, N0={self.N0}, N_max={self.N_max}"
            )
        if self.kappa_tau < 0 or self.kappa_N < 0:
            raise ValueError("feedback gains must be >= 0")

    @classmethod
    def for_memory(cls, T2: float, tau0: float | None = None, **kw) -> "ControlPolicy":
        """Defaults scaled to the memory time: tau0 = T2/2, gain 0.1 tau0 per request."""
        tau0 = 0.5 * T2 if tau0 is None else tau0
        kw.setdefault("kappa_tau", 0.1 * tau0)
        kw.setdefault("tau_min", 0.1 * T2)
        kw.setdefault("tau_max", 5.0 * T2)
        return cls(tau0=tau0, **kw)


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def adaptive_cutoff(Q: int, pol: ControlPolicy) -> float:
    tau = pol.tau0 + pol.kappa_tau * (Q - pol.Q_target)
    return min(max(tau, pol.tau_min), pol.tau_max)


def adaptive_channels(Q: int, pol: ControlPolicy) -> int:
    n = round_half_away(pol.N0 + pol.kappa_N * (Q - pol.Q_target))
    return min(max(n, pol.N_min), pol.N_max)


def apply_policy(Q: int, pol: ControlPolicy) -> tuple[float, int]:
    """Operating point (tau, N) chosen for queue length ``Q``."""
    mode = pol.mode
    tau = adaptive_cutoff(Q, pol) if mode in (Mode.ADAPTIVE_CUTOFF, Mode.JOINT) else pol.tau0
    N = adaptive_channels(Q, pol) if mode in (Mode.ADAPTIVE_CHANNELS, Mode.JOINT) else pol.N0
    return tau, N


def allocate_two_user(Q_A: int, Q_C: int, N_tot: int, N_min: int = 1) -> tuple[int, int]:
    """Split ``N_tot`` channels in proportion to queue lengths.

    Each user keeps at least ``N_min``; two empty queues share equally.
    """
    if N_min < 1 or N_tot < 2 * N_min:
        raise ValueError(f"need N_tot >= 2*N_min >= 2, got N_tot={N_tot}, N_min={N_min}")
    total = Q_A + Q_C
    if total == 0:
        n_a = N_tot // 2
    elif Q_A >= Q_C:
        n_a = round_half_away(N_tot * Q_A / total)
    else:
        # round the busier user's share so the rule is swap-symmetric at .5 ties
        n_a = N_tot - round_half_away(N_tot * Q_C / total)
    n_a = min(max(n_a, N_min), N_tot - N_min)
    return n_a, N_tot - n_a
