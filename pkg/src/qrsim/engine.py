"""Simulation drivers: single-user and shared-pool runs, ensembles, sweeps.

Randomness is split into independent streams (arrivals, ON-OFF modulation,
memory dwell) derived from the scenario seed.  The arrival side does not
depend on the queue, so a whole arrival path is drawn up front; changing the
control policy therefore leaves the offered traffic untouched for a given seed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import link_physics as lp
from .control import ControlPolicy, Mode, adaptive_cutoff, allocate_two_user, apply_policy
from .queue_core import QueueState, Regime, classify_regime, load
from .traffic import ArrivalProcess, arrival_counts, average_rate, rate_path

MASK64 = (1 << 64) - 1


class SimMode(str, enum.Enum):
    SINGLE = "single"
    TWO_USER = "two_user"


@dataclass(frozen=True)
class Scenario:
    physical: lp.PhysicalParams = field(default_factory=lp.PhysicalParams)
    policy: ControlPolicy = field(default_factory=ControlPolicy)
    arrivals: tuple[ArrivalProcess, ...] = (ArrivalProcess(),)
    dt: float = 1e-6
    horizon: float = 0.2
    seed: int = 0
    mode: SimMode = SimMode.SINGLE
    N_tot: int = 16
    regime_eps: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "mode", SimMode(self.mode))
        object.__setattr__(self, "arrivals", tuple(self.arrivals))
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.horizon >= self.dt:
            raise ValueError(f"horizon must be >= dt, got {self.horizon}")
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        expected = 1 if self.mode is SimMode.SINGLE else 2
        if len(self.arrivals) != expected:
            raise ValueError(f"{self.mode.value} mode needs {expected} arrival process(es)")
        if self.mode is SimMode.TWO_USER and self.N_tot < 2 * self.policy.N_min:
            raise ValueError(
                f"N_tot={self.N_tot} must be >= 2*N_min={2 * self.policy.N_min}"
            )

    @property
    def n_steps(self) -> int:
        # tolerate horizon/dt landing a hair below an integer
        return int(self.horizon / self.dt + 1e-9)

    def offered_load(self) -> float:
        """rho for the nominal operating point (rho_tot in two-user mode)."""
        pol = self.policy
        if self.mode is SimMode.TWO_USER:
            lam_a, lam_c = (average_rate(a) for a in self.arrivals)
            return total_load(lam_a, lam_c, self.N_tot, pol.tau0, self.physical)
        return load(average_rate(self.arrivals[0]), lp.mean_service_time(self.physical, pol.N0, pol.tau0))

    def regime(self) -> Regime:
        return classify_regime(self.offered_load(), self.regime_eps)


def splitmix64(x: int) -> int:
    """SplitMix64 finaliser; turns nearby seeds into unrelated 64-bit words."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def replica_seed(seed: int, index: int) -> int:
    return (seed + index) & MASK64


def _streams(seed: int, n: int) -> list[np.random.Generator]:
    ss = np.random.SeedSequence(splitmix64(seed))
    return [np.random.default_rng(s) for s in ss.spawn(n)]


def total_load(lam_A: float, lam_C: float, N_tot: int, tau: float, p: lp.PhysicalParams) -> float:
    return (lam_A + lam_C) * lp.mean_service_time(p, N_tot, tau)


# --------------------------------------------------------------------------
# records


@dataclass
class DepartureLog:
    arrival_time: np.ndarray
    departure_time: np.ndarray
    delay: np.ndarray
    fidelity: np.ndarray

    @classmethod
    def from_records(cls, records) -> "DepartureLog":
        cols = np.array(records, dtype=float).reshape(-1, 4)
        return cls(*(np.ascontiguousarray(cols[:, i]) for i in range(4)))

    def __len__(self) -> int:
        return len(self.delay)


@dataclass(frozen=True)
class Summary:
    mean_Q: float
    steady_mean_Q: float
    late_slope: float
    mean_delay: float
    steady_mean_delay: float
    peak_delay: float
    mean_fidelity: float
    steady_mean_fidelity: float
    min_inst_fidelity: float
    mean_tau: float
    std_tau: float
    mean_N: float
    std_N: float
    total_served: int


def _slope(t: np.ndarray, y: np.ndarray) -> float:
    if len(t) < 2:
        return 0.0
    tc = t - t.mean()
    return float(np.dot(tc, y - y.mean()) / np.dot(tc, tc))


def _mean_or_nan(x: np.ndarray) -> float:
    return float(x.mean()) if len(x) else math.nan


def summarize(
    t: np.ndarray,
    Q: np.ndarray,
    tau: np.ndarray,
    N: np.ndarray,
    departures: DepartureLog,
    physical: lp.PhysicalParams,
    horizon: float,
) -> Summary:
    """Time averages over the run; ``steady_*`` and the slope use the second half."""
    half = len(t) // 2
    steady = departures.departure_time >= horizon / 2
    pairs = np.unique(np.stack([N.astype(float), tau]), axis=1)
    inst_f = [lp.expected_fidelity(physical, int(n), tt) for n, tt in pairs.T]
    return Summary(
        mean_Q=float(Q.mean()),
        steady_mean_Q=float(Q[half:].mean()),
        late_slope=_slope(t[half:], Q[half:].astype(float)),
        mean_delay=_mean_or_nan(departures.delay),
        steady_mean_delay=_mean_or_nan(departures.delay[steady]),
        peak_delay=float(departures.delay.max()) if len(departures) else math.nan,
        mean_fidelity=_mean_or_nan(departures.fidelity),
        steady_mean_fidelity=_mean_or_nan(departures.fidelity[steady]),
        min_inst_fidelity=float(min(inst_f)),
        mean_tau=float(tau.mean()),
        std_tau=float(tau.std()),
        mean_N=float(N.mean()),
        std_N=float(N.std()),
        total_served=len(departures),
    )


@dataclass
class TimeSeries:
    """Per-step traces (columns indexed by user) plus per-user departure logs."""

    users: tuple[str, ...]
    t: np.ndarray
    Q: np.ndarray
    tau: np.ndarray
    N: np.ndarray
    lam: np.ndarray
    departures: list[DepartureLog | None]
    summaries: list[Summary]
    total_arrived: list[int]

    def summary(self, user: int = 0) -> Summary:
        return self.summaries[user]

    @property
    def n_steps(self) -> int:
        return len(self.t)


# --------------------------------------------------------------------------
# step loops


class _DwellSampler:
    """Draws dwell times at the current operating point from a buffered stream."""

    def __init__(self, rng: np.random.Generator, chunk: int = 4096):
        self._rng = rng
        self._chunk = chunk
        self._buf: list[float] = []
        self._i = 0
        self.mu = 1.0
        self.success = 1.0
        self.tau = math.inf

    def set_point(self, mu: float, tau: float) -> None:
        self.mu = mu
        self.tau = tau
        self.success = 1.0 if math.isinf(tau) else -math.expm1(-mu * tau)

    def __call__(self) -> float:
        if self._i == len(self._buf):
            self._buf = self._rng.random(self._chunk).tolist()
            self._i = 0
        u = self._buf[self._i]
        self._i += 1
        d = -math.log1p(-u * self.success) / self.mu
        return d if d < self.tau else math.nextafter(self.tau, 0.0)


def _arrival_paths(sc: Scenario, rngs: list[np.random.Generator]):
    n = sc.n_steps
    lam, counts = [], []
    for i, proc in enumerate(sc.arrivals):
        rates = rate_path(rngs[3 * i + 1], proc, n)
        lam.append(rates)
        counts.append(arrival_counts(rngs[3 * i], rates, sc.dt))
    return lam, counts


def _operating_point(p: lp.PhysicalParams, N: int, tau: float):
    mu = lp.effective_rate(p, N)
    return tau, N, 1.0 / lp.mean_service_time_mu(mu, tau), mu


def run_single(sc: Scenario, record: bool = True) -> TimeSeries:
    """Discrete-time run: modulate, arrive, enqueue, control, serve, record."""
    if sc.mode is not SimMode.SINGLE:
        raise ValueError("run_single needs a single-user scenario")
    rngs = _streams(sc.seed, 3)
    (lam,), (counts,) = _arrival_paths(sc, rngs)
    counts = counts.tolist()
    n, dt, p, pol = sc.n_steps, sc.dt, sc.physical, sc.policy

    sampler = _DwellSampler(rngs[2])
    q = QueueState()
    ops: dict[int, tuple] = {}
    Q_rec = [0] * n
    tau_rec = [0.0] * n
    N_rec = [0] * n
    deps: list = []
    for k in range(n):
        t = k * dt
        a = counts[k]
        if a:
            q.enqueue(a, t)
        qlen = len(q.pending)
        op = ops.get(qlen)
        if op is None:
            tau, N = apply_policy(qlen, pol)
            op = ops[qlen] = _operating_point(p, N, tau)
        tau, N, S, mu = op
        if sampler.mu != mu or sampler.tau != tau:
            sampler.set_point(mu, tau)
        out = q.serve(S, dt, t, sampler, p)
        if out:
            deps.extend(out)
        Q_rec[k] = len(q.pending)
        tau_rec[k] = tau
        N_rec[k] = N
    return _finish(sc, ("",), [Q_rec], [tau_rec], [N_rec], [lam], [deps], [q.total_arrived], record)


def run_two_user(sc: Scenario, record: bool = True) -> TimeSeries:
    """Two queues sharing ``N_tot`` channels.

    Fixed mode splits the pool evenly with a constant cutoff.  Otherwise the
    pool follows :func:`allocate_two_user` every step and, for the cutoff and
    joint modes, each user adapts its own cutoff to its own queue.
    """
    if sc.mode is not SimMode.TWO_USER:
        raise ValueError("run_two_user needs a two-user scenario")
    rngs = _streams(sc.seed, 6)
    lam, counts = _arrival_paths(sc, rngs)
    counts = [c.tolist() for c in counts]
    n, dt, p, pol = sc.n_steps, sc.dt, sc.physical, sc.policy
    adaptive = pol.mode is not Mode.FIXED
    adapt_tau = pol.mode in (Mode.ADAPTIVE_CUTOFF, Mode.JOINT)
    half = sc.N_tot // 2

    queues = [QueueState(), QueueState()]
    samplers = [_DwellSampler(rngs[2]), _DwellSampler(rngs[5])]
    ops: dict[tuple[int, float], tuple] = {}
    Q_rec = [[0] * n, [0] * n]
    tau_rec = [[0.0] * n, [0.0] * n]
    N_rec = [[0] * n, [0] * n]
    deps: list[list] = [[], []]
    for k in range(n):
        t = k * dt
        for u in (0, 1):
            a = counts[u][k]
            if a:
                queues[u].enqueue(a, t)
        lens = (len(queues[0].pending), len(queues[1].pending))
        alloc = allocate_two_user(lens[0], lens[1], sc.N_tot, pol.N_min) if adaptive else (half, half)
        for u in (0, 1):
            tau = adaptive_cutoff(lens[u], pol) if adapt_tau else pol.tau0
            key = (alloc[u], tau)
            op = ops.get(key)
            if op is None:
                op = ops[key] = _operating_point(p, alloc[u], tau)
            _, N, S, mu = op
            smp = samplers[u]
            if smp.mu != mu or smp.tau != tau:
                smp.set_point(mu, tau)
            out = queues[u].serve(S, dt, t, smp, p)
            if out:
                deps[u].extend(out)
            Q_rec[u][k] = len(queues[u].pending)
            tau_rec[u][k] = tau
            N_rec[u][k] = N
    return _finish(
        sc, ("A", "C"), Q_rec, tau_rec, N_rec, lam, deps,
        [qq.total_arrived for qq in queues], record,
    )


def _finish(sc, users, Q_rec, tau_rec, N_rec, lam, deps, arrived, record) -> TimeSeries:
    n = sc.n_steps
    t = np.arange(n) * sc.dt
    Q = np.column_stack([np.asarray(x, dtype=np.int64) for x in Q_rec])
    tau = np.column_stack([np.asarray(x, dtype=float) for x in tau_rec])
    N = np.column_stack([np.asarray(x, dtype=np.int64) for x in N_rec])
    lam = np.column_stack(lam)
    logs = [DepartureLog.from_records(d) for d in deps]
    summaries = [
        summarize(t, Q[:, i], tau[:, i], N[:, i], logs[i], sc.physical, sc.horizon)
        for i in range(len(users))
    ]
    return TimeSeries(
        users=users, t=t, Q=Q, tau=tau, N=N, lam=lam,
        departures=logs if record else [None] * len(users),
        summaries=summaries, total_arrived=list(arrived),
    )


def run(sc: Scenario, record: bool = True) -> TimeSeries:
    if sc.mode is SimMode.TWO_USER:
        return run_two_user(sc, record)
    return run_single(sc, record)


# --------------------------------------------------------------------------
# ensembles and sweeps


@dataclass
class EnsembleResult:
    t: np.ndarray
    mean_Q: np.ndarray
    se_Q: np.ndarray
    runs: list[list[Summary]]  # runs[i][user]
    users: tuple[str, ...]

    @property
    def n_runs(self) -> int:
        return len(self.runs)

    def summary_stat(self, name: str, user: int = 0) -> tuple[float, float]:
        """Mean and standard error of one summary field across replicas."""
        x = np.array([getattr(r[user], name) for r in self.runs], dtype=float)
        x = x[~np.isnan(x)]
        if not len(x):
            return math.nan, math.nan
        se = x.std(ddof=1) / math.sqrt(len(x)) if len(x) > 1 else math.nan
        return float(x.mean()), float(se)


def run_ensemble(sc: Scenario, n_runs: int) -> EnsembleResult:
    """Independent replicas with seeds ``seed + i`` (each mixed by splitmix64).

    Replica 0 is therefore exactly ``run(sc)``.  Only summaries and running
    sums of Q(t) are kept.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    acc = acc2 = None
    runs = []
    users: tuple[str, ...] = ()
    t = None
    for i in range(n_runs):
        ts = run(replace(sc, seed=replica_seed(sc.seed, i)), record=False)
        Qf = ts.Q.astype(float)
        if acc is None:
            acc, acc2, users, t = Qf.copy(), Qf * Qf, ts.users, ts.t
        else:
            acc += Qf
            acc2 += Qf * Qf
        runs.append(ts.summaries)
    mean = acc / n_runs
    if n_runs > 1:
        var = np.maximum(acc2 / n_runs - mean * mean, 0.0) * n_runs / (n_runs - 1)
        se = np.sqrt(var / n_runs)
    else:
        se = np.full_like(mean, np.nan)
    return EnsembleResult(t=t, mean_Q=mean, se_Q=se, runs=runs, users=users)


@dataclass(frozen=True)
class TradeoffPoint:
    tau: float
    latency: float
    fidelity: float
    fidelity_se: float
    analytic_latency: float
    analytic_fidelity: float
    n_departures: int


def _fixed_at(pol: ControlPolicy, tau: float) -> ControlPolicy:
    return replace(
        pol, mode=Mode.FIXED, tau0=tau,
        tau_min=min(pol.tau_min, tau), tau_max=max(pol.tau_max, tau),
    )


def sweep_tradeoff(sc: Scenario, tau_grid, analytic: bool = False) -> list[TradeoffPoint]:
    """Fixed-policy fidelity and latency at each cutoff of ``tau_grid``.

    Simulated values use the steady window.  The analytic columns give the
    mean service time and :func:`expected_fidelity` at (N0, tau); with
    ``analytic=True`` no simulation is run and they fill both columns.
    """
    tau_grid = list(tau_grid)
    if not tau_grid:
        raise ValueError("tau_grid must not be empty")
    p, N = sc.physical, sc.policy.N0
    points = []
    for tau in tau_grid:
        a_lat = lp.mean_service_time(p, N, tau)
        a_fid = lp.expected_fidelity(p, N, tau)
        if analytic:
            points.append(TradeoffPoint(tau, a_lat, a_fid, 0.0, a_lat, a_fid, 0))
            continue
        ts = run(replace(sc, policy=_fixed_at(sc.policy, tau)))
        logs = ts.departures[0]
        steady = logs.departure_time >= sc.horizon / 2
        fid = logs.fidelity[steady]
        se = float(fid.std(ddof=1) / math.sqrt(len(fid))) if len(fid) > 1 else math.nan
        s = ts.summary()
        points.append(
            TradeoffPoint(tau, s.steady_mean_delay, s.steady_mean_fidelity, se, a_lat, a_fid, len(fid))
        )
    return points


GAIN_MODES = {"kappa_tau": Mode.ADAPTIVE_CUTOFF, "kappa_N": Mode.ADAPTIVE_CHANNELS}


@dataclass(frozen=True)
class GainPoint:
    param: str
    gain: float
    summary: Summary


def sweep_gain(sc: Scenario, gain_grid, param: str = "kappa_tau") -> list[GainPoint]:
    """One run per gain value with the matching single-knob adaptive policy."""
    if param not in GAIN_MODES:
        raise ValueError(f"param must be one of {sorted(GAIN_MODES)}, got {param!r}")
    out = []
    for g in gain_grid:
        pol = replace(sc.policy, mode=GAIN_MODES[param], **{param: g})
        ts = run(replace(sc, policy=pol), record=True)
        out.append(GainPoint(param, float(g), ts.summary()))
    return out
