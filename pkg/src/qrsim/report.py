"""CSV output and plain-text run summaries."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .engine import DepartureLog, EnsembleResult, Scenario, SimMode, TimeSeries, summarize
from .queue_core import classify_regime

DEPARTURE_COLUMNS = ("arrival_time", "departure_time", "delay", "fidelity")


def _fmt(x) -> str:
    # repr gives the shortest string that round-trips exactly
    if isinstance(x, str):
        return x
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(int(x))


def step_columns(users: tuple[str, ...]) -> list[str]:
    if users == ("",):
        return ["t", "Q", "tau", "N", "lambda_inst"]
    cols = ["t"]
    for name in ("Q", "tau", "N", "lambda_inst"):
        cols += [f"{name}_{u}" for u in users]
    return cols


def departure_files(users: tuple[str, ...]) -> list[str]:
    if users == ("",):
        return ["departures.csv"]
    return [f"departures_{u}.csv" for u in users]


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_steps_csv(ts: TimeSeries, path: Path) -> None:
    n_users = len(ts.users)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(step_columns(ts.users))
        t = ts.t.tolist()
        Q, tau, N, lam = (a.tolist() for a in (ts.Q, ts.tau, ts.N, ts.lam))
        for k in range(len(t)):
            row = [repr(t[k])]
            row += [str(Q[k][u]) for u in range(n_users)]
            row += [repr(tau[k][u]) for u in range(n_users)]
            row += [str(N[k][u]) for u in range(n_users)]
            row += [repr(lam[k][u]) for u in range(n_users)]
            w.writerow(row)


def write_departures_csv(log: DepartureLog | None, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(DEPARTURE_COLUMNS)
        if log is None:
            return
        cols = [a.tolist() for a in (log.arrival_time, log.departure_time, log.delay, log.fidelity)]
        w.writerows([repr(x) for x in row] for row in zip(*cols))


def emit_csv(ts: TimeSeries, out_dir: Path) -> list[Path]:
    """Write ``steps.csv`` and the departure file(s) into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / "steps.csv"]
    write_steps_csv(ts, paths[0])
    for name, log in zip(departure_files(ts.users), ts.departures):
        path = out_dir / name
        write_departures_csv(log, path)
        paths.append(path)
    return paths


def read_steps_csv(path: Path, users: tuple[str, ...] = ("",)) -> dict[str, np.ndarray]:
    """Inverse of :func:`write_steps_csv`; arrays are (steps, users) like TimeSeries."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header != step_columns(users):
        raise ValueError(f"unexpected header {header}")
    n_users = len(users)
    out = {"t": np.array([float(r[0]) for r in body])}
    for i, (name, conv, dtype) in enumerate(
        [("Q", int, np.int64), ("tau", float, float), ("N", int, np.int64), ("lambda_inst", float, float)]
    ):
        start = 1 + i * n_users
        out[name] = np.array(
            [[conv(r[start + u]) for u in range(n_users)] for r in body], dtype=dtype
        ).reshape(len(body), n_users)
    return out


def read_departures_csv(path: Path) -> DepartureLog:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != DEPARTURE_COLUMNS:
        raise ValueError(f"unexpected header {rows[0]}")
    return DepartureLog.from_records([[float(x) for x in r] for r in rows[1:]])


def summaries_from_csv(out_dir: Path, sc: Scenario, users: tuple[str, ...] = ("",)):
    """Recompute per-user summaries from emitted files."""
    out_dir = Path(out_dir)
    steps = read_steps_csv(out_dir / "steps.csv", users)
    result = []
    for u, name in enumerate(departure_files(users)):
        log = read_departures_csv(out_dir / name)
        result.append(
            summarize(steps["t"], steps["Q"][:, u], steps["tau"][:, u], steps["N"][:, u],
                      log, sc.physical, sc.horizon)
        )
    return result


def write_ensemble_csv(ens: EnsembleResult, path: Path) -> None:
    if ens.users == ("",):
        header = ["t", "mean_Q", "se_Q"]
    else:
        header = ["t"] + [f"mean_Q_{u}" for u in ens.users] + [f"se_Q_{u}" for u in ens.users]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(header)
        t, m, s = ens.t.tolist(), ens.mean_Q.tolist(), ens.se_Q.tolist()
        for k in range(len(t)):
            w.writerow([repr(t[k])] + [repr(x) for x in m[k]] + [repr(x) for x in s[k]])


def write_table_csv(header, rows, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(header)
        w.writerows([_fmt(x) for x in row] for row in rows)


def _num(x: float, unit: str = "") -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "absent"
    return f"{x:.6g}{unit}"


def report_summary(ts: TimeSeries, sc: Scenario) -> str:
    """Human-readable summary: load, regime and per-user time averages."""
    rho = sc.offered_load()
    pol = sc.policy
    label = "rho_tot" if sc.mode is SimMode.TWO_USER else "rho"
    lines = [
        f"mode: {sc.mode.value}  policy: {pol.mode.value}  N0={pol.N0}  tau0={pol.tau0:.6g} s",
        f"horizon: {sc.horizon:.6g} s  dt: {sc.dt:.6g} s  seed: {sc.seed}",
        f"{label}: {rho:.6g}",
        f"regime: {classify_regime(rho, sc.regime_eps).value}",
    ]
    for u, name in enumerate(ts.users):
        s = ts.summary(u)
        tag = f"[user {name}] " if name else ""
        lines += [
            f"{tag}mean Q: {_num(s.mean_Q)}  steady mean Q: {_num(s.steady_mean_Q)}"
            f"  late slope: {_num(s.late_slope, ' /s')}",
            f"{tag}mean delay: {_num(s.mean_delay, ' s')}  peak delay: {_num(s.peak_delay, ' s')}",
            f"{tag}mean fidelity: {_num(s.mean_fidelity)}"
            f"  min instantaneous fidelity: {_num(s.min_inst_fidelity)}",
            f"{tag}mean N: {_num(s.mean_N)}  std N: {_num(s.std_N)}"
            f"  mean tau: {_num(s.mean_tau, ' s')}  std tau: {_num(s.std_tau, ' s')}",
            f"{tag}total served: {s.total_served}  total arrived: {ts.total_arrived[u]}",
        ]
    return "\n".join(lines) + "\n"
