"""Command-line experiment drivers.

Exit status: 0 success, 1 configuration error, 2 runtime error.
Seed precedence: ``--seed`` > ``$QRSIM_SEED`` > ``sim.seed`` in the config > 0.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import engine, report
from .config import ConfigError, RunConfig, load_config, parse_config
from .control import Mode
from .link_physics import UnserviceableError, mean_service_time
from .queue_core import classify_regime, load
from .traffic import ArrivalProcess

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
SEED_ENV = "QRSIM_SEED"


class OutputExistsError(RuntimeError):
    pass


def resolve_seed(flag: int | None, env: str | None, configured: int) -> int:
    if flag is not None:
        return flag
    if env not in (None, ""):
        try:
            return int(env, 0)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from None
    return configured


def _check_free(paths, force: bool) -> None:
    if force:
        return
    taken = [str(p) for p in paths if Path(p).exists()]
    if taken:
        raise OutputExistsError(f"refusing to overwrite {', '.join(taken)} (use --force)")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _policy_runs(cfg: RunConfig, sc: engine.Scenario, out: Path):
    """(scenario, directory) pairs: the configured policy, plus fixed if requested."""
    if cfg.compare_fixed and sc.policy.mode is not Mode.FIXED:
        fixed = replace(sc, policy=replace(sc.policy, mode=Mode.FIXED))
        return [(sc, out / sc.policy.mode.value), (fixed, out / "fixed")]
    return [(sc, out)]


def _trace_files(users, trace: bool):
    names = ["summary.txt"]
    if trace:
        names += ["steps.csv"] + report.departure_files(users)
    return names


def cmd_simulate(cfg: RunConfig, sc: engine.Scenario, out: Path, force: bool) -> None:
    users = ("",) if sc.mode is engine.SimMode.SINGLE else ("A", "C")
    plan = _policy_runs(cfg, sc, out)
    _check_free([d / f for _, d in plan for f in _trace_files(users, cfg.trace)], force)
    for scen, d in plan:
        ts = engine.run(scen, record=cfg.trace)
        text = report.report_summary(ts, scen)
        if cfg.trace:
            report.emit_csv(ts, d)
        _write_text(d / "summary.txt", text)
        print(f"== {d}\n{text}", end="")


def cmd_ensemble(cfg: RunConfig, sc: engine.Scenario, out: Path, runs: int, force: bool) -> None:
    lambdas = cfg.ensemble_lambdas or (sc.arrivals[0].lam,)
    single = len(lambdas) == 1 and not cfg.ensemble_lambdas
    dirs = [out if single else out / f"lambda_{lam:g}" for lam in lambdas]
    _check_free([d / f for d in dirs for f in ("ensemble.csv", "summary.txt")], force)
    for lam, d in zip(lambdas, dirs):
        scen = sc if single else replace(sc, arrivals=(ArrivalProcess.poisson(lam),))
        ens = engine.run_ensemble(scen, runs)
        ET = mean_service_time(scen.physical, scen.policy.N0, scen.policy.tau0)
        rho = load(scen.arrivals[0].current_rate, ET)
        slope, slope_se = ens.summary_stat("late_slope")
        qbar, qbar_se = ens.summary_stat("steady_mean_Q")
        text = (
            f"lambda: {lam:.6g}  runs: {runs}  policy: {scen.policy.mode.value}\n"
            f"rho: {rho:.6g}  regime: {classify_regime(rho, scen.regime_eps).value}\n"
            f"late-window slope of E[Q]: {slope:.6g} +/- {slope_se:.3g} /s"
            f"  (lambda - S = {lam - 1.0 / ET:.6g} /s)\n"
            f"steady mean Q: {qbar:.6g} +/- {qbar_se:.3g}\n"
        )
        d.mkdir(parents=True, exist_ok=True)
        report.write_ensemble_csv(ens, d / "ensemble.csv")
        _write_text(d / "summary.txt", text)
        print(f"== {d}\n{text}", end="")


def cmd_sweep_tau(cfg: RunConfig, sc: engine.Scenario, out: Path, force: bool) -> None:
    _check_free([out / "tradeoff.csv"], force)
    points = engine.sweep_tradeoff(sc, cfg.tau_grid, analytic=cfg.analytic)
    header = ["tau", "latency", "fidelity", "fidelity_se", "analytic_latency",
              "analytic_fidelity", "n_departures"]
    rows = [[p.tau, p.latency, p.fidelity, p.fidelity_se, p.analytic_latency,
             p.analytic_fidelity, p.n_departures] for p in points]
    out.mkdir(parents=True, exist_ok=True)
    report.write_table_csv(header, rows, out / "tradeoff.csv")
    for p in points:
        print(f"tau={p.tau:.3g}  latency={p.latency:.4g} s  fidelity={p.fidelity:.4f}"
              f"  (analytic {p.analytic_fidelity:.4f})")


GAIN_FIELDS = ["mean_Q", "mean_delay", "peak_delay", "mean_fidelity", "mean_tau",
               "std_tau", "mean_N", "std_N", "total_served"]


def cmd_sweep_gain(cfg: RunConfig, sc: engine.Scenario, out: Path, force: bool) -> None:
    grids = [("kappa_tau", cfg.kappa_tau_grid), ("kappa_N", cfg.kappa_N_grid)]
    grids = [(k, g) for k, g in grids if g]
    if not grids:
        raise ConfigError("sweep-gain needs sweep.kappa_tau_grid and/or sweep.kappa_N_grid")
    _check_free([out / "gain_sweep.csv"], force)
    rows = []
    for param, grid in grids:
        for gp in engine.sweep_gain(sc, grid, param):
            rows.append([param, gp.gain] + [getattr(gp.summary, f) for f in GAIN_FIELDS])
            print(f"{param}={gp.gain:.4g}  delay={gp.summary.mean_delay:.4g} s"
                  f"  fidelity={gp.summary.mean_fidelity:.4f}  std_tau={gp.summary.std_tau:.3g}"
                  f"  std_N={gp.summary.std_N:.3g}")
    out.mkdir(parents=True, exist_ok=True)
    report.write_table_csv(["param", "gain"] + GAIN_FIELDS, rows, out / "gain_sweep.csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrsim", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file, or a shipped scenario name such as fig3")
    common.add_argument("--seed", type=lambda s: int(s, 0), help="unsigned 64-bit seed")
    common.add_argument("--out", type=Path, help="output directory (default: output.path)")
    common.add_argument("--trace", choices=("on", "off"), help="write per-step/departure CSVs")
    common.add_argument("--runs", type=int, help="ensemble size")
    common.add_argument("--force", action="store_true", help="overwrite existing outputs")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("run", "single-user simulation"),
        ("ensemble", "Monte Carlo ensemble of single-user runs"),
        ("sweep-tau", "fidelity-latency trade-off over sweep.tau_grid"),
        ("sweep-gain", "feedback-gain sensitivity sweep"),
        ("two-user", "two users sharing a channel pool"),
    ]:
        sub.add_parser(name, parents=[common], help=helptext)
    return parser


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else parse_config("")
    seed = resolve_seed(args.seed, os.environ.get(SEED_ENV), cfg.scenario.seed)
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if args.runs is not None and args.runs < 1:
        raise ConfigError("--runs must be >= 1")
    changes = {"scenario": replace(cfg.scenario, seed=seed),
               "two_user": replace(cfg.two_user, seed=seed)}
    if args.trace is not None:
        changes["trace"] = args.trace == "on"
    if args.runs is not None:
        changes["runs"] = args.runs
    if args.out is not None:
        changes["out_dir"] = args.out
    return replace(cfg, **changes)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = cfg.out_dir
    try:
        if args.command == "run":
            cmd_simulate(cfg, cfg.scenario, out, args.force)
        elif args.command == "two-user":
            cmd_simulate(cfg, cfg.two_user, out, args.force)
        elif args.command == "ensemble":
            cmd_ensemble(cfg, cfg.scenario, out, cfg.runs, args.force)
        elif args.command == "sweep-tau":
            cmd_sweep_tau(cfg, cfg.scenario, out, args.force)
        else:
            cmd_sweep_gain(cfg, cfg.scenario, out, args.force)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UnserviceableError, OutputExistsError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
