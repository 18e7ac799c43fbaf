"""Flat ``key = value`` run configuration with dotted namespaces.

Example::

    # near-critical adaptive cutoff
    policy.mode = adaptive_cutoff
    arrivals.lambda = 9.1e4
    sim.horizon = 0.2

Unknown keys, duplicate keys and malformed lines are errors.  Every key has a
default; a few defaults depend on other keys (``policy.tau0`` on
``physical.T2``, ``policy.kappa_tau`` on ``policy.tau0``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

from .control import ControlPolicy, Mode
from .engine import Scenario, SimMode
from .link_physics import PhysicalParams
from .traffic import ArrivalProcess, Kind, State


class ConfigError(ValueError):
    pass


class ConfigParseError(ConfigError):
    pass


class ConfigValidationError(ConfigError):
    pass


class UnknownKeyError(ConfigError):
    pass


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("on", "true", "yes", "1"):
        return True
    if low in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {text!r}")


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _seed(text: str) -> int:
    return int(text, 0)


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text

    return parse


# key -> (parser, default).  None as default means "derived from other keys".
SCHEMA: dict[str, tuple[Callable[[str], object], object]] = {
    "sim.dt": (float, 1e-6),
    "sim.horizon": (float, 0.2),
    "sim.seed": (_seed, 0),
    "sim.regime_eps": (float, 0.05),
    "physical.L": (float, 100.0),
    "physical.L_att": (float, 22.0),
    "physical.R": (float, 1e6),
    "physical.T2": (float, 1e-5),
    "physical.v0": (float, 0.86),
    "policy.mode": (_choice(*(m.value for m in Mode)), "fixed"),
    "policy.tau0": (float, None),
    "policy.kappa_tau": (float, None),
    "policy.tau_min": (float, None),
    "policy.tau_max": (float, None),
    "policy.N0": (_int, 16),
    "policy.kappa_N": (float, 0.5),
    "policy.N_min": (_int, 1),
    "policy.N_max": (_int, 32),
    "policy.Q_target": (float, 5.0),
    "arrivals.kind": (_choice(*(k.value for k in Kind)), "poisson"),
    "arrivals.lambda": (float, 4.5e4),
    "arrivals.lambda_on": (float, 0.0),
    "arrivals.lambda_off": (float, 0.0),
    "arrivals.p01": (float, 0.0),
    "arrivals.p10": (float, 0.0),
    "arrivals.state": (_choice(*(s.value for s in State)), "off"),
    "two_user.lambda_A": (float, 4.5e4),
    "two_user.lambda_C": (float, 4.5e4),
    "two_user.N_tot": (_int, 16),
    "output.path": (str, "out"),
    "output.trace": (_bool, True),
    "output.runs": (_int, 100),
    "output.compare_fixed": (_bool, False),
    "ensemble.lambdas": (_float_list, ()),
    "sweep.tau_grid": (_float_list, (1e-6, 2e-6, 5e-6, 1e-5, 2e-5, 5e-5)),
    "sweep.analytic": (_bool, False),
    "sweep.kappa_tau_grid": (_float_list, ()),
    "sweep.kappa_N_grid": (_float_list, ()),
}


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    two_user: Scenario
    out_dir: Path = Path("out")
    trace: bool = True
    runs: int = 100
    compare_fixed: bool = False
    ensemble_lambdas: tuple[float, ...] = ()
    tau_grid: tuple[float, ...] = ()
    analytic: bool = False
    kappa_tau_grid: tuple[float, ...] = ()
    kappa_N_grid: tuple[float, ...] = ()
    values: dict = field(default_factory=dict, compare=False)


def read_pairs(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigParseError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key in pairs:
            raise ConfigParseError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def _fail(msg: str) -> None:
    raise ConfigValidationError(msg)


def parse_config(text: str) -> RunConfig:
    pairs = read_pairs(text)
    unknown = sorted(set(pairs) - set(SCHEMA))
    if unknown:
        raise UnknownKeyError(f"unknown key(s): {', '.join(unknown)}")

    v: dict[str, object] = {}
    for key, (parse, default) in SCHEMA.items():
        if key in pairs:
            try:
                v[key] = parse(pairs[key])
            except ValueError as exc:
                raise ConfigValidationError(f"{key}: {exc}") from None
        else:
            v[key] = default
        if isinstance(v[key], float) and not math.isfinite(v[key]) and key != "policy.tau_max":
            _fail(f"{key}: must be finite, got {pairs[key]}")

    T2 = v["physical.T2"]
    if v["policy.tau0"] is None:
        v["policy.tau0"] = 0.5 * T2
    if v["policy.kappa_tau"] is None:
        v["policy.kappa_tau"] = 0.1 * v["policy.tau0"]
    if v["policy.tau_min"] is None:
        v["policy.tau_min"] = 0.1 * T2
    if v["policy.tau_max"] is None:
        v["policy.tau_max"] = 5.0 * T2

    _validate(v)
    try:
        physical = PhysicalParams(
            L=v["physical.L"], L_att=v["physical.L_att"], R=v["physical.R"],
            T2=T2, v0=v["physical.v0"],
        )
        policy = ControlPolicy(
            mode=v["policy.mode"], tau0=v["policy.tau0"], kappa_tau=v["policy.kappa_tau"],
            tau_min=v["policy.tau_min"], tau_max=v["policy.tau_max"],
            N0=v["policy.N0"], kappa_N=v["policy.kappa_N"],
            N_min=v["policy.N_min"], N_max=v["policy.N_max"], Q_target=v["policy.Q_target"],
        )
        if v["arrivals.kind"] == Kind.POISSON.value:
            arrivals = ArrivalProcess.poisson(v["arrivals.lambda"])
        else:
            arrivals = ArrivalProcess.on_off(
                v["arrivals.lambda_on"], v["arrivals.lambda_off"],
                v["arrivals.p01"], v["arrivals.p10"], v["arrivals.state"],
            )
        common = dict(
            physical=physical, policy=policy, dt=v["sim.dt"], horizon=v["sim.horizon"],
            seed=v["sim.seed"], regime_eps=v["sim.regime_eps"],
        )
        single = Scenario(arrivals=(arrivals,), **common)
        pair = Scenario(
            arrivals=(
                ArrivalProcess.poisson(v["two_user.lambda_A"]),
                ArrivalProcess.poisson(v["two_user.lambda_C"]),
            ),
            mode=SimMode.TWO_USER, N_tot=v["two_user.N_tot"], **common,
        )
    except ValueError as exc:
        raise ConfigValidationError(str(exc)) from None

    return RunConfig(
        scenario=single,
        two_user=pair,
        out_dir=Path(v["output.path"]),
        trace=v["output.trace"],
        runs=v["output.runs"],
        compare_fixed=v["output.compare_fixed"],
        ensemble_lambdas=v["ensemble.lambdas"],
        tau_grid=v["sweep.tau_grid"],
        analytic=v["sweep.analytic"],
        kappa_tau_grid=v["sweep.kappa_tau_grid"],
        kappa_N_grid=v["sweep.kappa_N_grid"],
        values=v,
    )


def _validate(v: dict) -> None:
    for key in ("sim.dt", "sim.horizon", "sim.regime_eps", "physical.L_att", "physical.R", "physical.T2"):
        if not v[key] > 0:
            _fail(f"{key}: must be > 0, got {v[key]}")
    if v["sim.horizon"] < v["sim.dt"]:
        _fail(f"sim.horizon ({v['sim.horizon']}) must be >= sim.dt ({v['sim.dt']})")
    if not 0 <= v["sim.seed"] < 2**64:
        _fail("sim.seed: must be an unsigned 64-bit integer")
    if v["physical.L"] < 0:
        _fail(f"physical.L: must be >= 0, got {v['physical.L']}")
    if not 0 <= v["physical.v0"] <= 1:
        _fail(f"physical.v0: must lie in [0, 1], got {v['physical.v0']}")
    if not v["policy.tau_min"] > 0:
        _fail(f"policy.tau_min: must be > 0, got {v['policy.tau_min']}")
    if v["policy.tau_min"] > v["policy.tau_max"]:
        _fail(
            f"policy.tau_min ({v['policy.tau_min']}) must be <= policy.tau_max ({v['policy.tau_max']})"
        )
    if not v["policy.tau_min"] <= v["policy.tau0"] <= v["policy.tau_max"]:
        _fail("policy.tau0 must lie within [policy.tau_min, policy.tau_max]")
    if v["policy.N_min"] < 1:
        _fail(f"policy.N_min: must be >= 1, got {v['policy.N_min']}")
    if v["policy.N_min"] > v["policy.N_max"]:
        _fail(f"policy.N_min ({v['policy.N_min']}) must be <= policy.N_max ({v['policy.N_max']})")
    if not v["policy.N_min"] <= v["policy.N0"] <= v["policy.N_max"]:
        _fail("policy.N0 must lie within [policy.N_min, policy.N_max]")
    for key in ("policy.kappa_tau", "policy.kappa_N"):
        if v[key] < 0:
            _fail(f"{key}: must be >= 0, got {v[key]}")
    for key in ("arrivals.lambda", "arrivals.lambda_on", "arrivals.lambda_off",
                "two_user.lambda_A", "two_user.lambda_C"):
        if v[key] < 0:
            _fail(f"{key}: must be >= 0, got {v[key]}")
    for key in ("arrivals.p01", "arrivals.p10"):
        if not 0 <= v[key] <= 1:
            _fail(f"{key}: must lie in [0, 1], got {v[key]}")
    if v["arrivals.kind"] == Kind.ONOFF.value and v["arrivals.p01"] + v["arrivals.p10"] <= 0:
        _fail("arrivals.p01 + arrivals.p10 must be > 0 for an onoff process")
    if v["two_user.N_tot"] < 2 * v["policy.N_min"]:
        _fail(f"two_user.N_tot ({v['two_user.N_tot']}) must be >= 2 * policy.N_min")
    if v["output.runs"] < 1:
        _fail("output.runs: must be >= 1")
    if any(x < 0 for x in v["ensemble.lambdas"]):
        _fail("ensemble.lambdas: rates must be >= 0")
    if not v["sweep.tau_grid"] or any(not x > 0 for x in v["sweep.tau_grid"]):
        _fail("sweep.tau_grid: needs at least one cutoff, all > 0")
    for key in ("sweep.kappa_tau_grid", "sweep.kappa_N_grid"):
        if any(x < 0 for x in v[key]):
            _fail(f"{key}: gains must be >= 0")


def load_config(path_or_name: str | Path) -> RunConfig:
    """Read a config file, or a shipped scenario by name (``fig3``, ``fig6b``, ...)."""
    path = Path(path_or_name)
    if path.exists():
        text = path.read_text(encoding="utf-8")
    else:
        res = resources.files("qrsim") / "configs" / f"{path_or_name}.cfg"
        if not res.is_file():
            raise ConfigError(f"no config file or shipped scenario named {str(path_or_name)!r}")
        text = res.read_text(encoding="utf-8")
    return parse_config(text)


def shipped_scenarios() -> list[str]:
    folder = resources.files("qrsim") / "configs"
    return sorted(p.name[:-4] for p in folder.iterdir() if p.name.endswith(".cfg"))
