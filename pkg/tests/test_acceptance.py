"""Acceptance criteria 1-9.

Each test records one PASS/FAIL line (shown in the terminal summary) and
fails if the check or its runtime limit is missed.  Run alone with
``pytest tests/test_acceptance.py -v``.

Queue-shape rules used below, with mid = [H/8, H/4] and late = [7H/8, H]
windows of a horizon H:
  bounded      late mean <= 2 * mid mean + Q_target
  superlinear  late mean > 4 * mid mean (straight-line growth from zero gives 5)
  divergent    not bounded and late-window OLS slope > 0
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from qrsim import engine
from qrsim import link_physics as lp
from qrsim.config import load_config
from qrsim.control import ControlPolicy, Mode
from qrsim.queue_core import Regime, classify_regime, load
from qrsim.traffic import ArrivalProcess

pytestmark = pytest.mark.slow
P = lp.PhysicalParams(L_att=22.0)
T2 = P.T2


def windows(Q):
    n = len(Q)
    return float(Q[n // 8 : n // 4].mean()), float(Q[7 * n // 8 :].mean())


def bounded(Q, q_target=5.0):
    mid, late = windows(Q)
    return late <= 2 * mid + q_target


def superlinear(Q):
    mid, late = windows(Q)
    return late > 4 * mid


def divergent(Q, slope):
    return not bounded(Q) and slope > 0


def with_mode(sc, mode):
    return replace(sc, policy=replace(sc.policy, mode=Mode(mode)))


@pytest.mark.criterion("1 closed form vs sampled service", 10)
def test_closed_form_matches_sampling(criterion):
    rng = np.random.default_rng(2024)
    taus = [0.1 * T2, 0.5 * T2, 5 * T2] + list(np.exp(rng.uniform(np.log(0.1 * T2), np.log(5 * T2), 9)))
    Ns = rng.integers(1, 33, size=len(taus))
    worst = 0.0
    for N, tau in zip(Ns, taus):
        total, _, _ = lp.sample_service_batch(rng, P, int(N), float(tau), 100_000)
        err = abs(total.mean() / lp.mean_service_time(P, int(N), float(tau)) - 1)
        worst = max(worst, err)
    criterion(worst < 0.01, f"{len(taus)} points, max relative error {worst:.4%} (< 1%)")


@pytest.mark.criterion("2 renewal identity", 1)
def test_renewal_identity(criterion):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        N = int(rng.integers(1, 65))
        tau = float(np.exp(rng.uniform(np.log(1e-8), np.log(1e-3))))
        mu = lp.effective_rate(P, N)
        ET = lp.mean_service_time(P, N, tau)
        q = math.exp(-mu * tau)
        rhs = 1 / (2 * mu) + (1 - q) / mu + q * ET
        worst = max(worst, abs(rhs - ET) / ET)
    criterion(worst < 1e-12, f"100 points, max relative residual {worst:.2e} (< 1e-12)")


@pytest.mark.criterion("3 regime reproduction", 120)
def test_regimes_and_ensembles(criterion):
    base = engine.Scenario(physical=P, policy=ControlPolicy(N0=16, tau0=0.5 * T2))
    ET = lp.mean_service_time(P, 16, 0.5 * T2)
    expected = [(4.5e4, 0.50, Regime.SUBCRITICAL), (9.1e4, 1.00, Regime.CRITICAL), (1e5, 1.10, Regime.SUPERCRITICAL)]
    rhos = [load(lam, ET) for lam, _, _ in expected]
    loads_ok = all(
        abs(r - rho) < 0.01 and classify_regime(r) is reg for r, (_, rho, reg) in zip(rhos, expected)
    )

    sub = engine.run_ensemble(replace(base, arrivals=(ArrivalProcess.poisson(4.5e4),)), 100)
    sub_slope, sub_se = sub.summary_stat("late_slope")
    sub_ok = abs(sub_slope) <= 3 * sub_se and bounded(sub.mean_Q[:, 0])

    sup = engine.run_ensemble(replace(base, arrivals=(ArrivalProcess.poisson(1e5),)), 100)
    sup_slope, _ = sup.summary_stat("late_slope")
    target = 1e5 - 1 / ET
    sup_ok = abs(sup_slope - target) <= 0.1 * target
    criterion(
        loads_ok and sub_ok and sup_ok,
        f"rho = {', '.join(f'{r:.3f}' for r in rhos)}; "
        f"subcritical E[Q] slope {sub_slope:.2f} +/- {sub_se:.2f} /s; "
        f"supercritical slope {sup_slope:.0f} vs lambda - S = {target:.0f} /s",
    )


@pytest.mark.criterion("4 fidelity-latency trade-off", 60)
def test_tradeoff(criterion):
    cfg = load_config("fig2")
    sc = replace(cfg.scenario, physical=P)
    assert sc.policy.N0 == 5
    assert min(cfg.tau_grid) <= 0.1 * T2 and max(cfg.tau_grid) >= 5 * T2
    pts = engine.sweep_tradeoff(sc, cfg.tau_grid)
    fid_dec = all(a.fidelity > b.fidelity for a, b in zip(pts, pts[1:]))
    lat_dec = all(a.latency > b.latency for a, b in zip(pts, pts[1:]))
    z = [abs(p.fidelity - p.analytic_fidelity) / p.fidelity_se for p in pts]
    criterion(
        fid_dec and lat_dec and max(z) <= 3,
        f"fidelity decreasing: {fid_dec}, latency decreasing: {lat_dec}, "
        f"max |sim - analytic| = {max(z):.2f} sigma",
    )


@pytest.mark.criterion("5 gain-sweep stabilisation", 120)
def test_gain_sweep(criterion):
    cfg = load_config("fig5")
    sc = replace(cfg.scenario, physical=P)
    S = lp.service_rate(P, sc.policy.N0, sc.policy.tau0)
    lam = sc.arrivals[0].lam
    near_critical = S < lam < 1.05 * S

    tau_pts = sorted(engine.sweep_gain(sc, cfg.kappa_tau_grid, "kappa_tau"), key=lambda g: g.gain)
    assert tau_pts[0].gain == 0.0
    d0 = tau_pts[0].summary.mean_delay
    ratios = [g.summary.mean_delay / d0 for g in tau_pts[1:]]
    fids = [g.summary.mean_fidelity for g in tau_pts]
    fid_noninc = all(b <= a for a, b in zip(fids, fids[1:]))

    n_pts = sorted(engine.sweep_gain(sc, cfg.kappa_N_grid, "kappa_N"), key=lambda g: g.gain)
    fN0, fNmax = n_pts[0].summary.mean_fidelity, n_pts[-1].summary.mean_fidelity
    criterion(
        near_critical and max(ratios) < 0.1 and fid_noninc and fNmax >= fN0,
        f"lambda/S = {lam / S:.4f}; worst delay ratio {max(ratios):.3f} (< 0.1); "
        f"fidelity nonincreasing in kappa_tau: {fid_noninc}; "
        f"kappa_N fidelity {fN0:.4f} -> {fNmax:.4f}",
    )


@pytest.mark.criterion("6 bursty joint adaptation", 60)
def test_bursty_joint(criterion):
    sc = replace(load_config("fig6b").scenario, physical=P)
    proc = sc.arrivals[0]
    assert (proc.lam_on, proc.lam_off, proc.p10, proc.p01) == (1.2e5, 0.0, 0.01, 0.006)
    assert sc.policy.mode is Mode.JOINT
    joint = engine.run(sc, record=False).summary()
    fixed = engine.run(with_mode(sc, "fixed"), record=False).summary()
    a = joint.peak_delay < fixed.peak_delay
    b = joint.min_inst_fidelity >= fixed.steady_mean_fidelity - 0.02
    c = joint.mean_N < 16
    criterion(
        a and b and c,
        f"peak delay {joint.peak_delay:.3g} vs fixed {fixed.peak_delay:.3g} s; "
        f"min fidelity {joint.min_inst_fidelity:.4f} vs fixed steady {fixed.steady_mean_fidelity:.4f} - 0.02; "
        f"mean N {joint.mean_N:.2f}",
    )


@pytest.mark.criterion("7 two-user asymmetric stabilisation", 60)
def test_two_user_asymmetric(criterion):
    sc = replace(load_config("fig7b").two_user, physical=P)
    lam_a, lam_c = (a.lam for a in sc.arrivals)
    assert lam_a + lam_c == pytest.approx(9.1e4) and lam_a / (lam_a + lam_c) == pytest.approx(0.3)
    fixed = engine.run(with_mode(sc, "fixed"), record=False)
    adapt = engine.run(sc, record=False)
    fixed_ok = superlinear(fixed.Q[:, 1]) and bounded(fixed.Q[:, 0])
    adapt_ok = bounded(adapt.Q[:, 0]) and bounded(adapt.Q[:, 1])
    nA, nC = adapt.summary(0).mean_N, adapt.summary(1).mean_N
    alloc_ok = nA < 8 < nC and abs(nA - 6) <= 2 and abs(nC - 10) <= 2
    mid, late = windows(fixed.Q[:, 1])
    criterion(
        fixed_ok and adapt_ok and alloc_ok,
        f"fixed Q_C late/mid = {late / mid:.2f}; adaptive bounded: {adapt_ok}; "
        f"mean N_A = {nA:.2f}, N_C = {nC:.2f}",
    )


@pytest.mark.criterion("8 two-user criticality and overload", 120)
def test_two_user_symmetric(criterion):
    crit = engine.run(replace(load_config("fig7a").two_user, physical=P), record=False)
    crit_ok = all(bounded(crit.Q[:, u]) and abs(crit.summary(u).mean_N - 8) <= 1 for u in (0, 1))

    over = replace(load_config("fig7c").two_user, physical=P)
    slopes, diverge = {}, True
    for mode in ("adaptive_cutoff", "fixed"):
        ts = engine.run(with_mode(over, mode), record=False)
        diverge &= all(divergent(ts.Q[:, u], ts.summary(u).late_slope) for u in (0, 1))
        slopes[mode] = sum(ts.summary(u).late_slope for u in (0, 1))
    criterion(
        crit_ok and diverge and slopes["adaptive_cutoff"] < slopes["fixed"],
        f"critical: N = {crit.summary(0).mean_N:.2f}/{crit.summary(1).mean_N:.2f}, bounded {crit_ok}; "
        f"overload slopes adaptive {slopes['adaptive_cutoff']:.0f} vs fixed {slopes['fixed']:.0f} /s",
    )


@pytest.mark.criterion("9 determinism and reduction", 10)
def test_determinism(criterion):
    sc = replace(load_config("fig6b").scenario, physical=P, horizon=0.05, seed=2**64 - 1)
    a, b = engine.run(sc), engine.run(sc)

    def same(x, y):
        return (
            all(np.array_equal(getattr(x, f), getattr(y, f)) for f in ("Q", "tau", "N", "lam"))
            and all(
                np.array_equal(getattr(dx, c), getattr(dy, c))
                for dx, dy in zip(x.departures, y.departures)
                for c in ("arrival_time", "departure_time", "delay", "fidelity")
            )
        )

    repro = same(a, b)
    zero = replace(sc.policy, kappa_tau=0.0, kappa_N=0.0)
    fixed = engine.run(replace(sc, policy=replace(zero, mode=Mode.FIXED)))
    reduces = all(
        same(engine.run(replace(sc, policy=replace(zero, mode=m))), fixed)
        for m in (Mode.ADAPTIVE_CUTOFF, Mode.ADAPTIVE_CHANNELS, Mode.JOINT)
    )
    criterion(repro and reduces, f"same seed identical: {repro}; zero-gain adaptive == fixed: {reduces}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
