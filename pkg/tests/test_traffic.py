import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qrsim import traffic as tr
from qrsim.traffic import ArrivalProcess, State

probs = st.floats(min_value=0.0, max_value=1.0)


def test_poisson_count_mean(rng):
    proc = ArrivalProcess.poisson(4.5e4)
    n = np.array([tr.arrivals_in_step(rng, proc, 1e-4) for _ in range(20_000)])
    assert abs(n.mean() - 4.5) < 4 * np.sqrt(4.5 / len(n))


def test_zero_rate_gives_no_arrivals(rng):
    assert tr.arrivals_in_step(rng, ArrivalProcess.poisson(0.0), 1.0) == 0
    off = ArrivalProcess.on_off(1e5, 0.0, 0.1, 0.1)
    assert tr.arrivals_in_step(rng, off, 1.0) == 0


def test_current_rate_follows_state():
    proc = ArrivalProcess.on_off(1.2e5, 10.0, 0.006, 0.01)
    assert proc.current_rate == 10.0
    assert tr.step_modulation(np.random.default_rng(0), ArrivalProcess.on_off(1, 0, 1.0, 0.5)).state is State.ON


def test_modulation_extremes(rng):
    stay = ArrivalProcess.on_off(1.0, 0.0, 0.5, 0.0, state="on")
    assert tr.step_modulation(rng, stay).state is State.ON
    flip = ArrivalProcess.on_off(1.0, 0.0, 0.5, 1.0, state="on")
    assert tr.step_modulation(rng, flip).state is State.OFF
    assert flip.current_rate == 1.0


def test_step_modulation_rejects_poisson(rng):
    with pytest.raises(TypeError):
        tr.step_modulation(rng, ArrivalProcess.poisson(1.0))


@given(p01=probs, p10=probs)
def test_stationary_probability(p01, p10):
    if p01 + p10 == 0:
        with pytest.raises(ValueError):
            tr.stationary_on_probability(p01, p10)
        return
    pi = tr.stationary_on_probability(p01, p10)
    assert 0.0 <= pi <= 1.0
    # balance: flow OFF->ON equals flow ON->OFF
    assert (1 - pi) * p01 == pytest.approx(pi * p10, abs=1e-15)


def test_average_rate_of_bursty_source():
    proc = ArrivalProcess.on_off(1.2e5, 0.0, 0.006, 0.01)
    assert tr.average_rate(proc) == pytest.approx(4.5e4)


def test_empirical_on_fraction(rng):
    proc = ArrivalProcess.on_off(1.2e5, 0.0, 0.006, 0.01)
    on = tr.modulation_path(rng, proc, 2_000_000)
    # sojourns are ~100 steps long, so the effective sample is much smaller than n
    assert on.mean() == pytest.approx(0.375, abs=0.02)


def test_modulation_path_matches_stepwise():
    proc = ArrivalProcess.on_off(5.0, 1.0, 0.2, 0.3)
    path = tr.modulation_path(np.random.default_rng(7), proc, 500)
    rng = np.random.default_rng(7)
    states = []
    for _ in range(500):
        proc = tr.step_modulation(rng, proc)
        states.append(proc.state is State.ON)
    assert path.tolist() == states


def test_rate_path_and_counts(rng):
    rates = tr.rate_path(rng, ArrivalProcess.poisson(3.0), 4)
    assert rates.tolist() == [3.0] * 4
    counts = tr.arrival_counts(rng, np.array([0.0, 1e9]), 1.0)
    assert counts[0] == 0 and counts[1] > 0


@pytest.mark.parametrize("kw", [dict(lam=-1.0), dict(p01=1.5), dict(kind="onoff")])
def test_validation(kw):
    with pytest.raises(ValueError):
        ArrivalProcess(**kw)
