import math

import numpy as np
import pytest

from frontblock import geometry as geo
from frontblock.errors import FrontTooClose, NoFront, StabilityViolation
from frontblock.evolve import (Trajectory, estimate_speed, front_position, init_entire,
                               monotonicity_check, residual, run, stable_dt, step)
from frontblock.grid import Field, Grid
from frontblock.wave1d import supersolution


@pytest.fixture(scope="module")
def strip():
    return Grid.build(geo.straight(2.0, truncation=(-30, 10)), 0.2)


@pytest.fixture(scope="module")
def blocked_run(cubic, wave, shift):
    g = Grid.build(geo.abrupt_widen(0.3, 4.0, truncation=(-25, 8)), 0.1)
    u0 = init_entire(g, wave, shift, -30.0)
    traj, u = run(g, u0, cubic, "stationary", t_max=400, snapshot_every=5.0)
    return g, traj, u


@pytest.mark.parametrize("level", [0.0, 0.25, 1.0])
def test_constant_fixed_points(strip, cubic, level):
    u = Field(np.full(strip.n, level), 0.0)
    v = step(strip, u, cubic, stable_dt(strip.dx))
    assert np.max(np.abs(v.values - level)) < 1e-15
    assert v.t == pytest.approx(stable_dt(strip.dx))


def test_step_rejects_unstable_dt(strip, cubic):
    with pytest.raises(StabilityViolation):
        step(strip, Field(np.zeros(strip.n), 0.0), cubic, strip.dx**2)


def test_init_entire(strip, wave, shift):
    u0 = init_entire(strip, wave, shift, -30.0)
    assert u0.max < 1 and u0.min >= 0
    assert np.all(u0.values[strip.x1 > 0] == 0)
    sup = supersolution(-30.0, strip.x1, wave, shift)
    assert np.all(u0.values <= sup + 1e-12)


def test_init_front_guard(strip, wave, shift):
    with pytest.raises(FrontTooClose):
        init_entire(strip, wave, shift, -60.0)


def test_straight_run_reaches_target(strip, cubic, wave, shift):
    u0 = init_entire(strip, wave, shift, -30.0)
    traj, u = run(strip, u0, cubic, "front_reached", x1_target=0.0, t_max=200)
    assert traj.stop == "front_reached"
    # a moving front never trips the stationarity test
    assert all(m > 1e-7 for m in traj.stationarity)
    speed = estimate_speed(traj, x_range=(-20, -2))
    assert speed == pytest.approx(wave.c, rel=0.02)
    lo, hi = traj.bounds
    assert lo >= -1e-12 and hi <= 1 + 1e-12


def test_one_is_stationary_at_once(strip, cubic):
    traj, u = run(strip, Field(np.ones(strip.n), 0.0), cubic, "stationary", t_max=50)
    assert traj.stop == "stationary" and u.t <= 3.0 + 1e-9
    assert monotonicity_check([Field(np.ones(strip.n), 0), u]).passed


def test_t_max_rules(strip, cubic):
    traj, _ = run(strip, Field(np.full(strip.n, 0.6), 0.0), cubic, "t_max", t_max=2.0)
    assert traj.stop == "t_max" and not traj.inconclusive
    with pytest.raises(ValueError):
        run(strip, Field(np.zeros(strip.n), 0.0), cubic, "front_reached")
    with pytest.raises(ValueError):
        run(strip, Field(np.zeros(strip.n), 0.0), cubic, "forever")


def test_synthetic_translation_speed(strip, wave):
    traj = Trajectory()
    for k in range(20):
        x0 = -10 + 2 * strip.dx * k
        u = np.asarray(wave(strip.x1 - x0))
        traj.times.append(0.5 * k)
        traj.fronts.append(front_position(strip, u))
    assert estimate_speed(traj) == pytest.approx(4 * strip.dx, abs=1e-12)


def test_front_position_errors(strip):
    with pytest.raises(NoFront):
        front_position(strip, np.zeros(strip.n))
    with pytest.raises(ValueError):
        estimate_speed(Trajectory(times=[0.0, 1.0], fronts=[0.0, 1.0]))


def test_blocked_passage(blocked_run, cubic):
    g, traj, u = blocked_run
    assert traj.stop == "stationary"
    tail = u.values[g.x1 > g.x1_centres[-1] - 0.1 * (g.x1_centres[-1] - g.x1_centres[0])]
    assert tail.max() < 0.05
    # the front settles: the fitted speed over the final stretch is nil
    assert abs(estimate_speed(traj, window=20.0)) < 1e-3
    assert residual(g, u, cubic) < 10 * 1e-7 + 1e-6


def test_blocked_run_is_monotone(blocked_run):
    _, traj, _ = blocked_run
    rep = monotonicity_check(traj, 1e-8)
    assert rep.passed, rep


def test_monotonicity_report_is_honest(strip, cubic):
    rng = np.random.default_rng(3)
    u0 = Field(rng.random(strip.n), 0.0)
    traj, _ = run(strip, u0, cubic, "t_max", t_max=2.0, snapshot_every=0.5)
    rep = monotonicity_check(traj)
    # random data smooths out, so some cells must go down
    assert not rep.passed and rep.worst < 0


def test_observer_and_guard(strip, cubic, wave, shift):
    seen = []
    u0 = init_entire(strip, wave, shift, -30.0)
    traj, _ = run(strip, u0, cubic, "t_max", t_max=100.0, observer=lambda t, u: seen.append(t),
                  stop_on_truncation=True)
    assert traj.stop == "truncation" and traj.inconclusive
    assert traj.truncation_hit is not None and len(seen) == len(traj.times)


def test_dt_divides_sample(strip, cubic):
    traj, u = run(strip, Field(np.full(strip.n, 0.5), 0.0), cubic, "t_max", t_max=1.0)
    assert u.t == pytest.approx(1.0, abs=1e-12)
    assert traj.dt <= stable_dt(strip.dx)
