import numpy as np
import pytest

from frontblock import geometry as geo
from frontblock.errors import HypothesisUnmet, SupportViolation
from frontblock.evolve import Trajectory, init_entire, run
from frontblock.grid import Field, Grid
from frontblock.lab import (AXIAL, BLOCKED, COMPLETE, INCONCLUSIVE, UNDETERMINED, cauchy,
                            classify, predict, threshold_scan)
from frontblock.radial import find_R0, find_R1, solve_ball
from frontblock.steady import energy


@pytest.fixture(scope="module")
def R0(cubic):
    return find_R0(cubic, 2, 1e-6)


@pytest.fixture(scope="module")
def small():
    return Grid.build(geo.straight(1.0, truncation=(-10, 5)), 0.2)


def _stationary():
    return Trajectory(stop="stationary", rule="stationary")


def test_classify_trivial(small):
    assert classify(_stationary(), np.ones(small.n), small).verdict == COMPLETE
    assert classify(_stationary(), np.zeros(small.n), small).verdict == BLOCKED
    axial = np.where(np.abs(small.x2) < 0.5, 0.5, 0.01)
    assert classify(_stationary(), axial, small).verdict == AXIAL
    moving = Trajectory(stop="t_max", rule="stationary", inconclusive=True)
    assert classify(moving, np.zeros(small.n), small).verdict == INCONCLUSIVE
    hit = Trajectory(stop="stationary", rule="stationary", truncation_hit=3.0)
    assert classify(hit, np.zeros(small.n), small).verdict == INCONCLUSIVE


def test_classify_is_deterministic(small):
    u = np.linspace(0, 1, small.n)
    a = classify(_stationary(), u, small)
    b = classify(_stationary(), u.copy(), small)
    assert a == b


def test_predict_examples(cubic, R0):
    R1 = find_R1(cubic, 2, 0.05)
    p = predict(geo.straight(), cubic, R0, R1)
    assert p.verdict == COMPLETE and p.rule == "decreasing-cross-section"
    p = predict(geo.flare(8, 12), cubic, R0, R1)
    assert p.verdict == COMPLETE
    p = predict(geo.hourglass(waist=0.5), cubic, R0, R1)
    assert p.verdict == UNDETERMINED and p.notes
    p = predict(geo.abrupt_widen(), cubic, R0, R1)
    assert p.verdict == UNDETERMINED and any("existential" in n for n in p.notes)


def test_predict_without_thresholds():
    p = predict(geo.flare(8, 12))
    assert p.verdict == UNDETERMINED


def test_lower_bound_synthetic(cubic, R0):
    g = Grid.build(geo.straight(2 * R0 + 0.5, truncation=(-4, 4)), 0.25)
    ball = solve_ball(cubic, 2 * R0)
    from frontblock.lab import verify_lower_bound
    ok = verify_lower_bound(np.ones(g.n), ball, g)
    assert ok.passed and ok.delta > 0
    bad = verify_lower_bound(np.zeros(g.n), ball, g)
    assert not bad.passed and abs(bad.where[1]) < g.dx
    narrow = Grid.build(geo.straight(2.0, truncation=(-4, 4)), 0.25)
    with pytest.raises(HypothesisUnmet):
        verify_lower_bound(np.ones(narrow.n), ball, narrow)


@pytest.mark.parametrize("name, params", [("straight", {"truncation": (-30, 10)}),
                                          ("funnel_down", {"truncation": (-30, 12)})])
def test_predict_agrees_with_simulation(cubic, wave, shift, R0, name, params):
    spec = geo.preset(name, **params)
    p = predict(spec, cubic, R0)
    assert p.verdict == COMPLETE
    g = Grid.build(spec, 0.2)
    traj, u = run(g, init_entire(g, wave, shift, -30.0), cubic, "stationary", t_max=400)
    assert classify(traj, u, g).verdict == COMPLETE


def test_scan_without_blocking_reports_no_bracket(cubic):
    # both ends are well above the threshold for 4f (about 0.43 at this resolution)
    def family(eps):
        return geo.abrupt_widen(eps, 2.0, truncation=(-20, 8))
    res = threshold_scan(family, cubic.scaled(4.0), 0.8, 1.0, 0.1, probe_kw={"T": -7.5, "pass_x1": 1.5})
    assert res.bracket is None and res.monotone
    assert all(p.verdict != BLOCKED for p in res.probes)


def test_cauchy_zero_and_support(small, cubic):
    out, traj, u = cauchy(small, np.zeros(small.n), cubic, a=0.0, t_max=50)
    assert out.verdict == BLOCKED
    with pytest.raises(SupportViolation):
        cauchy(small, np.ones(small.n), cubic, a=0.0)
    with pytest.raises(ValueError):
        cauchy(small, np.full(small.n, -0.5) * (small.x1 < 0), cubic, a=0.0)


def test_subthreshold_bump_decays(cubic):
    g = Grid.build(geo.straight(2.0, truncation=(-15, 15)), 0.2)
    bump = 0.2 * np.exp(-(g.x1**2 + g.x2**2))
    # below theta the bump only raises the energy above that of the zero state
    assert energy(g, bump, cubic).J > energy(g, np.zeros(g.n), cubic).J
    out, traj, u = cauchy(g, np.where(g.x1 < 3, bump, 0.0), cubic, a=3.0, t_max=200)
    assert u.max < 1e-3
    assert out.verdict == BLOCKED
