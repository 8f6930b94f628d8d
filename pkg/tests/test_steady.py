import math

import numpy as np
import pytest

from frontblock import geometry as geo
from frontblock.errors import LeftBasin, NotStationary, SeamMismatch
from frontblock.evolve import init_entire, run
from frontblock.grid import Field, Grid
from frontblock.steady import (energy, energy_gradient, extend_supersolution, h1_distance,
                               minimize_blocking, steady_state, w0_profile)


@pytest.fixture(scope="module")
def passage_grid():
    return Grid.build(geo.abrupt_widen(0.1, 4.0, truncation=(-25, 8)), 0.1)


@pytest.fixture(scope="module")
def minimiser(passage_grid, cubic):
    return minimize_blocking(passage_grid, cubic, -2.0, 0.0, 8.5)


def test_energy_of_one_and_zero(cubic):
    g = Grid.build(geo.straight(1.0, truncation=(-2, 2)), 0.1)
    assert energy(g, np.ones(g.n), cubic).J == 0.0
    rep = energy(g, np.zeros(g.n), cubic)
    area = 4 * 2.0
    assert rep.measure == pytest.approx(area)
    assert rep.J == pytest.approx(area / 24, rel=1e-12)


def test_energy_subdomain(cubic):
    g = Grid.build(geo.straight(1.0, truncation=(-2, 2)), 0.1)
    rep = energy(g, np.zeros(g.n), cubic, subdomain=(0.0, 2.0))
    assert rep.measure == pytest.approx(4.0)


def test_ramp_energy_bound(cubic):
    g = Grid.build(geo.funnel_down(truncation=(-4, 4)), 0.1)
    a, b = -2.0, 1.0
    w0 = w0_profile(a, b)(g.x1)
    rep = energy(g, w0, cubic, subdomain=(a, b))
    C = 0.5 / (b - a) ** 2 + float(cubic.F(np.linspace(0, 1, 1001)).max())
    assert rep.J <= C * rep.measure


def test_ramp_values():
    r = w0_profile(-1.0, 3.0)
    assert r(-1.0) == 1.0 and r(1.0) == 0.5 and r(3.0) == 0.0
    assert r(-5.0) == 1.0 and r(7.0) == 0.0
    with pytest.raises(ValueError):
        w0_profile(1.0, 1.0)


def test_gradient_against_finite_differences(cubic):
    g = Grid.build(geo.hourglass(truncation=(-1, 7)), 0.2)
    rng = np.random.default_rng(5)
    u = rng.random(g.n)
    grad = energy_gradient(g, u, cubic)
    h = 1e-6
    for k in rng.choice(g.n, 12, replace=False):
        up, dn = u.copy(), u.copy()
        up[k] += h
        dn[k] -= h
        fd = (energy(g, up, cubic).J - energy(g, dn, cubic).J) / (2 * h)
        assert fd == pytest.approx(grad[k], rel=1e-6, abs=1e-10)


def test_minimiser_blocks(minimiser):
    assert minimiser.tail_max(1.0) < 0.05
    assert minimiser.distance < 0.5
    assert minimiser.report.J <= minimiser.report_w0.J


def test_energy_descent(minimiser):
    e = minimiser.energies
    assert len(e) > 100
    assert np.max(np.diff(e)) <= 1e-12


def test_extension(minimiser, passage_grid):
    ext = extend_supersolution(minimiser, passage_grid)
    g = passage_grid
    assert np.all(ext.values[g.x1 < minimiser.a] == 1.0)
    seam = np.abs(g.x1 - minimiser.a) < 1e-9
    assert np.max(1 - ext.values[seam]) <= 1e-9
    assert np.all(ext.values[g.x1 > minimiser.R_cut] == 0.0)


def test_seam_mismatch(minimiser, passage_grid):
    broken = type(minimiser)(**{**minimiser.__dict__,
                                "field": Field(minimiser.field.values * 0.5, 0.0)})
    with pytest.raises(SeamMismatch):
        extend_supersolution(broken, passage_grid)


def test_wide_cylinder_leaves_basin(cubic):
    g = Grid.build(geo.straight(4.0, truncation=(-5, 15)), 0.2)
    with pytest.raises(LeftBasin) as exc:
        minimize_blocking(g, cubic, -1.0, 0.0, 12.0)
    assert exc.value.distance > 0.5


def test_minimiser_arguments(passage_grid, cubic):
    with pytest.raises(ValueError):
        minimize_blocking(passage_grid, cubic, 0.0, -1.0)


def test_h1_distance_zero(passage_grid):
    u = np.random.default_rng(0).random(passage_grid.n)
    assert h1_distance(passage_grid, u, u) == 0.0


def test_steady_state(cubic, wave, shift):
    g = Grid.build(geo.straight(1.0, truncation=(-20, 2)), 0.2)
    traj, u = run(g, Field(np.ones(g.n), 0.0), cubic, "stationary")
    ss = steady_state(traj, u, g, cubic)
    assert ss.residual == 0.0
    traj, u = run(g, init_entire(g, wave, shift, -20.0), cubic, "t_max", t_max=1.0)
    with pytest.raises(NotStationary):
        steady_state(traj, u, g, cubic)


def test_blocked_steady_residual(passage_grid, cubic, wave, shift):
    traj, u = run(passage_grid, init_entire(passage_grid, wave, shift, -30.0), cubic, "stationary",
                  t_max=400)
    ss = steady_state(traj, u, passage_grid, cubic)
    assert ss.residual < 10 * 1e-7
    assert all(r < 1e-7 for r in ss.rates)
