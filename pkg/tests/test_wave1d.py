import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from frontblock.errors import NoWave
from frontblock.nonlinearity import make_cubic, perturb_eta
from frontblock.wave1d import (ShiftFunction, decay_rate, solve_wave, subsolution,
                               supersolution, xi)

C_EXACT = math.sqrt(2) / 4
LAM_EXACT = 1 / math.sqrt(2)


def exact_profile(z, a=0.25):
    # 1 / (1 + exp(z / sqrt 2)), shifted so that it equals a at z = 0
    z0 = math.sqrt(2) * math.log((1 - a) / a)
    return 1 / (1 + np.exp((z + z0) / math.sqrt(2)))


def test_speed_closed_form(wave):
    assert abs(wave.c - C_EXACT) < 1e-9
    assert abs(wave.lam - LAM_EXACT) < 1e-8


def test_profile_matches_closed_form(wave):
    z = np.linspace(-15, 15, 301)
    assert np.max(np.abs(wave(z) - exact_profile(z))) < 1e-6


def test_profile_normalised_and_monotone(wave, cubic):
    assert wave(np.array(0.0)) == pytest.approx(cubic.theta, abs=1e-12)
    assert np.all(np.diff(wave.phi) < 0)
    assert wave.phi[0] > 1 - 1e-6 and wave.phi[-1] < 1e-6
    assert wave.residual < 1e-6


def test_balanced_speed_zero():
    w = solve_wave(make_cubic(0.5))
    assert abs(w.c) < 1e-3


def test_negative_mass_has_no_forward_front():
    with pytest.raises(NoWave):
        solve_wave(make_cubic(0.7))


def test_step_halving(cubic, wave):
    assert abs(solve_wave(cubic, h=1e-3).c - wave.c) < 1e-4


@pytest.mark.parametrize("c, fp0, lam", [(0.0, -1.0, 1.0), (1.0, -2.0, 2.0), (C_EXACT, -0.25, LAM_EXACT)])
def test_decay_rate(c, fp0, lam):
    assert decay_rate(c, fp0) == pytest.approx(lam, abs=1e-12)


def test_tail_slope_fit(wave):
    z = np.linspace(20, 30, 50)
    slope = np.polyfit(z, np.log(wave(z)), 1)[0]
    assert -slope == pytest.approx(wave.lam, rel=1e-3)


def test_xi_against_ode(shift):
    s = ShiftFunction(0.1, LAM_EXACT, C_EXACT)
    t0, t1 = -60.0, -20.0
    rhs = lambda t, y: [s.M * math.exp(s.lam * (s.c * t + y[0]))]  # noqa: E731
    sol = solve_ivp(rhs, (t0, t1), [float(xi(t0, s))], rtol=1e-11, atol=1e-14)
    direct = -(1 / s.lam) * math.log(1 - (s.M / s.c) * math.exp(s.lam * s.c * t1))
    assert float(xi(t1, s)) == pytest.approx(direct, rel=1e-12)
    assert sol.y[0, -1] == pytest.approx(direct, rel=1e-7)


def test_xi_limits():
    s = ShiftFunction(0.1, LAM_EXACT, C_EXACT)
    assert abs(float(xi(-400.0, s))) < 1e-20
    tiny = ShiftFunction(1e-12, LAM_EXACT, C_EXACT)
    assert abs(float(xi(-1.0, tiny))) < 1e-10


def test_sub_super_seams(wave, shift):
    t = -20.0
    assert float(subsolution(t, np.array([0.0]), wave, shift)[0]) == pytest.approx(0.0, abs=1e-14)
    eps = 1e-9
    left = supersolution(t, np.array([-eps]), wave, shift)[0]
    right = supersolution(t, np.array([eps]), wave, shift)[0]
    two_phi = 2 * float(wave(np.array(-wave.c * t - float(xi(t, shift)))))
    assert left == pytest.approx(two_phi, abs=1e-6) and right == pytest.approx(two_phi, abs=1e-6)


@pytest.mark.parametrize("t", [-60.0, -40.0, -20.0, -10.0])
def test_sandwich_around_front(wave, shift, t):
    x = np.linspace(-60, 20, 801)
    sub = subsolution(t, x, wave, shift)
    sup = supersolution(t, x, wave, shift)
    phi = wave(x - wave.c * t)
    assert np.all(sub <= sup + 1e-12)
    if t <= -40:
        assert np.all(sub <= phi + 1e-12) and np.all(phi <= sup + 1e-12)


def test_perturbed_speeds_bracket(cubic, wave):
    speeds = [solve_wave(perturb_eta(cubic, e)).c for e in (0.08, 0.04, 0.02, 0.01)]
    assert all(c >= wave.c - 1e-9 for c in speeds)
    assert all(a >= b - 1e-9 for a, b in zip(speeds, speeds[1:]))
    assert speeds[-1] - wave.c < speeds[0] - wave.c
