import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frontblock.nonlinearity import (Bistable, make_cubic, make_tabulated, midpoint_rule,
                                     perturb_eta, simpson_rule, validate)

# closed forms for the cubic u (1 - u) (u - a)
BETA_025 = (5 - math.sqrt(7)) / 6


def test_cubic_values(cubic):
    assert cubic.f(0.5) == pytest.approx(0.0625, abs=1e-15)
    assert cubic.f(0.0) == 0 and cubic.f(1.0) == 0 and abs(cubic.f(0.25)) < 1e-15
    assert cubic.mass == pytest.approx(1 / 24, abs=1e-14)
    assert cubic.theta == 0.25


def test_mass_against_simpson(cubic):
    assert simpson_rule(cubic.f, 0, 1, 2048) == pytest.approx(cubic.mass, abs=1e-12)


def test_balanced_mass_is_zero():
    assert abs(make_cubic(0.5).mass) < 1e-15


def test_beta_closed_form(cubic):
    assert cubic.beta == pytest.approx(BETA_025, abs=1e-10)
    # oracle: bisection on the primitive built from Simpson sums
    lo, hi = 0.3, 0.5
    prim = lambda x: simpson_rule(cubic.f, 0, x, 512)  # noqa: E731
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if prim(mid) < 0 else (lo, mid)
    assert cubic.beta == pytest.approx(lo, abs=1e-9)


def test_F_is_tail_integral(cubic):
    for t in (0.0, 0.3, 0.7):
        assert cubic.F(t) == pytest.approx(simpson_rule(cubic.f, t, 1, 1024), abs=1e-12)
    assert cubic.F(1.0) == 0


def test_linear_extension_is_c1(cubic):
    h = 1e-7
    assert (cubic.f(-h) - cubic.f(0)) / -h == pytest.approx(cubic.fprime0, abs=1e-6)
    assert abs(cubic.fprime(-1e-12) - cubic.fprime(1e-12)) < 1e-10
    assert abs(cubic.fprime(1 - 1e-12) - cubic.fprime(1 + 1e-12)) < 1e-10
    assert cubic.fprime0 == pytest.approx(-0.25) and cubic.fprime1 == pytest.approx(-0.75)


def test_validate_cubic_passes(cubic):
    rep = validate(cubic, 1024)
    assert rep.ok, rep.failed()


def test_validate_zero_function_fails():
    z = Bistable(np.array([0.0, 1.0]), np.zeros((3, 4)), theta=0.5)
    rep = validate(z)
    assert not rep["f > 0 on (theta, hi)"].passed


def test_validate_balanced_fails_mass():
    rep = validate(make_cubic(0.5))
    assert not rep["positive mass"].passed


def test_validate_rejects_tiny_sample():
    with pytest.raises(ValueError):
        validate(make_cubic(0.25), 4)


def test_quadrature_rules_agree(cubic):
    assert abs(midpoint_rule(cubic.f, 0, 1, 4096) - simpson_rule(cubic.f, 0, 1, 4096)) < 1e-8


def test_perturb_eta_examples(cubic):
    fe = perturb_eta(cubic, 0.05)
    # 0.5 lies where the perturbed and original functions coincide
    assert fe.f(0.5) == pytest.approx(cubic.f(0.5), abs=1e-15)
    assert fe.f(0.5) == pytest.approx(0.0625, abs=1e-15)
    assert abs(fe.f(1.05)) < 1e-14
    assert abs(fe.f(0.05)) < 1e-14
    assert abs(fe.f(0.25)) < 1e-14


def test_perturb_eta_dominates(cubic):
    fe = perturb_eta(cubic, 0.05)
    s = np.linspace(0.05, 1.05, 2001)
    assert np.all(fe.f(s) >= cubic.f(s) - 1e-14)


def test_perturb_eta_shrinks_to_f(cubic):
    s = np.linspace(0.1, 0.9, 101)
    errs = [np.max(np.abs(perturb_eta(cubic, e).f(s) - cubic.f(s))) for e in (0.04, 0.02, 0.01)]
    assert errs[-1] < 1e-15 or errs[-1] <= errs[0]
    assert errs[-1] < 1e-12


def test_perturb_eta_range(cubic):
    with pytest.raises(ValueError):
        perturb_eta(cubic, 0.2)


def test_tabulated_matches_cubic_shape(cubic):
    u = np.linspace(0, 1, 41)
    tab = make_tabulated(list(zip(u, cubic.f(u))))
    assert tab.theta == pytest.approx(0.25, abs=1e-3)
    assert validate(tab).ok
    assert tab.mass == pytest.approx(1 / 24, rel=1e-3)


def test_round_trip_dict(cubic):
    b = Bistable.from_dict(cubic.scaled(4.0).to_dict())
    assert b.f(0.5) == pytest.approx(0.25)



def test_scale_applies_to_tabulated(cubic):
    u = np.linspace(0, 1, 41)
    knots = [list(k) for k in zip(u, cubic.f(u))]
    b = Bistable.from_dict({"kind": "tabulated", "knots": knots, "scale": 4.0})
    assert b.f(0.6) == pytest.approx(4 * make_tabulated(knots).f(0.6))
    assert Bistable.from_dict(b.to_dict()).f(0.6) == pytest.approx(b.f(0.6))

@given(st.floats(0.05, 0.45))
@settings(max_examples=25, deadline=None)
def test_cubic_properties(a):
    b = make_cubic(a)
    assert b.mass == pytest.approx((1 - 2 * a) / 12, abs=1e-13)
    assert validate(b, 256).ok
    # beta from the quadratic 3x^2 - 4(1+a)x + 6a = 0
    beta = (4 * (1 + a) - math.sqrt(16 * (1 + a) ** 2 - 72 * a)) / 6
    assert b.beta == pytest.approx(beta, abs=1e-9)


@given(st.floats(-2.0, 3.0))
@settings(max_examples=50, deadline=None)
def test_F_positive_away_from_one(t):
    b = make_cubic(0.25)
    if abs(t - 1) > 1e-3:
        assert b.F(t) > 0
