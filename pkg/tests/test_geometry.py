import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frontblock import geometry as geo
from frontblock.geometry import DomainSpec, Profile


def test_straight_normals():
    bs = geo.normals(geo.straight(1.0), 201)
    assert np.allclose(bs.normals[:, 0], 0.0)
    assert np.allclose(np.abs(bs.normals[:, 1]), 1.0)


def test_normals_unit_length():
    bs = geo.normals(geo.funnel_down(), 1001)
    assert np.max(np.abs(np.linalg.norm(bs.normals, axis=1) - 1)) < 1e-12


@pytest.mark.parametrize("slope, nu1", [(-1.0, 1 / math.sqrt(2)), (1.0, -1 / math.sqrt(2))])
def test_normal_on_sloped_wall(slope, nu1):
    top = [(0.0, 3.0), (2.0, 3.0 + 2 * slope)]
    spec = DomainSpec(top, [(0.0, -3.0)], truncation=(-5, 5))
    bs = geo.normals(spec, 1001)
    k = np.argmin(np.abs(bs.points[:, 0] - 1.0) + (bs.wall < 0) * 10)
    assert bs.normals[k, 0] == pytest.approx(nu1, abs=1e-12)


def test_is_decreasing_examples():
    assert geo.is_decreasing(geo.straight())
    assert geo.is_decreasing(geo.funnel_down())
    chk = geo.is_decreasing(geo.abrupt_widen())
    assert not chk and abs(chk.witness[0]) <= 0.1 + 1e-12
    chk = geo.is_decreasing(geo.narrow_passage(0.2, 1.0))
    assert not chk and chk.witness[0] > 0.5


@pytest.mark.parametrize("name", sorted(geo.PRESETS))
def test_graph_domains_star_shaped(name):
    spec = geo.preset(name) if name != "narrow_passage" else geo.preset(name, eps=0.3)
    assert geo.is_star_shaped_axis(spec)


def test_passage_measure_examples():
    assert geo.passage_measure(geo.straight(1.0), 0, 1) == pytest.approx(2.0, abs=1e-12)
    sharp = geo.narrow_passage(0.05, 2.0, smoothing_length=0.0)
    assert geo.passage_measure(sharp, 0, 2) == pytest.approx(0.2, abs=1e-9)


def test_mollified_measure_close_to_raw():
    for ell in (0.2, 0.1, 0.05):
        raw = geo.funnel_down(smoothing_length=0.0)
        mol = geo.funnel_down(smoothing_length=ell)
        diff = abs(geo.passage_measure(mol, -1, 8) - geo.passage_measure(raw, -1, 8))
        assert diff <= 2 * ell**2


def test_left_region_constant():
    spec = geo.hourglass(smoothing_length=0.2)
    x = np.linspace(-30, -0.2 - 1e-9, 500)
    assert np.all(spec.h_top(x) == 3.0) and np.all(spec.h_bot(x) == -3.0)


def test_profile_derivatives_consistent():
    p = Profile([(0, 2), (1, 1), (1, 0.5), (3, 2)], 0.3)
    x = np.linspace(-1, 4, 2001)
    h = 1e-6
    d1 = (p(x + h) - p(x - h)) / (2 * h)
    d2 = (p(x + h, 1) - p(x - h, 1)) / (2 * h)
    assert np.max(np.abs(d1 - p(x, 1))) < 1e-6
    assert np.max(np.abs(d2 - p(x, 2))) < 1e-4
    assert np.isfinite(p(x, 2)).all()


def test_rejects_bad_specs():
    with pytest.raises(ValueError):
        DomainSpec([(-1.0, 1.0)], [(0.0, -1.0)])
    with pytest.raises(ValueError):
        DomainSpec([(0.0, 1.0), (1.0, -0.5)], [(0.0, -1.0)], truncation=(-5, 5))
    with pytest.raises(ValueError):
        geo.preset("nope")


def test_increasing_hypotheses():
    R = 7.4
    rep = geo.check_increasing_hypotheses(geo.straight(R + 1), 0.0, R, R + 2)
    assert rep.ok, rep.failed()
    rep = geo.check_increasing_hypotheses(geo.flare(8, 12), 0.2, R, 12.5)
    assert rep["right part convex"].passed and rep["left part widening"].passed
    rep = geo.check_increasing_hypotheses(geo.hourglass(), 0.2, R, 12.5)
    assert not rep["strip inside domain"].passed


@given(st.floats(-10, 10), st.floats(0.1, 5), st.floats(0.1, 5))
@settings(max_examples=30, deadline=None)
def test_measure_additive_and_monotone(a, l1, l2):
    spec = geo.funnel_down(truncation=(-40, 40))
    m1 = geo.passage_measure(spec, a, a + l1)
    m2 = geo.passage_measure(spec, a + l1, a + l1 + l2)
    m12 = geo.passage_measure(spec, a, a + l1 + l2)
    assert m12 == pytest.approx(m1 + m2, abs=1e-9)
    assert m12 > m1
