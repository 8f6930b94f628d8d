"""Cylinder-like 2D domains bounded by two graphs.

Walls are given as lists of ``(x1, y)`` breakpoints joined by straight
segments; a repeated ``x1`` gives a vertical jump. Profiles are constant
outside the breakpoint range. Corners and jumps are smoothed by exact
convolution with the C^2 kernel ``35/32 (1 - s^2)^3`` of half-width
``smoothing_length``, so values and the first two derivatives are closed form.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad

from .nonlinearity import Check, ValidityReport

_K = Polynomial([1.0, 0.0, -3.0, 0.0, 3.0, 0.0, -1.0]) * (35.0 / 32.0)
_CDF = _K.integ(lbnd=-1.0)
_RAMP = _CDF.integ(lbnd=-1.0)
_DK = _K.deriv()

TOL_GEOM = 1e-9


def _smoothed_step(s, deriv):
    """Derivatives (in s) of the mollified Heaviside at scale 1."""
    inside = np.abs(s) < 1
    out = np.zeros_like(s)
    if deriv == 0:
        out[s >= 1] = 1.0
        out[inside] = _CDF(s[inside])
    elif deriv == 1:
        out[inside] = _K(s[inside])
    else:
        out[inside] = _DK(s[inside])
    return out


def _smoothed_ramp(s, deriv):
    """Derivatives (in s) of the mollified ``max(s, 0)`` at scale 1."""
    if deriv == 0:
        out = np.where(s >= 1, s, 0.0)
        inside = np.abs(s) < 1
        out[inside] = _RAMP(s[inside])
        return out
    return _smoothed_step(s, deriv - 1)


class Profile:
    """Mollified piecewise-linear wall ``x1 -> y``."""

    def __init__(self, points, smoothing_length: float = 0.1):
        pts = [(float(x), float(y)) for x, y in points]
        if not pts:
            raise ValueError("a wall needs at least one breakpoint")
        xs = [p[0] for p in pts]
        if any(b < a for a, b in zip(xs, xs[1:])):
            raise ValueError("wall breakpoints must be ordered in x1")
        self.points = tuple(pts)
        self.ell = float(smoothing_length)
        if self.ell < 0:
            raise ValueError("smoothing_length must be >= 0")
        # group by abscissa: first and last ordinate at each distinct x1
        groups = []
        for x, y in pts:
            if groups and groups[-1][0] == x:
                groups[-1][2] = y
            else:
                groups.append([x, y, y])
        self.base = groups[0][1]
        knots, jumps, kinks = [], [], []
        slope_left = 0.0
        for i, (x, y_in, y_out) in enumerate(groups):
            if i + 1 < len(groups):
                nx, ny, _ = groups[i + 1]
                slope_right = (ny - y_out) / (nx - x)
            else:
                slope_right = 0.0
            knots.append(x)
            jumps.append(y_out - y_in)
            kinks.append(slope_right - slope_left)
            slope_left = slope_right
        self.knots = np.array(knots)
        self.jumps = np.array(jumps)
        self.kinks = np.array(kinks)

    @property
    def left_value(self) -> float:
        return self.base

    @property
    def right_value(self) -> float:
        return self.points[-1][1]

    def __call__(self, x, deriv: int = 0):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.full(x.shape, self.base if deriv == 0 else 0.0)
        ell = self.ell
        for xk, jk, sk in zip(self.knots, self.jumps, self.kinks):
            d = x - xk
            if ell > 0:
                s = d / ell
                scale = ell ** (-deriv)
                if jk:
                    out += jk * scale * _smoothed_step(s, deriv)
                if sk:
                    out += sk * ell * scale * _smoothed_ramp(s, deriv)
            else:
                if deriv == 0:
                    out += jk * (d >= 0) + sk * np.maximum(d, 0.0)
                elif deriv == 1:
                    out += sk * (d >= 0)
        return out

    def support(self):
        """x1 intervals where the profile is not locally linear."""
        return [(x - self.ell, x + self.ell) for x in self.knots]


@dataclass(frozen=True, eq=False)
class DomainSpec:
    """``{(x1, x2): bottom(x1) < x2 < top(x1)}`` truncated to ``[x1_min, x1_max]``."""

    top: tuple
    bottom: tuple
    smoothing_length: float = 0.1
    truncation: tuple = (-40.0, 20.0)
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "top", tuple(map(tuple, self.top)))
        object.__setattr__(self, "bottom", tuple(map(tuple, self.bottom)))
        object.__setattr__(self, "truncation", tuple(map(float, self.truncation)))
        object.__setattr__(self, "_top", Profile(self.top, self.smoothing_length))
        object.__setattr__(self, "_bot", Profile(self.bottom, self.smoothing_length))
        lo, hi = self.truncation
        if not lo < hi:
            raise ValueError("truncation window must satisfy x1_min < x1_max")
        if min(self.top[0][0], self.bottom[0][0]) < 0:
            raise ValueError("walls must be constant for x1 < 0: first breakpoint needs x1 >= 0")
        x = self.sample_x(2001)
        if np.any(self.h_top(x) <= 0) or np.any(self.h_bot(x) >= 0):
            raise ValueError("the axis x2 = 0 must stay strictly inside the domain")

    # profiles -------------------------------------------------------------
    def h_top(self, x, deriv: int = 0):
        return self._top(x, deriv)

    def h_bot(self, x, deriv: int = 0):
        return self._bot(x, deriv)

    def half_width(self, x):
        """Distance from the axis to the nearer wall."""
        return np.minimum(self.h_top(x), -self.h_bot(x))

    @property
    def left_width(self) -> tuple:
        return self._top.left_value, self._bot.left_value

    @property
    def x1_min(self) -> float:
        return self.truncation[0]

    @property
    def x1_max(self) -> float:
        return self.truncation[1]

    def with_truncation(self, x1_min=None, x1_max=None) -> "DomainSpec":
        lo = self.x1_min if x1_min is None else x1_min
        hi = self.x1_max if x1_max is None else x1_max
        return DomainSpec(self.top, self.bottom, self.smoothing_length, (lo, hi),
                          self.name, dict(self.params))

    def breakpoints(self):
        return np.unique(np.concatenate([self._top.knots, self._bot.knots]))

    def sample_x(self, n: int = 4001, lo=None, hi=None):
        """Uniform samples of the window, densified around every smoothed corner."""
        lo = self.x1_min if lo is None else lo
        hi = self.x1_max if hi is None else hi
        xs = [np.linspace(lo, hi, n)]
        ell = max(self.smoothing_length, 1e-3)
        for k in self.breakpoints():
            xs.append(np.linspace(k - 1.2 * ell, k + 1.2 * ell, 97))
        x = np.unique(np.concatenate(xs))
        return x[(x >= lo) & (x <= hi)]

    def to_dict(self) -> dict:
        return {"top": [list(p) for p in self.top], "bottom": [list(p) for p in self.bottom],
                "smoothing_length": self.smoothing_length, "truncation": list(self.truncation)}


# --------------------------------------------------------------------------
# boundary normals and geometric predicates
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BoundarySamples:
    points: np.ndarray    # (n, 2)
    normals: np.ndarray   # (n, 2), outward unit
    wall: np.ndarray      # +1 top, -1 bottom


def normals(spec: DomainSpec, n_samples: int = 4001) -> BoundarySamples:
    x = spec.sample_x(n_samples)
    tp, tq = spec.h_top(x), spec.h_top(x, 1)
    bp, bq = spec.h_bot(x), spec.h_bot(x, 1)
    nt = np.stack([-tq, np.ones_like(tq)], axis=1)
    nb = np.stack([bq, -np.ones_like(bq)], axis=1)
    nrm = np.concatenate([nt, nb])
    nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
    pts = np.concatenate([np.stack([x, tp], 1), np.stack([x, bp], 1)])
    wall = np.concatenate([np.ones(len(x), int), -np.ones(len(x), int)])
    return BoundarySamples(pts, nrm, wall)


@dataclass
class GeometryCheck:
    passed: bool
    worst_value: float
    witness: tuple   # boundary point attaining the worst value

    def __bool__(self):
        return self.passed


def _worst(values, pts, tol):
    i = int(np.argmin(values))
    return GeometryCheck(bool(values[i] >= -tol), float(values[i]), (float(pts[i, 0]), float(pts[i, 1])))


def is_decreasing(spec: DomainSpec, n_samples: int = 4001, tol: float = TOL_GEOM) -> GeometryCheck:
    """First normal component non-negative on the whole sampled boundary."""
    bs = normals(spec, n_samples)
    return _worst(bs.normals[:, 0], bs.points, tol)


def is_star_shaped_axis(spec: DomainSpec, n_samples: int = 4001, tol: float = TOL_GEOM) -> GeometryCheck:
    """``nu' . x' >= 0`` on the sampled boundary (cross sections star-shaped about the axis)."""
    bs = normals(spec, n_samples)
    return _worst(bs.normals[:, 1] * bs.points[:, 1], bs.points, tol)


def passage_measure(spec: DomainSpec, a: float, b: float) -> float:
    """Area of the domain between ``x1 = a`` and ``x1 = b``."""
    if not a < b:
        raise ValueError("need a < b")
    ell = spec.smoothing_length
    pts = [p for k in spec.breakpoints() for p in (k - ell, k, k + ell) if a < p < b]
    width = lambda x: float(spec.h_top(x)[0] - spec.h_bot(x)[0])
    val, _ = quad(width, a, b, points=sorted(set(pts)) or None, limit=400,
                  epsabs=1e-12, epsrel=1e-12)
    return val


def check_increasing_hypotheses(spec: DomainSpec, L: float, R: float, C: float,
                                n_samples: int = 4001, tol: float = TOL_GEOM) -> ValidityReport:
    """Hypotheses of complete invasion into a widening domain.

    One check each: the strip ``|x2| < R`` fits inside the domain, the part
    ``x1 > L`` is convex, the part ``x1 < L + R`` lies in ``|x2| < C``, and the
    normals point backwards (``nu1 <= 0``) for ``x1 < L + R``.
    """
    ext = spec.smoothing_length + 1.0
    lo = min(spec.x1_min, spec.breakpoints().min() - ext)
    hi = max(spec.x1_max, spec.breakpoints().max() + ext)
    x = spec.sample_x(n_samples, lo, hi)
    checks = []

    hw = spec.half_width(x)
    i = int(np.argmin(hw))
    checks.append(Check("strip inside domain", bool(hw[i] >= R), x[i], hw[i] - R))

    right = x[x > L]
    if len(right):
        curv = np.maximum(spec.h_top(right, 2), -spec.h_bot(right, 2))
        i = int(np.argmax(curv))
        checks.append(Check("right part convex", bool(curv[i] <= tol), right[i], curv[i]))
    else:
        checks.append(Check("right part convex", True))

    left = x[x < L + R]
    ext_w = np.maximum(spec.h_top(left), -spec.h_bot(left))
    i = int(np.argmax(ext_w))
    checks.append(Check("left part bounded", bool(ext_w[i] <= C), left[i], ext_w[i] - C))

    # nu1 <= 0: top slope >= 0, bottom slope <= 0
    slope = np.minimum(spec.h_top(left, 1), -spec.h_bot(left, 1))
    i = int(np.argmin(slope))
    checks.append(Check("left part widening", bool(slope[i] >= -tol), left[i], slope[i]))
    return ValidityReport(checks)


# --------------------------------------------------------------------------
# presets
# --------------------------------------------------------------------------

def _symmetric(top, **kw) -> DomainSpec:
    bottom = [(x, -y) for x, y in top]
    return DomainSpec(top, bottom, **kw)


def straight(half_width: float = 2.0, truncation=(-40.0, 20.0), smoothing_length: float = 0.1) -> DomainSpec:
    return _symmetric([(0.0, half_width)], truncation=truncation, smoothing_length=smoothing_length,
                      name="straight", params={"half_width": half_width})


def funnel_down(wide: float = 3.0, narrow: float = 1.0, start: float = 0.0, length: float = 6.0,
                truncation=(-40.0, 30.0), smoothing_length: float = 0.1) -> DomainSpec:
    """Half-width ``wide`` for ``x1 < start``, linear taper to ``narrow`` over ``length``."""
    return _symmetric([(start, wide), (start + length, narrow)], truncation=truncation,
                      smoothing_length=smoothing_length, name="funnel_down",
                      params=dict(wide=wide, narrow=narrow, start=start, length=length))


def narrow_passage(eps: float = 0.05, length: float = 1.0, wide: float = 3.0, start: float = 0.0,
                   truncation=(-40.0, 20.0), smoothing_length: float = 0.1) -> DomainSpec:
    """Wide cylinder interrupted by a channel of half-width ``eps`` on ``[start, start + length]``."""
    top = [(start, wide), (start, eps), (start + length, eps), (start + length, wide)]
    return _symmetric(top, truncation=truncation, smoothing_length=smoothing_length,
                      name="narrow_passage", params=dict(eps=eps, length=length, wide=wide, start=start))


def abrupt_widen(r: float = 0.05, R_wide: float = 4.0, at: float = 0.0,
                 truncation=(-40.0, 12.0), smoothing_length: float = 0.1) -> DomainSpec:
    """Channel of half-width ``r`` opening at ``x1 = at`` into half-width ``R_wide``."""
    return _symmetric([(at, r), (at, R_wide)], truncation=truncation, smoothing_length=smoothing_length,
                      name="abrupt_widen", params=dict(r=r, R_wide=R_wide, at=at))


def hourglass(wide: float = 3.0, waist: float = 0.5, start: float = 0.0, length: float = 6.0,
              truncation=(-40.0, 20.0), smoothing_length: float = 0.1) -> DomainSpec:
    """Linear neck from ``wide`` down to ``waist`` (middle of ``length``) and back up."""
    top = [(start, wide), (start + length / 2, waist), (start + length, wide)]
    return _symmetric(top, truncation=truncation, smoothing_length=smoothing_length,
                      name="hourglass", params=dict(wide=wide, waist=waist, start=start, length=length))


def flare(narrow: float = 8.0, wide: float = 12.0, start: float = 0.0, length: float = 8.0,
          truncation=(-40.0, 30.0), smoothing_length: float = 0.1) -> DomainSpec:
    """Half-width ``narrow`` widening linearly to ``wide`` over ``length``, then constant."""
    return _symmetric([(start, narrow), (start + length, wide)], truncation=truncation,
                      smoothing_length=smoothing_length, name="flare",
                      params=dict(narrow=narrow, wide=wide, start=start, length=length))


PRESETS = {
    "straight": straight,
    "funnel_down": funnel_down,
    "narrow_passage": narrow_passage,
    "abrupt_widen": abrupt_widen,
    "hourglass": hourglass,
    "flare": flare,
}


def preset(name: str, **params) -> DomainSpec:
    try:
        maker = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return maker(**params)
