"""Bistable reaction terms.

A :class:`Bistable` wraps a piecewise polynomial ``f`` (continued linearly
outside its stable zeros) together with its primitive and the constants the
solvers need. Everything downstream evaluates ``f`` and ``F`` through the
same ``(xs, coef)`` tables, so the numba kernels and the numpy code agree to
the last bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.interpolate import PchipInterpolator

from .kernels import ppoly_eval


# --------------------------------------------------------------------------
# piecewise-polynomial helpers
# --------------------------------------------------------------------------

def _anchor(xs, p):
    return xs[min(max(p - 1, 0), len(xs) - 1)]


def _shift(c, delta):
    """Coefficients of t -> c(t + delta), lowest power first."""
    out = np.zeros_like(c)
    deg = len(c) - 1
    for j in range(deg, -1, -1):
        # Horner in polynomial arithmetic: out = out * (t + delta) + c[j]
        out = P.polyadd(P.polymul(out, [delta, 1.0]), [c[j]])[: deg + 1]
        out = np.pad(out, (0, deg + 1 - len(out)))
    return out


def _deriv_table(xs, coef):
    d = np.zeros((coef.shape[0], max(coef.shape[1] - 1, 1)))
    for p in range(coef.shape[0]):
        dp = P.polyder(coef[p])
        d[p, : len(dp)] = dp
    return d


def _primitive_table(xs, coef, ref):
    """Table of x -> integral_ref^x of the piecewise polynomial."""
    k = len(xs) - 1
    prim = np.zeros((coef.shape[0], coef.shape[1] + 1))
    for p in range(coef.shape[0]):
        prim[p, 1:] = coef[p] / np.arange(1, coef.shape[1] + 1)
    # make it continuous: interior pieces start at the running value
    run = 0.0
    for p in range(1, k + 1):
        prim[p, 0] = run
        run = P.polyval(xs[p] - xs[p - 1], prim[p])
    prim[k + 1, 0] = run  # right extension anchored at xs[k]
    prim[0, 0] = 0.0  # left extension anchored at xs[0]
    # shift so the primitive vanishes at ref
    prim[:, 0] -= ppoly_eval(np.array([ref]), xs, prim)[0]
    return prim


def _pad_cols(coef, ncol):
    out = np.zeros((coef.shape[0], ncol))
    out[:, : coef.shape[1]] = coef
    return out


def _bisect(fun, lo, hi, tol=1e-12, maxit=200):
    flo = fun(lo)
    for _ in range(maxit):
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# the reaction term
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Bistable:
    """Bistable nonlinearity with stable zeros ``lo`` < ``hi`` and middle zero ``theta``.

    ``F(t) = integral_t^hi f``; ``beta`` is the first point above ``theta``
    where ``integral_lo^x f`` turns positive (``nan`` if it never does).
    """

    xs: np.ndarray
    coef: np.ndarray
    theta: float
    lo: float = 0.0
    hi: float = 1.0
    kind: str = "tabulated"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        xs = np.ascontiguousarray(self.xs, dtype=float)
        coef = np.ascontiguousarray(_pad_cols(np.asarray(self.coef, float), 4))
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "coef", coef)
        dcoef = _deriv_table(xs, coef)
        object.__setattr__(self, "dcoef", np.ascontiguousarray(dcoef))
        Fc = -_primitive_table(xs, coef, self.hi)
        object.__setattr__(self, "Fcoef", np.ascontiguousarray(Fc))
        Pc = _primitive_table(xs, coef, self.lo)
        object.__setattr__(self, "Pcoef", np.ascontiguousarray(Pc))
        object.__setattr__(self, "fprime0", float(self.fprime(self.lo)))
        object.__setattr__(self, "fprime1", float(self.fprime(self.hi)))
        object.__setattr__(self, "mass", float(self.primitive(self.hi)))
        if self.mass > 0 and self.primitive(self.theta) < 0:
            beta = _bisect(self.primitive, self.theta, self.hi)
        else:
            beta = float("nan")
        object.__setattr__(self, "beta", float(beta))

    # evaluation -----------------------------------------------------------
    def __call__(self, u):
        return self.f(u)

    def f(self, u):
        out = ppoly_eval(np.atleast_1d(np.asarray(u, float)), self.xs, self.coef)
        return out if np.ndim(u) else float(out[0])

    def fprime(self, u):
        out = ppoly_eval(np.atleast_1d(np.asarray(u, float)), self.xs, self.dcoef)
        return out if np.ndim(u) else float(out[0])

    def F(self, u):
        out = ppoly_eval(np.atleast_1d(np.asarray(u, float)), self.xs, self.Fcoef)
        return out if np.ndim(u) else float(out[0])

    def primitive(self, u):
        """integral_lo^u f."""
        out = ppoly_eval(np.atleast_1d(np.asarray(u, float)), self.xs, self.Pcoef)
        return out if np.ndim(u) else float(out[0])

    # constructors ---------------------------------------------------------
    def scaled(self, lam: float) -> "Bistable":
        """The nonlinearity ``lam * f``."""
        params = dict(self.params)
        params["scale"] = params.get("scale", 1.0) * lam
        return Bistable(self.xs, self.coef * lam, self.theta, self.lo, self.hi, self.kind, params)

    def to_dict(self) -> dict:
        if self.kind == "cubic":
            d = {"kind": "cubic", "a": self.params["a"]}
        else:
            d = {"kind": "tabulated", "knots": [list(map(float, k)) for k in self.params["knots"]]}
        if self.params.get("scale", 1.0) != 1.0:
            d["scale"] = self.params["scale"]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Bistable":
        kind = d.get("kind", "cubic")
        if kind == "cubic":
            b = make_cubic(float(d["a"]))
        elif kind == "tabulated":
            b = make_tabulated(d["knots"], theta=d.get("theta"))
        else:
            raise ValueError(f"unknown nonlinearity kind {kind!r}")
        scale = float(d.get("scale") or 1.0)
        return b.scaled(scale) if scale != 1.0 else b


def make_cubic(a: float) -> Bistable:
    """``f(u) = u (1 - u) (u - a)``, continued linearly outside [0, 1]."""
    a = float(a)
    coef = np.array([
        [0.0, -a, 0.0, 0.0],            # u < 0, slope f'(0) = -a
        [0.0, -a, 1.0 + a, -1.0],       # 0 <= u < 1
        [0.0, -(1.0 - a), 0.0, 0.0],    # u >= 1, slope f'(1) = a - 1
    ])
    return Bistable(np.array([0.0, 1.0]), coef, theta=a, kind="cubic", params={"a": a})


def make_tabulated(knots, theta=None) -> Bistable:
    """Shape-preserving cubic (PCHIP) through ``[(u, f(u)), ...]`` knots."""
    kn = np.asarray(sorted(map(tuple, knots)), dtype=float)
    x, y = kn[:, 0], kn[:, 1]
    pc = PchipInterpolator(x, y)
    k = len(x) - 1
    coef = np.zeros((k + 2, 4))
    # scipy stores highest power first
    coef[1 : k + 1] = pc.c[::-1].T
    d = pc.derivative()
    coef[0, :2] = [y[0], float(d(x[0]))]
    coef[k + 1, :2] = [y[-1], float(d(x[-1]))]
    lo, hi = float(x[0]), float(x[-1])
    if theta is None:
        theta = _find_middle_zero(x, coef, lo, hi)
    return Bistable(x, coef, float(theta), lo, hi, kind="tabulated", params={"knots": kn.tolist()})


def _find_middle_zero(xs, coef, lo, hi):
    s = np.linspace(lo, hi, 4097)[1:-1]
    v = ppoly_eval(s, xs, coef)
    idx = np.nonzero((v[:-1] < 0) & (v[1:] >= 0))[0]
    if len(idx) == 0:
        return 0.5 * (lo + hi)
    i = idx[0]
    return _bisect(lambda t: ppoly_eval(np.array([t]), xs, coef)[0], s[i], s[i + 1])


# --------------------------------------------------------------------------
# validity report
# --------------------------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    worst_at: float = float("nan")
    worst_value: float = float("nan")


@dataclass
class ValidityReport:
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list:
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def midpoint_rule(fun, a, b, n):
    h = (b - a) / n
    return h * float(np.sum(fun(a + h * (np.arange(n) + 0.5))))


def simpson_rule(fun, a, b, n):
    n += n % 2
    x = np.linspace(a, b, n + 1)
    y = fun(x)
    h = (b - a) / n
    return h / 3 * float(y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())


def validate(b: Bistable, n_samples: int = 1024, tol: float = 1e-12) -> ValidityReport:
    if n_samples < 16:
        raise ValueError("n_samples must be >= 16")
    checks = []
    lo, th, hi = b.lo, b.theta, b.hi

    zs = np.array([lo, th, hi])
    fz = np.abs(b.f(zs))
    i = int(np.argmax(fz))
    checks.append(Check("zeros at lo, theta, hi", bool(fz.max() <= 1e-10), zs[i], fz[i]))

    s = np.linspace(lo, th, n_samples + 2)[1:-1]
    v = b.f(s)
    i = int(np.argmax(v))
    checks.append(Check("f < 0 on (lo, theta)", bool(v.max() < 0), s[i], v[i]))

    s = np.linspace(th, hi, n_samples + 2)[1:-1]
    v = b.f(s)
    i = int(np.argmin(v))
    checks.append(Check("f > 0 on (theta, hi)", bool(v.min() > 0), s[i], v[i]))

    checks.append(Check("endpoint slopes negative", b.fprime0 < 0 and b.fprime1 < 0,
                        lo if b.fprime0 >= b.fprime1 else hi, max(b.fprime0, b.fprime1)))

    # the midpoint rule is O(h^2); keep it fine enough for the 1e-8 agreement
    nq = max(4 * n_samples, 8192)
    mid = midpoint_rule(b.f, lo, hi, nq)
    simp = simpson_rule(b.f, lo, hi, nq)
    checks.append(Check("positive mass", bool(simp > tol), hi, simp))
    checks.append(Check("quadrature rules agree", abs(mid - simp) < 1e-8, hi, abs(mid - simp)))

    if np.isfinite(b.beta):
        pb = abs(b.primitive(b.beta))
        ahead = b.primitive(b.beta + (hi - b.beta) * np.linspace(1e-3, 1e-1, 16))
        below = b.primitive(np.linspace(th, b.beta, n_samples)[:-1])
        ok = pb < 1e-9 and ahead.min() > 0 and below.max() <= 1e-9
        checks.append(Check("beta is the first positive crossing of the primitive", bool(ok), b.beta, pb))
    else:
        checks.append(Check("beta is the first positive crossing of the primitive", False))

    width = hi - lo
    s = np.linspace(lo - width, hi + width, 4 * n_samples + 1)
    s = s[np.abs(s - hi) > width / n_samples]
    v = b.F(s)
    i = int(np.argmin(v))
    checks.append(Check("F > 0 away from hi", bool(v.min() > 0), s[i], v[i]))
    return ValidityReport(checks)


# --------------------------------------------------------------------------
# perturbed nonlinearity used for the speed bracketing
# --------------------------------------------------------------------------

def _hermite_coef(h, p0, q0, p1, q1):
    """Cubic on [0, h] with values p0, p1 and slopes q0, q1; lowest power first."""
    c2 = (3 * (p1 - p0) / h - 2 * q0 - q1) / h
    c3 = (q0 + q1 - 2 * (p1 - p0) / h) / h**2
    return np.array([p0, q0, c2, c3])


def perturb_eta(b: Bistable, eta: float) -> Bistable:
    """Raised nonlinearity with zeros at ``lo + eta``, ``theta``, ``hi + eta``.

    Equal to ``f`` on ``[lo + 2 eta, hi - eta]``; C^1 cubic patches on
    ``[lo + eta, lo + 2 eta]`` and ``[hi - eta, hi + eta]`` lift it above ``f``.
    """
    eta = float(eta)
    if not 0 < eta < (b.theta - b.lo) / 2:
        raise ValueError(f"eta must lie in (0, theta/2); got {eta}")
    lo, hi = b.lo, b.hi
    a1, a2 = lo + eta, lo + 2 * eta
    b1, b2 = hi - eta, hi + eta
    inner = [x for x in b.xs if a2 < x < b1]
    xs = np.array([a1, a2, *inner, b1, b2])
    k = len(xs) - 1
    coef = np.zeros((k + 2, 4))
    s_left = b.fprime0
    coef[1] = _hermite_coef(eta, 0.0, s_left, b.f(a2), b.fprime(a2))
    for p in range(2, k):
        x0 = xs[p - 1]
        # coefficients of f on the piece containing x0, re-anchored at x0
        q = int(np.searchsorted(b.xs, x0, side="right"))
        src = b.coef[q]
        coef[p] = _shift(src, x0 - _anchor(b.xs, q))
    coef[k] = _hermite_coef(2 * eta, b.f(b1), b.fprime(b1), 0.0, b.fprime1)
    coef[0, :2] = [0.0, s_left]
    coef[k + 1, :2] = [0.0, b.fprime1]
    params = {"base": b.to_dict(), "eta": eta}
    return Bistable(xs, coef, b.theta, a1, b2, kind="perturbed", params=params)
