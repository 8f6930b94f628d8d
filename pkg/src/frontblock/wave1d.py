"""One-dimensional travelling front and the explicit sub/supersolutions built from it."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NonConvergence, NoWave, OutOfValidity
from .nonlinearity import Bistable


@dataclass(frozen=True, eq=False)
class WaveProfile:
    """Decreasing front ``phi`` with ``phi(-inf) = hi``, ``phi(+inf) = lo``, ``phi(0) = theta``.

    Values beyond the table window are continued by the exponential tails
    (rate ``lam`` ahead of the front, ``mu`` behind it).
    """

    z: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    c: float
    lam: float
    mu: float
    lo: float
    hi: float
    theta: float
    residual: float

    @property
    def window(self) -> tuple:
        return float(self.z[0]), float(self.z[-1])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        z, p, q = self.z, self.phi, self.dphi
        out = np.empty_like(x)
        left = x < z[0]
        right = x > z[-1]
        mid = ~(left | right)
        xm = x[mid]
        i = np.clip(np.searchsorted(z, xm, side="right") - 1, 0, len(z) - 2)
        h = z[i + 1] - z[i]
        s = (xm - z[i]) / h
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        out[mid] = h00 * p[i] + h10 * h * q[i] + h01 * p[i + 1] + h11 * h * q[i + 1]
        out[left] = self.hi - (self.hi - p[0]) * np.exp(self.mu * (x[left] - z[0]))
        out[right] = self.lo + (p[-1] - self.lo) * np.exp(-self.lam * (x[right] - z[-1]))
        return out if out.ndim else float(out)


def decay_rate(c: float, fprime0: float) -> float:
    """Rate ``lam`` of the leading-edge decay ``phi ~ exp(-lam z)``."""
    return 0.5 * (c + math.sqrt(c * c - 4.0 * fprime0))


def _rear_rate(c: float, fprime1: float) -> float:
    # hi - phi ~ exp(mu z) as z -> -inf
    return 0.5 * (-c + math.sqrt(c * c - 4.0 * fprime1))


def _mismatch(b: Bistable, c: float, eps: float, h: float, zmax: float):
    """Slope at theta from the hi-side branch minus slope from the lo-side branch."""
    mu = _rear_rate(c, b.fprime1)
    lam = decay_rate(c, b.fprime0)
    dummy = np.empty(1)
    sa, _, qa, _ = kernels.wave_branch(c, b.hi - eps, -mu * eps, h, zmax, b.theta,
                                       b.xs, b.coef, False, dummy, dummy, dummy)
    sb, _, qb, _ = kernels.wave_branch(c, b.lo + eps, -lam * eps, -h, zmax, b.theta,
                                       b.xs, b.coef, False, dummy, dummy, dummy)
    qa = 0.0 if sa != 0 else qa
    qb = 0.0 if sb != 0 else qb
    return qa - qb


def _speed_bound(b: Bistable) -> float:
    s = np.linspace(b.lo, b.hi, 257)
    return 2.0 * math.sqrt(max(float(np.max(np.abs(b.fprime(s)))), 1e-12)) + 1.0


def solve_wave(b: Bistable, tol: float = 1e-11, h: float = 2e-3, eps: float = 1e-9,
               zmax: float = 200.0, c_bounds: tuple | None = None) -> WaveProfile:
    """Shoot for the front speed: bisection on ``c`` matching the slopes of the
    two saddle branches where they cross ``theta``.

    ``tol`` bounds the final slope mismatch (and the width of the ``c`` bracket).
    """
    if not b.mass > 0 and abs(b.mass) > 1e-14:
        raise NoWave(f"integral of f over [lo, hi] is {b.mass:.3e}; no forward front")
    bound = _speed_bound(b) if c_bounds is None else None
    c_lo, c_hi = (-bound, bound) if c_bounds is None else c_bounds
    g_lo = _mismatch(b, c_lo, eps, h, zmax)
    g_hi = _mismatch(b, c_hi, eps, h, zmax)
    if not (g_lo < 0 < g_hi):
        raise NonConvergence(f"speed bracket [{c_lo}, {c_hi}] does not change sign "
                             f"(mismatch {g_lo:.3e}, {g_hi:.3e})")
    for _ in range(200):
        c = 0.5 * (c_lo + c_hi)
        g = _mismatch(b, c, eps, h, zmax)
        if g > 0:
            c_hi = c
        else:
            c_lo = c
        if abs(g) < tol or c_hi - c_lo < 1e-15:
            break
    return _tabulate(b, c, eps, h, zmax)


def _tabulate(b: Bistable, c: float, eps: float, h: float, zmax: float) -> WaveProfile:
    mu = _rear_rate(c, b.fprime1)
    lam = decay_rate(c, b.fprime0)
    n = int(zmax / h) + 2
    za, pa, qa = np.empty(n), np.empty(n), np.empty(n)
    zb, pb, qb = np.empty(n), np.empty(n), np.empty(n)
    sa, zca, qca, na = kernels.wave_branch(c, b.hi - eps, -mu * eps, h, zmax, b.theta,
                                         b.xs, b.coef, True, za, pa, qa)
    sb, zcb, qcb, nb = kernels.wave_branch(c, b.lo + eps, -lam * eps, -h, zmax, b.theta,
                                         b.xs, b.coef, True, zb, pb, qb)
    if sa != 0 or sb != 0:
        raise NonConvergence("front branches failed to reach theta at the converged speed")
    left_z = za[:na] - zca
    right_z = (zb[:nb] - zcb)[::-1]
    z = np.concatenate([left_z, [0.0], right_z])
    phi = np.concatenate([pa[:na], [b.theta], pb[:nb][::-1]])
    dphi = np.concatenate([qa[:na], [0.5 * (qca + qcb)], qb[:nb][::-1]])
    keep = np.concatenate([[True], np.diff(z) > 1e-12])
    z, phi, dphi = z[keep], phi[keep], dphi[keep]
    res = profile_residual(b, z, phi, dphi, c)
    return WaveProfile(z, phi, dphi, float(c), float(lam), float(mu), b.lo, b.hi, b.theta, res)


def profile_residual(b: Bistable, z, phi, dphi, c) -> float:
    """Max of |phi'' + c phi' + f(phi)| at interior nodes, phi'' by finite differences of phi'."""
    d2 = np.gradient(dphi, z)
    r = d2 + c * dphi + b.f(phi)
    return float(np.max(np.abs(r[2:-2])))


# --------------------------------------------------------------------------
# shift function and the explicit sub/supersolutions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ShiftFunction:
    """``xi(t) = (1/lam) ln(1 / (1 - (M/c) exp(lam c t)))``, defined for t <= valid_until."""

    M: float
    lam: float
    c: float

    @property
    def valid_until(self) -> float:
        return math.log(self.c / self.M) / (self.lam * self.c)

    @property
    def sign_bound(self) -> float:
        """Last time with ``c t + xi(t) <= 0``."""
        return math.log(self.c / (self.c + self.M)) / (self.lam * self.c)

    @classmethod
    def for_wave(cls, w: WaveProfile, M: float | None = None) -> "ShiftFunction":
        if w.c <= 0:
            raise NoWave("the shift function needs a positive front speed")
        return cls(w.c / 2 if M is None else float(M), w.lam, w.c)


def xi(t, s: ShiftFunction):
    t = np.asarray(t, dtype=float)
    if np.any(t > s.valid_until):
        raise OutOfValidity(f"t = {np.max(t):g} exceeds the validity bound {s.valid_until:g}")
    e = (s.M / s.c) * np.exp(s.lam * s.c * t)
    out = -np.log1p(-e) / s.lam
    return out if out.ndim else float(out)


def supersolution(t: float, x1, w: WaveProfile, s: ShiftFunction):
    x1 = np.asarray(x1, dtype=float)
    sh = xi(t, s)
    right = 2.0 * w(np.full(x1.shape, -w.c * t - sh))
    left = w(x1 - w.c * t - sh) + w(-x1 - w.c * t - sh)
    return np.where(x1 > 0, right, left)


def subsolution(t: float, x1, w: WaveProfile, s: ShiftFunction):
    x1 = np.asarray(x1, dtype=float)
    sh = xi(t, s)
    left = w(x1 - w.c * t + sh) - w(-x1 - w.c * t + sh)
    return np.where(x1 > 0, 0.0, left)
