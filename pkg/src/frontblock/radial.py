"""Radial Dirichlet problem on a ball and the radius thresholds R0, R1.

A centre value ``w0`` is shot outward along ``w'' + (N-1)/r w' + f(w) = 0``;
``first_zero(w0)`` is the radius where the orbit first reaches 0 (``inf`` if it
turns back first). Positive solutions on ``B_R`` are the centre values with
``first_zero(w0) == R``; the maximal one is the largest such ``w0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .errors import BracketFailure, NonConvergence
from .nonlinearity import Bistable

DEFAULT_STEP = 1e-3


@dataclass(frozen=True, eq=False)
class BallSolution:
    R: float
    N: int
    r: np.ndarray
    w: np.ndarray
    dw: np.ndarray

    @property
    def center_value(self) -> float:
        return float(self.w[0])

    def __call__(self, rho):
        """Profile at radius ``rho``; zero outside the ball."""
        rho = np.abs(np.asarray(rho, dtype=float))
        out = np.interp(rho, self.r, self.w, right=0.0)
        return out if out.ndim else float(out)

    def residual(self, b: Bistable) -> float:
        d2 = np.gradient(self.dw, self.r)
        r = self.r
        res = d2[1:-1] + (self.N - 1) / r[1:-1] * self.dw[1:-1] + b.f(self.w[1:-1])
        return float(np.max(np.abs(res[2:-2])))


def first_zero(b: Bistable, w0: float, N: int, h: float = DEFAULT_STEP, rmax: float = 200.0) -> float:
    dummy = np.empty(1)
    status, rz, _ = kernels.radial_shoot(float(w0), float(N), h, rmax, b.xs, b.coef, False,
                                         dummy, dummy, dummy)
    return rz if status == 0 else math.inf


class _Fold:
    """Location of the minimum of ``first_zero`` over centre values (the fold)."""

    def __init__(self, b: Bistable, N: int, h: float, rmax: float):
        self.b, self.N, self.h, self.rmax = b, N, h, rmax
        lo = b.beta if np.isfinite(b.beta) else b.theta
        ws = lo + (b.hi - lo) * (1 - np.geomspace(1, 1e-6, 160))[1:-1]
        rz = np.array([first_zero(b, w, N, h, rmax) for w in ws])
        if not np.isfinite(rz).any():
            raise BracketFailure("no centre value produces a positive radial solution "
                                 f"below r = {rmax}")
        i = int(np.argmin(rz))
        a = ws[max(i - 1, 0)]
        c = ws[min(i + 1, len(ws) - 1)]
        res = minimize_scalar(lambda w: first_zero(b, w, N, h, rmax), bounds=(a, c),
                              method="bounded", options={"xatol": 1e-12})
        if res.fun <= rz[i]:
            self.w_star, self.R_min = float(res.x), float(res.fun)
        else:
            self.w_star, self.R_min = float(ws[i]), float(rz[i])


_fold_cache: dict = {}


def _fold(b: Bistable, N: int, h: float, rmax: float) -> _Fold:
    key = (id(b), N, h, rmax)
    hit = _fold_cache.get(key)
    if hit is None or hit[0] is not b:
        if len(_fold_cache) > 64:
            _fold_cache.clear()
        hit = (b, _Fold(b, N, h, rmax))
        _fold_cache[key] = hit
    return hit[1]


def solve_ball(b: Bistable, R: float, N: int = 2, tol: float = 1e-12,
               h: float = DEFAULT_STEP, rmax: float = 200.0) -> BallSolution | None:
    """Maximal positive radial solution on ``B_R``, or ``None`` when there is none."""
    if R <= 0 or N < 2:
        raise ValueError("need R > 0 and N >= 2")
    fold = _fold(b, N, h, rmax)
    if R < fold.R_min:
        return None
    # upper branch: first_zero increases from R_min (at w_star) to inf (at hi)
    lo, hi = fold.w_star, b.hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if first_zero(b, mid, N, h, rmax) <= R:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    else:  # pragma: no cover
        raise NonConvergence("centre-value bisection did not settle")
    w0 = lo
    n = int(R / h) + 8
    rs, ws, vs = np.empty(n), np.empty(n), np.empty(n)
    status, rz, m = kernels.radial_shoot(w0, float(N), h, rmax, b.xs, b.coef, True, rs, ws, vs)
    if status != 0:
        raise NonConvergence(f"maximal shot did not reach zero (status {status})")
    r, w, dw = rs[:m].copy(), ws[:m].copy(), vs[:m].copy()
    # snap the last node onto R; the root sits within tol of it
    r[-1] = R
    w[-1] = 0.0
    return BallSolution(float(R), int(N), r, w, dw)


def find_R0(b: Bistable, N: int = 2, tol: float = 1e-6, h: float = DEFAULT_STEP,
            R_max: float = 200.0) -> float:
    """Threshold radius: bisection between a radius without and one with a positive solution."""
    if not b.mass > 0:
        raise BracketFailure("f has no positive mass; there is no finite threshold")
    lo, hi = 1e-3, 1.0
    while solve_ball(b, hi, N, h=h, rmax=R_max) is None:
        lo, hi = hi, 2 * hi
        if hi > R_max:
            raise BracketFailure(f"no positive solution found below R = {R_max}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if solve_ball(b, mid, N, h=h, rmax=R_max) is None:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_R1(b: Bistable, N: int = 2, delta: float = 0.05, tol: float = 1e-6,
            h: float = DEFAULT_STEP, R_max: float = 200.0) -> float:
    """Smallest radius whose maximal solution has centre value above ``beta + 2 delta``."""
    target = b.beta + 2 * delta
    if not target < b.hi:
        raise ValueError("delta too large: beta + 2 delta must stay below the upper zero")
    R0 = find_R0(b, N, tol, h, R_max)

    def above(R):
        s = solve_ball(b, R, N, h=h, rmax=R_max)
        return s is not None and s.center_value > target

    lo, hi = R0, max(2 * R0, R0 + 1)
    while not above(hi):
        lo, hi = hi, 2 * hi
        if hi > R_max:
            raise BracketFailure(f"centre value never exceeds {target:.4f} below R = {R_max}")
    if above(lo):
        return R0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if above(mid):
            hi = mid
        else:
            lo = mid
    return max(hi, R0)


def plateau_radius(ball: BallSolution, delta: float) -> float:
    """Largest radius on which the profile stays above ``w(0) - delta``."""
    inside = ball.w > ball.center_value - delta
    idx = np.nonzero(~inside)[0]
    return float(ball.r[idx[0] - 1]) if len(idx) else ball.R


# --------------------------------------------------------------------------
# independent check in the plane: gradient flow on a pinned disc
# --------------------------------------------------------------------------

def disc_supports_solution(b: Bistable, R: float, dx: float = 0.1, tol: float = 1e-6,
                           t_max: float = 2000.0) -> bool:
    """Whether the gradient flow from ``u = hi`` on the disc of radius ``R`` (cells
    with centres beyond ``R`` held at ``lo``) settles above ``theta``.

    The flow decreases monotonically from the supersolution ``hi`` to the maximal
    stationary state, so dropping below ``theta`` at any time settles the answer.
    """
    from .grid import Grid

    n = int(math.ceil(R / dx)) + 1
    c = (np.arange(-n, n) + 0.5) * dx
    X1, X2 = np.meshgrid(c, c, indexing="xy")
    mask = X1**2 + X2**2 < (R + 1.5 * dx) ** 2
    g = Grid.from_mask(mask, dx, -n * dx, -n * dx)
    free = g.x1**2 + g.x2**2 < R**2
    u = np.where(free, b.hi, b.lo).astype(float)
    work = np.empty_like(u)
    dt = 0.9 * dx * dx / 4
    k = max(1, int(round(1.0 / dt)))
    prev = u.copy()
    t = 0.0
    while t < t_max:
        kernels.advance(u, g.nbr, free, dt, 1.0 / dx**2, b.xs, b.coef, k, work)
        t += k * dt
        top = float(u.max())
        if top < b.theta:
            return False
        rate = float(np.max(np.abs(u - prev))) / (k * dt)
        if rate < tol:
            return True
        prev[:] = u
    raise NonConvergence(f"disc flow at R = {R:g} not settled by t = {t_max}")


def find_R0_by_flow(b: Bistable, R_lo: float, R_hi: float, dx: float = 0.1,
                    resolution: float = 0.05) -> tuple:
    """Bracket ``(R_without, R_with)`` of the planar threshold from :func:`disc_supports_solution`."""
    if disc_supports_solution(b, R_lo, dx) or not disc_supports_solution(b, R_hi, dx):
        raise BracketFailure(f"[{R_lo}, {R_hi}] does not bracket the disc threshold")
    while R_hi - R_lo > resolution:
        mid = 0.5 * (R_lo + R_hi)
        if disc_supports_solution(b, mid, dx):
            R_hi = mid
        else:
            R_lo = mid
    return R_lo, R_hi
