"""Explicit time stepping of ``u_t = Lu + f(u)`` on a masked grid, front tracking
and the entire-solution initialiser."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import FrontTooClose, NoFront, StabilityViolation
from .grid import Field, Grid, laplacian
from .nonlinearity import Bistable
from .wave1d import ShiftFunction, WaveProfile, subsolution, xi

STABILITY_FACTOR = 0.9
FRONT_LEVEL = 0.5


def stable_dt(dx: float, factor: float = STABILITY_FACTOR) -> float:
    return factor * dx * dx / 4.0


def step(g: Grid, u: Field, b: Bistable, dt: float, free=None) -> Field:
    """One explicit Euler step; pinned (non-free) cells keep their value."""
    if dt > stable_dt(g.dx) * (1 + 1e-12):
        raise StabilityViolation(f"dt = {dt:g} exceeds {STABILITY_FACTOR} dx^2/4 = {stable_dt(g.dx):g}")
    vals = np.array(u.values, dtype=float)
    free = g.free_mask() if free is None else free
    kernels.advance(vals, g.nbr, free, dt, 1.0 / g.dx**2, b.xs, b.coef, 1, np.empty_like(vals))
    return Field(vals, u.t + dt)


def _front_x1(w: WaveProfile, s: ShiftFunction, T: float) -> float:
    # theta-level of the subsolution sits where x1 - cT + xi(T) = 0
    return w.c * T - xi(T, s)


def init_entire(g: Grid, w: WaveProfile, s: ShiftFunction, T: float,
                guard_distance: float = 10.0) -> Field:
    """Subsolution of the entire solution sampled at time ``T`` (zero for ``x1 > 0``)."""
    xf = _front_x1(w, s, T)
    x1_min = g.x1_origin
    if xf - x1_min < guard_distance:
        raise FrontTooClose(f"initial front at x1 = {xf:.3f} is within {guard_distance} of "
                            f"the left truncation x1 = {x1_min}")
    if xf > 0:
        raise FrontTooClose(f"initial front at x1 = {xf:.3f} is not inside the straight part x1 < 0")
    vals = np.asarray(subsolution(T, g.x1, w, s), dtype=float)
    return Field(vals, float(T))


def front_position(g: Grid, u, level: float = FRONT_LEVEL) -> float:
    """Largest x1 on the axis row where ``u >= level``, linearly interpolated."""
    vals = u.values if isinstance(u, Field) else u
    cells = g.axis_cells
    if len(cells) == 0:
        raise NoFront("the grid has no axis row")
    v = vals[cells]
    above = np.nonzero(v >= level)[0]
    if len(above) == 0:
        raise NoFront(f"u < {level} along the whole axis")
    k = int(above[-1])
    x = g.x1[cells]
    if k == len(cells) - 1:
        return float(x[k])
    return float(x[k] + (v[k] - level) / (v[k] - v[k + 1]) * (x[k + 1] - x[k]))


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    fronts: list = field(default_factory=list)      # nan when there is no front
    mins: list = field(default_factory=list)
    maxs: list = field(default_factory=list)
    check_times: list = field(default_factory=list)
    stationarity: list = field(default_factory=list)  # ||u(t) - u(t - D)||_inf / D
    snapshots: list = field(default_factory=list)
    stop: str = ""
    rule: str = ""
    inconclusive: bool = False
    truncation_hit: float | None = None   # time the 0.1-level got near x1_max
    bounds: tuple = (math.inf, -math.inf)  # over every single step
    dt: float = 0.0
    steps: int = 0

    @property
    def stationary(self) -> bool:
        return self.stop == "stationary"

    def as_arrays(self):
        return np.asarray(self.times), np.asarray(self.fronts)


def run(g: Grid, u0: Field, b: Bistable, rule: str = "stationary", *, t_max: float = 500.0,
        x1_target: float | None = None, tol_stat: float = 1e-7, check_every: float = 1.0,
        n_confirm: int = 3, sample_every: float = 0.25, snapshot_every: float | None = None,
        free=None, dt: float | None = None, guard_cells: int = 5, guard_level: float = 0.1,
        observer=None, stop_on_truncation: bool = False) -> tuple:
    """Step ``u0`` until the stopping rule fires or ``t_max`` elapses.

    ``rule`` is ``"stationary"``, ``"front_reached"`` (needs ``x1_target``),
    ``"either"`` (whichever of the two fires first) or ``"t_max"``. Returns
    ``(trajectory, final_field)``. Running out of time under any rule but
    ``"t_max"`` flags the trajectory as inconclusive instead of raising.
    ``observer(t, values)`` is called at every sample.
    """
    if rule not in ("stationary", "front_reached", "t_max", "either"):
        raise ValueError(f"unknown stopping rule {rule!r}")
    if rule in ("front_reached", "either") and x1_target is None:
        raise ValueError("front_reached needs x1_target")
    dt_max = stable_dt(g.dx)
    if dt is None:
        # an integer number of steps per sample
        dt = sample_every / math.ceil(sample_every / dt_max - 1e-9)
    elif dt > dt_max * (1 + 1e-12):
        raise StabilityViolation(f"dt = {dt:g} exceeds {STABILITY_FACTOR} dx^2/4 = {dt_max:g}")
    k_sample = max(1, int(round(sample_every / dt)))
    k_check = max(1, int(round(check_every / (k_sample * dt))))
    k_snap = None if snapshot_every is None else max(1, int(round(snapshot_every / (k_sample * dt))))

    u = np.array(u0.values, dtype=float)
    work = np.empty_like(u)
    free = g.free_mask() if free is None else np.asarray(free, dtype=np.bool_)
    inv_dx2 = 1.0 / g.dx**2
    traj = Trajectory(rule=rule, dt=dt)
    t0 = u0.t
    lo, hi = float(u.min()), float(u.max())
    guard_x = g.x1_centres[-1] - guard_cells * g.dx

    def record(t):
        traj.times.append(t)
        try:
            traj.fronts.append(front_position(g, u))
        except NoFront:
            traj.fronts.append(math.nan)
        traj.mins.append(float(u.min()))
        traj.maxs.append(float(u.max()))

    record(t0)
    if k_snap is not None:
        traj.snapshots.append(Field(u.copy(), t0))
    if observer is not None:
        observer(t0, u)
    last_check = u.copy()
    confirmed = 0
    n_samples = 0
    n_total = 0
    while True:
        a, c = kernels.advance(u, g.nbr, free, dt, inv_dx2, b.xs, b.coef, k_sample, work)
        lo, hi = min(lo, a), max(hi, c)
        n_total += k_sample
        n_samples += 1
        t = t0 + n_total * dt
        record(t)
        if observer is not None:
            observer(t, u)
        if k_snap is not None and n_samples % k_snap == 0:
            traj.snapshots.append(Field(u.copy(), t))
        if traj.truncation_hit is None and np.any(u[g.x1 >= guard_x] >= guard_level):
            traj.truncation_hit = t
            if stop_on_truncation:
                traj.stop = "truncation"
                traj.inconclusive = True
                break
        if rule in ("front_reached", "either") and traj.fronts[-1] >= x1_target:
            traj.stop = "front_reached"
            break
        if n_samples % k_check == 0:
            span = k_check * k_sample * dt
            meas = float(np.max(np.abs(u - last_check))) / span
            traj.check_times.append(t)
            traj.stationarity.append(meas)
            last_check[:] = u
            confirmed = confirmed + 1 if meas < tol_stat else 0
            if rule in ("stationary", "either") and confirmed >= n_confirm:
                traj.stop = "stationary"
                break
        if t - t0 >= t_max - 1e-9:
            traj.stop = "t_max"
            traj.inconclusive = rule != "t_max"
            break
    traj.bounds = (lo, hi)
    traj.steps = n_total
    return traj, Field(u, t0 + n_total * dt)


def estimate_speed(traj: Trajectory, window: float | None = None, min_samples: int = 10,
                   x_range: tuple | None = None) -> float:
    """Least-squares slope of the front position over the trailing ``window`` of time,
    or over the samples whose front lies in ``x_range``."""
    t, x = traj.as_arrays()
    ok = np.isfinite(x)
    if window is not None:
        ok &= t >= t[-1] - window
    if x_range is not None:
        with np.errstate(invalid="ignore"):
            ok &= (x >= x_range[0]) & (x <= x_range[1])
    if ok.sum() < min_samples:
        raise ValueError(f"only {int(ok.sum())} front samples in the fit window; need {min_samples}")
    slope, _ = np.polyfit(t[ok], x[ok], 1)
    return float(slope)


@dataclass
class MonotonicityReport:
    passed: bool
    worst: float          # most negative u(t + D) - u(t)
    t_worst: float
    cell: int
    tol: float


def monotonicity_check(snapshots, tol: float = 1e-8) -> MonotonicityReport:
    """Cellwise ``u(t_{k+1}) >= u(t_k) - tol`` over consecutive snapshots."""
    snaps = snapshots.snapshots if isinstance(snapshots, Trajectory) else list(snapshots)
    if len(snaps) < 2:
        return MonotonicityReport(True, 0.0, math.nan, -1, tol)
    worst, t_worst, cell = math.inf, math.nan, -1
    for p, q in zip(snaps, snaps[1:]):
        d = q.values - p.values
        i = int(np.argmin(d))
        if d[i] < worst:
            worst, t_worst, cell = float(d[i]), q.t, i
    return MonotonicityReport(bool(worst >= -tol), worst, t_worst, cell, tol)


def residual(g: Grid, u, b: Bistable, free=None) -> float:
    """``max |Lu + f(u)|`` over free cells."""
    vals = u.values if isinstance(u, Field) else u
    r = laplacian(g, vals) + b.f(vals)
    if free is not None:
        r = r[free]
    return float(np.max(np.abs(r))) if len(r) else 0.0
