"""Outcome classification, geometric predictions, the axial lower bound, threshold
scans and runs from arbitrary initial data."""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .errors import BudgetExceeded, HypothesisUnmet, NoFront, SupportViolation
from .evolve import Trajectory, estimate_speed, init_entire, run
from .grid import Field, Grid
from .nonlinearity import Bistable
from .radial import BallSolution
from .wave1d import ShiftFunction, solve_wave

BLOCKED, AXIAL, COMPLETE, INCONCLUSIVE = "Blocked", "AxialPartial", "Complete", "Inconclusive"
UNDETERMINED = "Undetermined"
PROPAGATES = "Propagates"   # probe verdict: the front cleared the opening


@dataclass
class Outcome:
    verdict: str
    right_tail_max: float
    global_min: float
    axis_min: float
    speed: float = math.nan
    stop: str = ""
    guards: dict = field(default_factory=dict)

    def __str__(self):
        return (f"{self.verdict} (tail max {self.right_tail_max:.3g}, min {self.global_min:.3g}, "
                f"axis min {self.axis_min:.3g}, stop {self.stop})")


def classify(traj: Trajectory, u_final, g: Grid, u_lo: float = 0.05, u_hi: float = 0.95,
             u_mid: float = 0.1, tail_fraction: float = 0.1, speed_window: float | None = None) -> Outcome:
    """Finite proxies of the blocked / axial / complete definitions.

    Complete needs ``min u > u_hi`` (a time-increasing solution above ``u_hi``
    everywhere can only go to 1). Blocked needs a stationary run whose last
    ``tail_fraction`` of the x1 range stays below ``u_lo`` and whose 0.1-level
    never came close to the right truncation. AxialPartial needs a stationary
    run with the axis above ``u_mid``. Everything else is Inconclusive.
    """
    vals = u_final.values if isinstance(u_final, Field) else np.asarray(u_final)
    lo, hi = g.x1_origin, g.x1_origin + g.shape[0] * g.dx
    tail = g.x1 >= hi - tail_fraction * (hi - lo)
    tail_max = float(vals[tail].max()) if tail.any() else math.nan
    gmin = float(vals.min())
    axis = g.axis_cells
    amin = float(vals[axis].min()) if len(axis) else math.nan
    speed = math.nan
    if speed_window is not None:
        try:
            speed = estimate_speed(traj, speed_window)
        except ValueError:
            pass
    guards = {"truncation_hit": traj.truncation_hit, "inconclusive_run": traj.inconclusive}
    if gmin > u_hi:
        verdict = COMPLETE
    elif traj.stationary and tail_max < u_lo:
        verdict = BLOCKED if traj.truncation_hit is None else INCONCLUSIVE
    elif traj.stationary and amin > u_mid:
        verdict = AXIAL
    else:
        verdict = INCONCLUSIVE
    return Outcome(verdict, tail_max, gmin, amin, speed, traj.stop, guards)


# --------------------------------------------------------------------------
# predictions from the geometry alone
# --------------------------------------------------------------------------

@dataclass
class Prediction:
    verdict: str
    rule: str
    notes: list
    checks: dict

    def __str__(self):
        return f"{self.verdict} ({self.rule or 'no rule applies'})"


def _widening_witness(spec: geo.DomainSpec, R: float):
    """Try ``L`` just past each corner; ``C`` is the largest wall distance left of ``L + R``."""
    ell = spec.smoothing_length
    for L in sorted({0.0, *[k + ell for k in spec.breakpoints()]}):
        x = spec.sample_x(2001, min(spec.x1_min, -1.0), L + R)
        C = float(np.max(np.maximum(spec.h_top(x), -spec.h_bot(x)))) + 1e-9
        rep = geo.check_increasing_hypotheses(spec, L, R, C)
        if rep.ok:
            return L, C, rep
    return None, None, rep


def predict(spec: geo.DomainSpec, b: Bistable | None = None, R0: float | None = None,
            R1: float | None = None) -> Prediction:
    """Strongest conclusion the geometric sufficient conditions give for ``spec``.

    Rules, in order: decreasing cross-section (Complete), star-shaped about the
    axis with a strip wider than ``R0`` (Complete), widening convex right part
    with a strip wider than ``R1`` (Complete), strip wider than ``R0`` alone
    (AxialPartial). Narrow passages only earn an existential note.
    """
    checks, notes = {}, []
    dec = geo.is_decreasing(spec)
    checks["decreasing-cross-section"] = dec.passed
    if dec:
        return Prediction(COMPLETE, "decreasing-cross-section", notes, checks)

    x = spec.sample_x(4001, min(spec.x1_min, spec.breakpoints().min() - 1), spec.x1_max)
    min_hw = float(spec.half_width(x).min())
    star = geo.is_star_shaped_axis(spec)
    checks["star-shaped-axis"] = star.passed
    wide0 = R0 is not None and min_hw > R0
    checks["strip wider than R0"] = wide0
    if star and wide0:
        return Prediction(COMPLETE, "star-shaped-axis", notes, checks)

    if R1 is not None and min_hw > R1:
        L, C, rep = _widening_witness(spec, min_hw)
        checks["widening-convex"] = L is not None
        if L is not None:
            notes.append(f"widening witness L = {L:.3g}, C = {C:.3g}")
            return Prediction(COMPLETE, "widening-convex", notes, checks)

    if wide0:
        return Prediction(AXIAL, "wide-strip", notes, checks)

    # a narrowing followed by an opening: blocking holds for a thin enough passage
    if not dec and min_hw < float(spec.half_width(x).max()):
        notes.append("narrow passage: blocked if the passage is thin enough (existential, no numeric bound)")
    if R0 is None:
        notes.append("R0 not supplied; strip rules skipped")
    return Prediction(UNDETERMINED, "", notes, checks)


# --------------------------------------------------------------------------
# axial lower bound
# --------------------------------------------------------------------------

@dataclass
class LowerBoundReport:
    passed: bool
    worst_margin: float    # min of u - w + tol
    delta: float           # min of u - w over the strip
    where: tuple
    n_cells: int


def verify_lower_bound(u_inf, ball: BallSolution, g: Grid, tol: float | None = None) -> LowerBoundReport:
    """Check ``u_inf(x1, x2) >= w(|x2|) - tol`` on every cell of the strip ``|x2| < R``."""
    R = ball.R
    spec = g.spec
    if spec is not None:
        x = spec.sample_x(4001)
        if float(spec.half_width(x).min()) < R:
            raise HypothesisUnmet(f"the strip |x2| < {R:.4g} does not fit inside the domain")
    tol = g.dx if tol is None else tol
    vals = u_inf.values if isinstance(u_inf, Field) else np.asarray(u_inf)
    strip = np.abs(g.x2) < R
    if not strip.any():
        raise HypothesisUnmet("no grid cell inside the strip")
    margin = vals[strip] - ball(np.abs(g.x2[strip]))
    i = int(np.argmin(margin))
    cells = np.nonzero(strip)[0]
    where = (float(g.x1[cells[i]]), float(g.x2[cells[i]]))
    return LowerBoundReport(bool(margin[i] >= -tol), float(margin[i] + tol), float(margin[i]),
                            where, int(strip.sum()))


# --------------------------------------------------------------------------
# blocking probes and threshold scans
# --------------------------------------------------------------------------

@dataclass
class ProbeResult:
    eps: float
    verdict: str
    speed: float
    tail_max: float
    t_end: float
    seconds: float


def probe(spec: geo.DomainSpec, b: Bistable, dx: float, T: float = -30.0, pass_x1: float = 3.0,
          t_max: float = 400.0, tol_stat: float = 1e-7, eps: float = math.nan) -> ProbeResult:
    """Run the entire solution on ``spec`` until it is stationary or its front passes ``pass_x1``."""
    t0 = time.perf_counter()
    w = solve_wave(b)
    s = ShiftFunction.for_wave(w)
    import warnings
    from .grid import CoarseGridWarning
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CoarseGridWarning)
        g = Grid.build(spec, dx)
    u0 = init_entire(g, w, s, T)
    traj, u = run(g, u0, b, "either", x1_target=pass_x1, t_max=t_max, tol_stat=tol_stat)
    if traj.stop == "front_reached":
        verdict = PROPAGATES
        try:
            speed = estimate_speed(traj, window=5.0)
        except ValueError:
            speed = math.nan
        tail = math.nan
    else:
        out = classify(traj, u, g)
        verdict, speed, tail = out.verdict, 0.0, out.right_tail_max
    return ProbeResult(float(eps), verdict, speed, tail, u.t, time.perf_counter() - t0)


def _probe_job(args):
    family, eps, b_dict, dx, kw = args
    return probe(family(eps), Bistable.from_dict(b_dict), dx, eps=eps, **kw)


@dataclass
class ScanResult:
    bracket: tuple | None        # (eps_blocked, eps_propagates)
    probes: list
    monotone: bool

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.bracket[0] + self.bracket[1]) if self.bracket else math.nan


def threshold_scan(family, b: Bistable, eps_lo: float, eps_hi: float, dx: float,
                   resolution: float = 0.05, budget: int = 16, workers: int = 1,
                   probe_kw: dict | None = None) -> ScanResult:
    """Bisection on the passage parameter between a Blocked and a propagating verdict.

    ``family(eps)`` returns a :class:`DomainSpec`. With ``workers > 1`` each
    round probes ``workers`` evenly spaced interior points in parallel. The
    bracket is ``None`` (and ``monotone`` tells why) when the end points do not
    straddle the threshold. Running out of ``budget`` probes raises
    :class:`BudgetExceeded` carrying the partial result.
    """
    kw = dict(probe_kw or {})
    b_dict = b.to_dict()
    probes = []

    def evaluate(eps_list):
        jobs = [(family, e, b_dict, dx, kw) for e in eps_list]
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                res = list(ex.map(_probe_job, jobs))
        else:
            res = [_probe_job(j) for j in jobs]
        probes.extend(res)
        return res

    def blocked(p):
        return p.verdict == BLOCKED

    def propagates(p):
        return p.verdict in (PROPAGATES, COMPLETE, AXIAL)

    def monotone():
        ordered = sorted(probes, key=lambda p: p.eps)
        seen_prop = False
        for p in ordered:
            if propagates(p):
                seen_prop = True
            elif blocked(p) and seen_prop:
                return False
        return True

    lo_p, hi_p = evaluate([eps_lo, eps_hi])
    if not (blocked(lo_p) and propagates(hi_p)):
        return ScanResult(None, probes, monotone())
    lo, hi = eps_lo, eps_hi
    while hi - lo > resolution:
        if len(probes) >= budget:
            raise BudgetExceeded(f"probe budget {budget} spent; bracket [{lo:.4g}, {hi:.4g}]",
                                 partial=ScanResult((lo, hi), probes, monotone()))
        k = max(1, min(workers, budget - len(probes)))
        pts = [lo + (hi - lo) * (i + 1) / (k + 1) for i in range(k)]
        res = evaluate(pts)
        for e, p in zip(pts, res):
            if blocked(p):
                lo = max(lo, e)
        for e, p in zip(pts, res):
            if propagates(p) and e > lo:
                hi = min(hi, e)
        if not any(blocked(p) or propagates(p) for p in res):
            raise BudgetExceeded("probes returned only inconclusive verdicts",
                                 partial=ScanResult((lo, hi), probes, monotone()))
    return ScanResult((lo, hi), sorted(probes, key=lambda p: p.eps), monotone())


# --------------------------------------------------------------------------
# arbitrary compactly supported initial data
# --------------------------------------------------------------------------

def cauchy(g: Grid, u0, b: Bistable, a: float, t_max: float = 800.0, **run_kw) -> tuple:
    """Run from ``u0`` (supported in ``x1 < a``) to stationarity and classify.

    Returns ``(outcome, trajectory, final_field)``.
    """
    vals = u0.values if isinstance(u0, Field) else np.asarray(u0, dtype=float)
    if np.any(vals[g.x1 >= a] != 0):
        raise SupportViolation(f"initial data is non-zero at x1 >= {a}")
    if vals.min() < 0 or vals.max() > 1:
        raise ValueError("initial data must lie in [0, 1]")
    traj, u = run(g, Field(np.array(vals, dtype=float), 0.0), b, "stationary", t_max=t_max, **run_kw)
    return classify(traj, u, g), traj, u
