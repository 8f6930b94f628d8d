"""Energy functional, the blocking minimiser behind a narrow passage and
extraction of stationary states."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import LeftBasin, NonConvergence, NotStationary, SeamMismatch
from .evolve import Trajectory, residual, stable_dt
from .grid import Field, Grid, laplacian
from .kernels import EAST, NORTH
from .nonlinearity import Bistable


@dataclass(frozen=True)
class EnergyReport:
    J: float
    dirichlet: float   # integral of |grad w|^2 / 2
    potential: float   # integral of F(w)
    measure: float


def _face_pairs(g: Grid, cells: np.ndarray):
    """Open east/north faces with both ends in ``cells`` (boolean mask)."""
    out_i, out_j = [], []
    for s in (EAST, NORTH):
        j = g.nbr[:, s]
        ok = (j >= 0) & cells
        ok[ok] &= cells[j[ok]]
        out_i.append(np.nonzero(ok)[0])
        out_j.append(j[ok])
    return np.concatenate(out_i), np.concatenate(out_j)


def energy(g: Grid, u, b: Bistable, subdomain: tuple | None = None) -> EnergyReport:
    """Discrete ``J = sum_faces (du)^2 / 2 + dx^2 sum_cells F(u)`` over the cells with
    ``x1`` in ``subdomain`` (the whole grid by default)."""
    vals = u.values if isinstance(u, Field) else np.asarray(u, dtype=float)
    if subdomain is None:
        cells = np.ones(g.n, dtype=bool)
    else:
        lo, hi = subdomain
        cells = (g.x1 >= lo) & (g.x1 <= hi)
    i, j = _face_pairs(g, cells)
    d = vals[j] - vals[i]
    dirichlet = 0.5 * float(np.dot(d, d))
    dx2 = g.dx**2
    potential = dx2 * float(np.sum(b.F(vals[cells]))) if cells.any() else 0.0
    return EnergyReport(dirichlet + potential, dirichlet, potential, dx2 * float(cells.sum()))


def energy_gradient(g: Grid, u, b: Bistable) -> np.ndarray:
    """Derivative of the discrete energy with respect to each cell value."""
    vals = u.values if isinstance(u, Field) else np.asarray(u, dtype=float)
    return -g.dx**2 * (laplacian(g, vals) + b.f(vals))


def w0_profile(a: float, b: float):
    """Linear ramp: 1 at ``x1 = a``, 0 from ``x1 = b`` on (and 1 to the left of ``a``)."""
    if not a < b:
        raise ValueError("need a < b")

    def ramp(x1):
        x1 = np.asarray(x1, dtype=float)
        out = np.clip((b - x1) / (b - a), 0.0, 1.0)
        return out if out.ndim else float(out)

    return ramp


def h1_distance(g: Grid, u, v) -> float:
    """Discrete H^1 norm of ``u - v``: face differences plus dx^2-weighted values."""
    d = np.asarray(u) - np.asarray(v)
    i, j = _face_pairs(g, np.ones(g.n, dtype=bool))
    dd = d[j] - d[i]
    return math.sqrt(float(np.dot(dd, dd)) + g.dx**2 * float(np.dot(d, d)))


@dataclass
class BlockingResult:
    field: Field
    grid: Grid
    free: np.ndarray
    report: EnergyReport
    report_w0: EnergyReport
    energies: np.ndarray      # energy before every iterate
    distance: float           # H^1 distance of the minimiser from the ramp
    a: float
    b_cut: float
    R_cut: float
    stationarity: float
    iterations: int

    def tail_max(self, x1_from: float) -> float:
        sel = self.grid.x1 > x1_from
        return float(self.field.values[sel].max()) if sel.any() else 0.0


def minimize_blocking(g: Grid, b: Bistable, a: float, b_cut: float, R_cut: float | None = None,
                      tol: float = 1e-7, delta: float = 0.5, check_every: float = 1.0,
                      n_confirm: int = 3, t_max: float = 2000.0, keep_energies: bool = True,
                      raise_on_escape: bool = True) -> BlockingResult:
    """Local minimiser of the energy on ``a <= x1 <= R_cut`` near the ramp ``w0``.

    Gradient flow ``w <- w + tau (Lw + f(w))`` with ``tau = 0.9 dx^2 / 4``; the
    column nearest ``a`` (and everything left of it) is held at 1 and the
    column nearest ``R_cut`` (and beyond) at 0. Zero flux on the walls.
    Raises :class:`LeftBasin` as soon as the iterate leaves the H^1 ball of
    radius ``delta`` around ``w0`` (with ``raise_on_escape``).
    """
    if R_cut is None:
        R_cut = b_cut + 10.0
    if not a < b_cut < R_cut:
        raise ValueError("need a < b_cut < R_cut")
    sub, _ = g.subgrid(a - 0.5 * g.dx, R_cut + 0.5 * g.dx)
    cols = sub.x1_centres
    x_left, x_right = cols[0], cols[-1]
    free = (sub.x1 > x_left) & (sub.x1 < x_right)
    ramp = w0_profile(x_left, b_cut)
    w0 = ramp(sub.x1)
    w0[sub.x1 >= x_right] = 0.0
    w = w0.copy()
    work = np.empty_like(w)
    tau = stable_dt(g.dx)
    k_check = max(1, int(round(check_every / tau)))
    energies = []
    chunk = np.empty(k_check)
    dx2 = g.dx**2
    confirmed, it, meas = 0, 0, math.inf
    prev = w.copy()
    dist = 0.0
    while True:
        kernels.advance_energy(w, sub.nbr, free, tau, 1.0 / dx2, b.xs, b.coef, b.xs, b.Fcoef,
                               dx2, k_check, work, chunk)
        if keep_energies:
            energies.append(chunk.copy())
        it += k_check
        meas = float(np.max(np.abs(w - prev))) / (k_check * tau)
        prev[:] = w
        dist = h1_distance(sub, w, w0)
        if dist > delta and raise_on_escape:
            raise LeftBasin(f"minimiser drifted {dist:.3f} > {delta} from the ramp profile in H^1",
                            field=Field(w.copy(), it * tau), distance=dist)
        confirmed = confirmed + 1 if meas < tol else 0
        if confirmed >= n_confirm:
            break
        if it * tau >= t_max:
            raise NonConvergence(f"gradient flow not stationary after t = {t_max} "
                                 f"(last rate {meas:.2e})")
    en = np.concatenate(energies) if energies else np.empty(0)
    return BlockingResult(Field(w, it * tau), sub, free, energy(sub, w, b), energy(sub, w0, b),
                          en, dist, float(x_left), float(b_cut), float(x_right), meas, it)


def extend_supersolution(res: BlockingResult, target: Grid, tol: float = 1e-9) -> Field:
    """Minimiser continued by 1 left of its pinned column (and by 0 right of ``R_cut``)."""
    sub, w = res.grid, res.field.values
    seam = sub.x1 <= res.a + 1e-12
    if np.any(w[seam] < 1 - tol):
        raise SeamMismatch(f"minimiser is {w[seam].min():.3g} < 1 - {tol} on the seam column")
    out = np.zeros(target.n)
    idx = sub.locate(target.x1, target.x2)
    hit = idx >= 0
    out[hit] = w[idx[hit]]
    out[target.x1 < res.a] = 1.0
    return Field(out, math.inf)


@dataclass
class SteadyState:
    field: Field
    residual: float
    rates: list     # stationarity measure at the last checks


def steady_state(traj: Trajectory, final: Field, g: Grid, b: Bistable) -> SteadyState:
    """The final field of a run stopped by stationarity, with ``max |Lu + f(u)|``."""
    if not traj.stationary:
        raise NotStationary(f"run ended by {traj.stop!r}, not by stationarity")
    return SteadyState(final, residual(g, final, b), list(traj.stationarity[-3:]))
