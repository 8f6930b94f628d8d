"""Hot loops: piecewise-polynomial reaction terms, the masked-grid stepper and
the RK4 shooting integrators.

Every kernel exists twice: a numba-compiled version and a numpy (or plain
Python) twin with identical arithmetic. ``USE_NUMBA`` from :mod:`._accel`
picks which one the public names point at.

Piecewise polynomials are stored as ``(xs, coef)``: ``xs`` holds ``k + 1``
increasing breakpoints and ``coef`` has ``k + 2`` rows, lowest power first.
Row 0 is the left extension (local variable ``u - xs[0]``), rows ``1..k`` the
interior pieces (local variable ``u - xs[i - 1]``) and row ``k + 1`` the
right extension (local variable ``u - xs[k]``).
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

# neighbour slots in the (n, 4) table
WEST, EAST, SOUTH, NORTH = 0, 1, 2, 3


# --------------------------------------------------------------------------
# piecewise polynomials
# --------------------------------------------------------------------------

@njit
def ppoly_scalar(u, xs, coef):
    k = xs.shape[0] - 1
    if u < xs[0]:
        p = 0
        t = u - xs[0]
    elif u >= xs[k]:
        p = k + 1
        t = u - xs[k]
    else:
        p = 1
        while u >= xs[p]:
            p += 1
        t = u - xs[p - 1]
    d = coef.shape[1] - 1
    acc = coef[p, d]
    for j in range(d - 1, -1, -1):
        acc = acc * t + coef[p, j]
    return acc


def ppoly_numpy(u, xs, coef):
    u = np.asarray(u, dtype=float)
    k = xs.shape[0] - 1
    p = np.searchsorted(xs, u, side="right")
    anchor = xs[np.clip(p - 1, 0, k)]
    t = u - anchor
    c = coef[p]
    acc = c[..., -1]
    for j in range(coef.shape[1] - 2, -1, -1):
        acc = acc * t + c[..., j]
    return acc


@njit
def _ppoly_array_nb(u, xs, coef, out):
    for i in range(u.shape[0]):
        out[i] = ppoly_scalar(u[i], xs, coef)
    return out


def ppoly_eval(u, xs, coef):
    u = np.asarray(u, dtype=float)
    if USE_NUMBA and u.ndim == 1:
        return _ppoly_array_nb(u, xs, coef, np.empty_like(u))
    return ppoly_numpy(u, xs, coef)


# --------------------------------------------------------------------------
# masked-grid diffusion / reaction
# --------------------------------------------------------------------------

@njit
def _laplacian_nb(u, nbr, inv_dx2, out):
    n = nbr.shape[0]
    for i in range(n):
        ui = u[i]
        acc = 0.0
        for s in range(4):
            j = nbr[i, s]
            if j >= 0:
                acc += u[j] - ui
        out[i] = acc * inv_dx2
    return out


def _laplacian_np(u, nbr, inv_dx2, out):
    n = nbr.shape[0]
    ext = np.append(u[:n], 0.0)
    idx = np.where(nbr >= 0, nbr, n)
    diff = ext[idx] - u[:n, None]
    diff[nbr < 0] = 0.0
    out[:] = diff.sum(axis=1) * inv_dx2
    return out


@njit
def _advance_nb(u, nbr, free, dt, inv_dx2, xs, coef, n_steps, work):
    """``n_steps`` explicit Euler steps of ``u_t = Lu + f(u)`` on free cells.

    Returns the running (min, max) over every intermediate state.
    """
    n = u.shape[0]
    lo = np.inf
    hi = -np.inf
    a = u
    b = work
    for _ in range(n_steps):
        for i in range(n):
            ai = a[i]
            if free[i]:
                acc = 0.0
                for s in range(4):
                    j = nbr[i, s]
                    if j >= 0:
                        acc += a[j] - ai
                v = ai + dt * (acc * inv_dx2 + ppoly_scalar(ai, xs, coef))
            else:
                v = ai
            b[i] = v
            if v < lo:
                lo = v
            if v > hi:
                hi = v
        a, b = b, a
    if n_steps % 2 == 1:
        u[:] = a
    return lo, hi


class _NumpyStepper:
    """Precomputed gather tables for the numpy path."""

    def __init__(self, nbr):
        n = nbr.shape[0]
        self.n = n
        self.idx = np.where(nbr >= 0, nbr, n)
        self.open = nbr >= 0
        self.count = self.open.sum(axis=1)


_np_cache = {}


def _stepper_for(nbr):
    key = (id(nbr), nbr.shape)
    st = _np_cache.get(key)
    if st is None or st.idx.shape != nbr.shape:
        if len(_np_cache) > 16:
            _np_cache.clear()
        st = _NumpyStepper(nbr)
        _np_cache[key] = st
    return st


def _advance_np(u, nbr, free, dt, inv_dx2, xs, coef, n_steps, work):
    st = _stepper_for(nbr)
    n = st.n
    ext = np.empty(n + 1)
    ext[n] = 0.0
    lo, hi = np.inf, -np.inf
    fixed = ~free
    for _ in range(n_steps):
        ext[:n] = u
        # closed slots gather the zero sentinel and add nothing
        lap = ext[st.idx].sum(axis=1) - st.count * u
        v = u + dt * (lap * inv_dx2 + ppoly_numpy(u, xs, coef))
        v[fixed] = u[fixed]
        u[:] = v
        lo = min(lo, v.min())
        hi = max(hi, v.max())
    return lo, hi


@njit
def _advance_energy_nb(u, nbr, free, dt, inv_dx2, xs, coef, Fxs, Fcoef, dx2, n_steps, work, energies):
    """Like ``_advance_nb`` but records the discrete energy of each pre-step state.

    Energy = sum over faces touching a free cell of (u_j - u_i)^2 / 2
             + dx^2 * sum over free cells of F(u_i).
    """
    n = u.shape[0]
    a = u
    b = work
    for k in range(n_steps):
        e = 0.0
        for i in range(n):
            ai = a[i]
            fi = free[i]
            for s in (EAST, NORTH):
                j = nbr[i, s]
                if j >= 0 and (fi or free[j]):
                    d = a[j] - ai
                    e += 0.5 * d * d
            if fi:
                e += dx2 * ppoly_scalar(ai, Fxs, Fcoef)
                acc = 0.0
                for s in range(4):
                    j = nbr[i, s]
                    if j >= 0:
                        acc += a[j] - ai
                b[i] = ai + dt * (acc * inv_dx2 + ppoly_scalar(ai, xs, coef))
            else:
                b[i] = ai
        energies[k] = e
        a, b = b, a
    if n_steps % 2 == 1:
        u[:] = a
    return energies


def _energy_np(u, nbr, free, Fxs, Fcoef, dx2):
    n = nbr.shape[0]
    e = 0.0
    for s in (EAST, NORTH):
        j = nbr[:, s]
        ok = j >= 0
        i_idx = np.nonzero(ok)[0]
        jj = j[ok]
        touch = free[i_idx] | free[jj]
        d = u[jj[touch]] - u[i_idx[touch]]
        e += 0.5 * float(np.dot(d, d))
    e += dx2 * float(ppoly_numpy(u[:n][free], Fxs, Fcoef).sum())
    return e


def _advance_energy_np(u, nbr, free, dt, inv_dx2, xs, coef, Fxs, Fcoef, dx2, n_steps, work, energies):
    for k in range(n_steps):
        energies[k] = _energy_np(u, nbr, free, Fxs, Fcoef, dx2)
        _advance_np(u, nbr, free, dt, inv_dx2, xs, coef, 1, work)
    return energies


# --------------------------------------------------------------------------
# RK4 shooting: 1D travelling wave  phi'' + c phi' + f(phi) = 0
# --------------------------------------------------------------------------

@njit
def _wave_rhs(p, q, c, xs, coef):
    return q, -c * q - ppoly_scalar(p, xs, coef)


@njit
def _hermite_root(z0, p0, q0, z1, p1, q1, level):
    """Root of the cubic Hermite interpolant of (p, p') on [z0, z1] at ``level``.

    Returns (z, slope) at the crossing.
    """
    h = z1 - z0
    s = (level - p0) / (p1 - p0) if p1 != p0 else 0.5
    if s < 0.0:
        s = 0.0
    if s > 1.0:
        s = 1.0
    for _ in range(40):
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        val = h00 * p0 + h10 * h * q0 + h01 * p1 + h11 * h * q1 - level
        d00 = 6 * s**2 - 6 * s
        d10 = 3 * s**2 - 4 * s + 1
        d01 = -6 * s**2 + 6 * s
        d11 = 3 * s**2 - 2 * s
        der = d00 * p0 + d10 * h * q0 + d01 * p1 + d11 * h * q1
        if der == 0.0:
            break
        step = val / der
        s -= step
        if s < 0.0:
            s = 0.0
        if s > 1.0:
            s = 1.0
        if abs(step) < 1e-15:
            break
    # slope from linear blend of q is O(h^2); use the Hermite derivative instead
    d00 = 6 * s**2 - 6 * s
    d10 = 3 * s**2 - 4 * s + 1
    d01 = -6 * s**2 + 6 * s
    d11 = 3 * s**2 - 2 * s
    slope = (d00 * p0 + d10 * h * q0 + d01 * p1 + d11 * h * q1) / h
    return z0 + s * h, slope


@njit
def _wave_branch_nb(c, p0, q0, h, zmax, level, xs, coef, record, zs, ps, qs):
    """Integrate from (p0, q0) with signed step ``h`` until p crosses ``level``.

    Returns (status, z_cross, slope_cross, n_recorded). status 0: crossed;
    1: the orbit turned back (q changed sign) before crossing; 2: ran past zmax.
    """
    z = 0.0
    p = p0
    q = q0
    nrec = 0
    if record:
        zs[0] = z
        ps[0] = p
        qs[0] = q
        nrec = 1
    sgn_start = 1.0 if p0 > level else -1.0
    n_max = int(abs(zmax / h)) + 1
    for _ in range(n_max):
        k1p, k1q = _wave_rhs(p, q, c, xs, coef)
        k2p, k2q = _wave_rhs(p + 0.5 * h * k1p, q + 0.5 * h * k1q, c, xs, coef)
        k3p, k3q = _wave_rhs(p + 0.5 * h * k2p, q + 0.5 * h * k2q, c, xs, coef)
        k4p, k4q = _wave_rhs(p + h * k3p, q + h * k3q, c, xs, coef)
        pn = p + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        qn = q + h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
        zn = z + h
        if (pn - level) * sgn_start <= 0.0:
            if h > 0:
                zc, sc = _hermite_root(z, p, q, zn, pn, qn, level)
            else:
                zc, sc = _hermite_root(zn, pn, qn, z, p, q, level)
            return 0, zc, sc, nrec
        # monotone decreasing profile: q must stay negative
        if qn >= 0.0:
            return 1, zn, 0.0, nrec
        z, p, q = zn, pn, qn
        if record and nrec < zs.shape[0]:
            zs[nrec] = z
            ps[nrec] = p
            qs[nrec] = q
            nrec += 1
    return 2, z, q, nrec


# --------------------------------------------------------------------------
# RK4 shooting: radial Dirichlet problem  w'' + (N-1)/r w' + f(w) = 0
# --------------------------------------------------------------------------

@njit
def _radial_rhs(r, w, v, nm1, xs, coef):
    return v, -nm1 / r * v - ppoly_scalar(w, xs, coef)


@njit
def _radial_shoot_nb(w0, ndim, h, rmax, xs, coef, record, rs, ws, vs):
    """Shoot from the centre value ``w0``.

    Returns (status, r_zero, n_recorded). status 0: w hit 0 at r_zero;
    1: w' reached 0 while w > 0 (orbit turns back); 2: r exceeded rmax.
    """
    nm1 = ndim - 1.0
    f0 = ppoly_scalar(w0, xs, coef)
    # series start removes the 1/r singularity to second order
    r = h
    w = w0 - h * h * f0 / (2.0 * ndim)
    v = -h * f0 / ndim
    nrec = 0
    if record:
        rs[0] = 0.0
        ws[0] = w0
        vs[0] = 0.0
        rs[1] = r
        ws[1] = w
        vs[1] = v
        nrec = 2
    if f0 <= 0.0:
        return 1, r, nrec
    n_max = int(rmax / h) + 1
    for _ in range(n_max):
        k1w, k1v = _radial_rhs(r, w, v, nm1, xs, coef)
        k2w, k2v = _radial_rhs(r + 0.5 * h, w + 0.5 * h * k1w, v + 0.5 * h * k1v, nm1, xs, coef)
        k3w, k3v = _radial_rhs(r + 0.5 * h, w + 0.5 * h * k2w, v + 0.5 * h * k2v, nm1, xs, coef)
        k4w, k4v = _radial_rhs(r + h, w + h * k3w, v + h * k3v, nm1, xs, coef)
        wn = w + h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
        vn = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        rn = r + h
        if wn <= 0.0:
            rz, _ = _hermite_root(r, w, v, rn, wn, vn, 0.0)
            if record and nrec < rs.shape[0]:
                rs[nrec] = rz
                ws[nrec] = 0.0
                vs[nrec] = vn
                nrec += 1
            return 0, rz, nrec
        if vn >= 0.0:
            return 1, rn, nrec
        r, w, v = rn, wn, vn
        if record and nrec < rs.shape[0]:
            rs[nrec] = r
            ws[nrec] = w
            vs[nrec] = v
            nrec += 1
        if r > rmax:
            break
    return 2, r, nrec


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def _py(fn):
    return getattr(fn, "py_func", fn)


if USE_NUMBA:
    laplacian_kernel = _laplacian_nb
    advance = _advance_nb
    advance_energy = _advance_energy_nb
    wave_branch = _wave_branch_nb
    radial_shoot = _radial_shoot_nb
else:
    laplacian_kernel = _laplacian_np
    advance = _advance_np
    advance_energy = _advance_energy_np
    wave_branch = _py(_wave_branch_nb)
    radial_shoot = _py(_radial_shoot_nb)


def energy_kernel(u, nbr, free, Fxs, Fcoef, dx2):
    return _energy_np(u, nbr, free, Fxs, Fcoef, dx2)


__all__ = [
    "USE_NUMBA", "WEST", "EAST", "SOUTH", "NORTH",
    "ppoly_eval", "ppoly_numpy", "ppoly_scalar",
    "laplacian_kernel", "advance", "advance_energy", "energy_kernel",
    "wave_branch", "radial_shoot", "math",
]
