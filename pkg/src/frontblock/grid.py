"""Masked cell-centred Cartesian grid with zero-flux walls.

Only inside cells are stored: values live in a flat array and an ``(n, 4)``
neighbour table (west, east, south, north; ``-1`` for a closed face) carries
the geometry. Rows are aligned so that ``x2 = 0`` is a cell face; row centres
sit at ``(j + 1/2) dx``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import kernels
from .errors import DisconnectedDomain, TooCoarse
from .kernels import EAST, NORTH, SOUTH, WEST

MIN_CELLS_ACROSS = 8


class CoarseGridWarning(UserWarning):
    pass


@dataclass
class Field:
    values: np.ndarray
    t: float = 0.0

    @property
    def min(self) -> float:
        return float(self.values.min())

    @property
    def max(self) -> float:
        return float(self.values.max())

    def copy(self) -> "Field":
        return Field(self.values.copy(), self.t)


class Grid:
    """Inside cells of a staircase domain.

    ``mask[i, j]`` is column ``i`` (x1) and row ``j`` (x2); ``index[i, j]`` is
    the flat cell number or ``-1``. Cells are numbered column by column.
    """

    def __init__(self, mask: np.ndarray, dx: float, x1_origin: float, x2_origin: float,
                 spec=None, check: bool = True):
        mask = np.asarray(mask, dtype=bool)
        self.mask = mask
        self.dx = float(dx)
        self.x1_origin = float(x1_origin)   # left face of column 0
        self.x2_origin = float(x2_origin)   # bottom face of row 0
        self.spec = spec
        nx, ny = mask.shape
        self.shape = (nx, ny)
        index = np.full(mask.shape, -1, dtype=np.int64)
        ii, jj = np.nonzero(mask)     # C order: column-major by x1
        index[ii, jj] = np.arange(len(ii))
        self.index = index
        self.ix, self.iy = ii, jj
        self.n = len(ii)
        self.x1_centres = self.x1_origin + (np.arange(nx) + 0.5) * self.dx
        self.x2_centres = self.x2_origin + (np.arange(ny) + 0.5) * self.dx
        self.x1 = self.x1_centres[ii]
        self.x2 = self.x2_centres[jj]

        nbr = np.full((self.n, 4), -1, dtype=np.int64)
        pad = np.full((nx + 2, ny + 2), -1, dtype=np.int64)
        pad[1:-1, 1:-1] = index
        nbr[:, WEST] = pad[ii, jj + 1]
        nbr[:, EAST] = pad[ii + 2, jj + 1]
        nbr[:, SOUTH] = pad[ii + 1, jj]
        nbr[:, NORTH] = pad[ii + 1, jj + 2]
        self.nbr = np.ascontiguousarray(nbr)

        # the row whose centre is +dx/2 sits just above the axis
        self.axis_row = int(round(-self.x2_origin / self.dx))
        if check:
            self._validate()

    # construction ---------------------------------------------------------
    @classmethod
    def build(cls, spec, dx: float, min_cells: int = MIN_CELLS_ACROSS) -> "Grid":
        """Cells whose centre lies strictly between the two mollified walls."""
        if dx <= 0:
            raise ValueError("dx must be positive")
        lo, hi = spec.truncation
        nx = int(round((hi - lo) / dx))
        if nx < 1 or abs(nx * dx - (hi - lo)) > 1e-9 * max(1.0, hi - lo):
            raise ValueError(f"truncation length {hi - lo} is not a multiple of dx = {dx}")
        xc = lo + (np.arange(nx) + 0.5) * dx
        top = spec.h_top(xc)
        bot = spec.h_bot(xc)
        n_up = int(math.ceil(top.max() / dx - 1e-9))
        n_dn = int(math.ceil(-bot.min() / dx - 1e-9))
        yc = (np.arange(-n_dn, n_up) + 0.5) * dx
        mask = (yc[None, :] < top[:, None]) & (yc[None, :] > bot[:, None])
        g = cls(mask, dx, lo, -n_dn * dx, spec=spec)
        across = mask.sum(axis=1)
        if across.min() < min_cells:
            i = int(np.argmin(across))
            warnings.warn(f"only {across[i]} cells across the domain at x1 = {xc[i]:.4g}; "
                          f"refine dx for at least {min_cells}", CoarseGridWarning, stacklevel=2)
        return g

    @classmethod
    def from_mask(cls, mask, dx: float, x1_origin: float = 0.0, x2_origin: float = 0.0) -> "Grid":
        return cls(mask, dx, x1_origin, x2_origin)

    def _validate(self):
        if self.n == 0:
            raise TooCoarse("no cell centre falls inside the domain")
        empty = ~self.mask.any(axis=1)
        if empty.any():
            x = self.x1_centres[np.argmax(empty)]
            raise TooCoarse(f"no inside cell in the column at x1 = {x:.4g}; the passage is "
                            f"narrower than dx = {self.dx}")
        _, ncomp = ndimage.label(self.mask)   # default structure is face connectivity
        if ncomp > 1:
            raise DisconnectedDomain(f"inside cells form {ncomp} disconnected pieces")

    def subgrid(self, x1_lo: float, x1_hi: float) -> tuple:
        """Columns with centres in ``[x1_lo, x1_hi]``: the new grid and the cell map into ``self``."""
        cols = np.nonzero((self.x1_centres >= x1_lo) & (self.x1_centres <= x1_hi))[0]
        if len(cols) == 0:
            raise ValueError("empty column range")
        i0, i1 = int(cols[0]), int(cols[-1]) + 1
        sub = Grid(self.mask[i0:i1], self.dx, self.x1_origin + i0 * self.dx, self.x2_origin,
                   spec=self.spec)
        parent = self.index[sub.ix + i0, sub.iy]
        return sub, parent

    def locate(self, x1, x2) -> np.ndarray:
        """Flat index of the cell containing each point, ``-1`` outside."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        i = np.floor((x1 - self.x1_origin) / self.dx + 1e-9).astype(np.int64)
        j = np.floor((x2 - self.x2_origin) / self.dx + 1e-9).astype(np.int64)
        ok = (i >= 0) & (i < self.shape[0]) & (j >= 0) & (j < self.shape[1])
        out = np.full(x1.shape, -1, dtype=np.int64)
        out[ok] = self.index[i[ok], j[ok]]
        return out

    # geometry helpers -----------------------------------------------------
    @property
    def axis_cells(self) -> np.ndarray:
        """Flat indices of the axis row, ordered by x1 (columns lacking it are skipped)."""
        idx = self.index[:, self.axis_row] if 0 <= self.axis_row < self.shape[1] else np.array([], int)
        return idx[idx >= 0]

    def cells_across(self) -> np.ndarray:
        return self.mask.sum(axis=1)

    def to_array(self, values, fill=np.nan) -> np.ndarray:
        out = np.full(self.shape, fill, dtype=float)
        out[self.ix, self.iy] = values
        return out

    def sample(self, fun) -> np.ndarray:
        return np.asarray(fun(self.x1, self.x2), dtype=float)

    def free_mask(self) -> np.ndarray:
        return np.ones(self.n, dtype=np.bool_)

    def column_max(self, values) -> np.ndarray:
        return np.nanmax(self.to_array(values, -np.inf), axis=1)

    # output ---------------------------------------------------------------
    def write_vtk(self, path, values, name: str = "u", blank: float = -1.0):
        """Legacy ASCII STRUCTURED_POINTS; outside cells carry ``blank``."""
        arr = self.to_array(values, blank)
        nx, ny = self.shape
        lines = [
            "# vtk DataFile Version 3.0",
            f"{name} on a masked grid",
            "ASCII",
            "DATASET STRUCTURED_POINTS",
            f"DIMENSIONS {nx} {ny} 1",
            f"ORIGIN {self.x1_centres[0]:.12g} {self.x2_centres[0]:.12g} 0",
            f"SPACING {self.dx:.12g} {self.dx:.12g} 1",
            f"POINT_DATA {nx * ny}",
            f"SCALARS {name} double 1",
            "LOOKUP_TABLE default",
        ]
        body = "\n".join("%.12g" % v for v in arr.T.ravel())   # x1 fastest
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n" + body + "\n")

    def write_axis_csv(self, path, values):
        cells = self.axis_cells
        with open(path, "w") as fh:
            fh.write("x1,u\n")
            for c in cells:
                fh.write("%.12g,%.12g\n" % (self.x1[c], values[c]))


def laplacian(g: Grid, u) -> Field | np.ndarray:
    """Sum of face fluxes ``(u_nb - u) / dx^2`` over open faces."""
    vals = u.values if isinstance(u, Field) else u
    out = np.empty(g.n)
    kernels.laplacian_kernel(np.ascontiguousarray(vals, dtype=float), g.nbr, 1.0 / g.dx**2, out)
    return Field(out, u.t) if isinstance(u, Field) else out
