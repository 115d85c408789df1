"""Structured staggered grid with a uniform core and geometric stretching."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .errors import GeometryError, ParameterError


@dataclass(frozen=True)
class GridSpec:
    nx: int = 128
    ny: int = 128
    domain_min: tuple = (-250.0, -250.0)
    domain_max: tuple = (250.0, 250.0)
    # None -> uniform grid.  Otherwise a uniform core of half-width
    # ``core_halfwidth`` around ``cluster_center`` holds ``core_fraction``
    # of the cells; the rest stretch geometrically to the domain edges.
    cluster_center: tuple | None = (0.0, 0.0)
    core_halfwidth: float = 8.0
    core_fraction: float = 0.5

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ParameterError("grid needs at least 8 cells per direction")
        for lo, hi in zip(self.domain_min, self.domain_max):
            if not hi > lo:
                raise ParameterError("domain_max must exceed domain_min")
        if self.cluster_center is not None:
            if not 0 < self.core_fraction <= 1:
                raise ParameterError("core_fraction must lie in (0, 1]")
            for c, lo, hi in zip(self.cluster_center, self.domain_min, self.domain_max):
                if not (lo <= c - self.core_halfwidth and c + self.core_halfwidth <= hi):
                    raise ParameterError("clustered core must lie inside the domain")


def _geometric_side(h, n, dist):
    """Offsets of ``n`` cells growing geometrically from width ``h`` to span ``dist``."""
    if n == 0:
        return np.zeros(0)

    def total(r):
        if abs(r - 1.0) < 1e-12:
            return h * n - dist
        return h * (r**n - 1.0) / (r - 1.0) - dist

    if abs(total(1.0)) < 1e-12 * dist:
        r = 1.0
    else:
        r = brentq(total, 1e-3, 20.0, xtol=1e-15, rtol=1e-15, maxiter=500)
    widths = h * r ** np.arange(1, n + 1) / r
    offsets = np.cumsum(widths)
    offsets[-1] = dist
    return offsets


def stretched_faces(lo, hi, n, center=None, halfwidth=0.0, core_fraction=1.0):
    """Face coordinates (length ``n + 1``) of a 1-D clustered grid."""
    if center is None:
        return np.linspace(lo, hi, n + 1)
    n_core = max(2, 2 * int(round(n * core_fraction / 2)))
    n_core = min(n_core, n)
    h = 2.0 * halfwidth / n_core
    half = n_core // 2
    core = center + h * np.arange(-half, half + 1)
    d_left, d_right = core[0] - lo, hi - core[-1]
    rest = n - n_core
    if d_left + d_right <= 0:
        n_left = n_right = 0
    else:
        n_left = int(round(rest * d_left / (d_left + d_right)))
        n_right = rest - n_left
    if (d_left > 0) != (n_left > 0) or (d_right > 0) != (n_right > 0):
        raise ParameterError("cannot distribute stretched cells; adjust core size")
    left = core[0] - _geometric_side(h, n_left, d_left)[::-1]
    right = core[-1] + _geometric_side(h, n_right, d_right)
    faces = np.concatenate([left, core, right])
    faces[0], faces[-1] = lo, hi
    return faces


class Grid:
    """Staggered MAC grid.

    ``u`` lives on x-faces ``(xf[i], yc[j])`` with shape ``(nx + 1, ny)``,
    ``v`` on y-faces ``(xc[i], yf[j])`` with shape ``(nx, ny + 1)``, and
    pressure / source terms at cell centres ``(nx, ny)``.
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        cc = spec.cluster_center
        self.xf = stretched_faces(spec.domain_min[0], spec.domain_max[0], spec.nx,
                                  None if cc is None else cc[0], spec.core_halfwidth,
                                  spec.core_fraction)
        self.yf = stretched_faces(spec.domain_min[1], spec.domain_max[1], spec.ny,
                                  None if cc is None else cc[1], spec.core_halfwidth,
                                  spec.core_fraction)
        if np.any(np.diff(self.xf) <= 0) or np.any(np.diff(self.yf) <= 0):
            raise ParameterError("grid coordinates must be strictly increasing")
        self.nx, self.ny = spec.nx, spec.ny
        self.xc = 0.5 * (self.xf[1:] + self.xf[:-1])
        self.yc = 0.5 * (self.yf[1:] + self.yf[:-1])
        self.dx = np.diff(self.xf)
        self.dy = np.diff(self.yf)
        # centre-to-centre spacing across each face; boundary faces use the half cell
        self.dxc = np.concatenate([[self.dx[0] / 2], np.diff(self.xc), [self.dx[-1] / 2]])
        self.dyc = np.concatenate([[self.dy[0] / 2], np.diff(self.yc), [self.dy[-1] / 2]])

    @property
    def bounds(self):
        return (self.xf[0], self.xf[-1], self.yf[0], self.yf[-1])

    @cached_property
    def cell_volume(self):
        return np.outer(self.dx, self.dy)

    @cached_property
    def u_volume(self):
        return np.outer(self.dxc, self.dy)

    @cached_property
    def v_volume(self):
        return np.outer(self.dx, self.dyc)

    @property
    def min_spacing(self):
        return min(self.dx.min(), self.dy.min())

    def contains(self, point, margin=0.0):
        x, y = point
        x0, x1, y0, y1 = self.bounds
        return (x0 + margin <= x <= x1 - margin) and (y0 + margin <= y <= y1 - margin)

    def local_spacing(self, points):
        """Cell widths ``(hx, hy)`` of the cells containing each point."""
        pts = np.atleast_2d(points)
        ix = np.clip(np.searchsorted(self.xf, pts[:, 0]) - 1, 0, self.nx - 1)
        iy = np.clip(np.searchsorted(self.yf, pts[:, 1]) - 1, 0, self.ny - 1)
        return self.dx[ix], self.dy[iy]

    def check_inside(self, points, what="point"):
        pts = np.atleast_2d(points)
        x0, x1, y0, y1 = self.bounds
        bad = (pts[:, 0] < x0) | (pts[:, 0] > x1) | (pts[:, 1] < y0) | (pts[:, 1] > y1)
        if np.any(bad):
            raise GeometryError(f"{what} outside the grid: {pts[bad][0]}")
