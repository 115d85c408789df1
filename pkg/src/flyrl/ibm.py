"""Regularized delta kernel: interpolation and spreading between markers and grid.

The 3-point kernel of Roma, Peskin & Berger is used in index space with the
local cell width; weights are renormalized per direction so constants are
interpolated exactly on stretched grids.
"""
from __future__ import annotations

import numpy as np

STENCIL = 4


def roma_kernel(r):
    r = np.abs(r)
    out = np.zeros_like(r)
    inner = r <= 0.5
    outer = (r > 0.5) & (r < 1.5)
    out[inner] = (1.0 + np.sqrt(1.0 - 3.0 * r[inner] ** 2)) / 3.0
    ro = r[outer]
    out[outer] = (5.0 - 3.0 * ro - np.sqrt(np.maximum(0.0, 1.0 - 3.0 * (1.0 - ro) ** 2))) / 6.0
    return out


def _axis_weights(coords, x, h):
    """Indices ``(n, STENCIL)`` and normalized weights of nodes ``coords`` near ``x``."""
    k0 = np.searchsorted(coords, x) - STENCIL // 2
    k0 = np.clip(k0, 0, len(coords) - STENCIL)
    idx = k0[:, None] + np.arange(STENCIL)[None, :]
    w = roma_kernel((coords[idx] - x[:, None]) / h[:, None])
    s = w.sum(axis=1, keepdims=True)
    w = np.where(s > 0, w / np.where(s > 0, s, 1.0), 0.0)
    return idx, w


class Stencil:
    """Precomputed kernel weights of a marker set on one staggered component grid."""

    def __init__(self, xnodes, ynodes, points, hx, hy):
        self.ix, self.wx = _axis_weights(xnodes, points[:, 0], hx)
        self.iy, self.wy = _axis_weights(ynodes, points[:, 1], hy)
        self.shape = (len(xnodes), len(ynodes))

    def interpolate(self, field):
        vals = field[self.ix[:, :, None], self.iy[:, None, :]]
        return np.einsum("nij,ni,nj->n", vals, self.wx, self.wy)

    def spread(self, values, volumes):
        """Distribute marker quantities ``values`` (per unit marker volume) to nodes.

        Returns the node density such that ``sum(density * volumes)`` equals
        ``sum(values)`` whenever kernels do not leave the grid.
        """
        out = np.zeros(self.shape)
        contrib = values[:, None, None] * self.wx[:, :, None] * self.wy[:, None, :]
        np.add.at(out, (np.broadcast_to(self.ix[:, :, None], contrib.shape),
                        np.broadcast_to(self.iy[:, None, :], contrib.shape)), contrib)
        return out / volumes
