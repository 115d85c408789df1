"""Independent reference solutions shared by the unit and acceptance tests."""
import numpy as np

from flyrl.flow import (BoundarySpec, EdgeBC, FlowField, FlowSolver, Markers,
                        cell_center_velocity, uniform_profile)
from flyrl.grid import Grid, GridSpec


def uniform_grid(n, lo, hi, ny=None):
    return Grid(GridSpec(nx=n, ny=ny or n, domain_min=(lo, lo), domain_max=(hi, hi),
                         cluster_center=None))


def taylor_green_exact(t, re):
    d = np.exp(-2.0 * t / re)

    def prof(x, y):
        return -np.cos(x) * np.sin(y) * d, np.sin(x) * np.cos(y) * d
    return prof


def taylor_green_field(g: Grid, re, t=0.0):
    ex = taylor_green_exact(t, re)
    f = FlowField.zeros(g)
    X, Y = np.meshgrid(g.xf, g.yc, indexing="ij")
    f.u = ex(X, Y)[0]
    X, Y = np.meshgrid(g.xc, g.yf, indexing="ij")
    f.v = ex(X, Y)[1]
    X, Y = np.meshgrid(g.xc, g.yc, indexing="ij")
    f.p = -0.25 * (np.cos(2 * X) + np.cos(2 * Y)) * np.exp(-4.0 * t / re)
    f.time = t
    return f


def kinetic_energy(g: Grid, f: FlowField):
    uc, vc = cell_center_velocity(g, f)
    return 0.5 * float(np.sum((uc ** 2 + vc ** 2) * g.cell_volume))


def run_taylor_green(n, re=100.0, t_end=2 * np.pi, cfl=0.5):
    """Decaying vortex on [0, 2 pi]^2 with the exact solution imposed on the edges.

    Returns (relative kinetic energy error, max u error) at ``t_end``.
    """
    g = uniform_grid(n, 0.0, 2 * np.pi)
    f = taylor_green_field(g, re)
    s = FlowSolver(g, re)
    steps = int(np.ceil(t_end / (cfl * g.min_spacing)))
    dt = t_end / steps
    for _ in range(steps):
        e = EdgeBC("velocity", taylor_green_exact(f.time + dt, re))
        f = s.advance(f, None, BoundarySpec(e, e, e, e), dt)
    ref = taylor_green_field(g, re, t_end)
    ke_rel = kinetic_energy(g, f) / kinetic_energy(g, ref) - 1.0
    return ke_rel, float(np.max(np.abs(f.u - ref.u)))


def plate_markers(center, half_length, m, vertical=True, velocity=(0.0, 0.0)):
    s = np.linspace(-half_length, half_length, m)
    pts = np.zeros((m, 2)) + np.asarray(center, float)
    pts[:, 1 if vertical else 0] += s
    w = np.full(m, 2 * half_length / (m - 1))
    w[[0, -1]] *= 0.5
    return Markers(pts, np.tile(np.asarray(velocity, float), (m, 1)), w, 0.0)


def box_momentum_force(g: Grid, f0: FlowField, f1: FlowField, re, lo, hi):
    """x-force on whatever sits in the cell box [lo, hi)^2 from the fluid momentum balance.

    F = -d/dt int u dV - flux of (u u + p - nu (grad u + grad u^T)) through the box.
    Uniform grids only.
    """
    h = g.dx[0]
    nu = 1.0 / re

    def mom(f):
        inner = f.u[lo + 1:hi, lo:hi].sum()
        edges = 0.5 * (f.u[lo, lo:hi].sum() + f.u[hi, lo:hi].sum())
        return (inner + edges) * h * h

    def flux(f):
        uc, vc = cell_center_velocity(g, f)
        dudx, dudy = np.gradient(uc, h, h)
        dvdx, _ = np.gradient(vc, h, h)
        txx = uc * uc + f.p - 2 * nu * dudx
        txy = uc * vc - nu * (dudy + dvdx)

        def xline(a, i):
            return 0.5 * (a[i - 1] + a[i])[lo:hi].sum() * h

        def yline(a, j):
            return 0.5 * (a[:, j - 1] + a[:, j])[lo:hi].sum() * h
        return xline(txx, hi) - xline(txx, lo) + yline(txy, hi) - yline(txy, lo)

    dt = f1.time - f0.time
    return -(mom(f1) - mom(f0)) / dt - 0.5 * (flux(f0) + flux(f1))


def inflow_bc(u0):
    return BoundarySpec(left=EdgeBC("velocity", uniform_profile(u0)))
