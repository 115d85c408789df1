"""Exact mirror and quarter-turn maps of the coupled state.

These act on the full simulation state (flow field included) and are exact
only on grids that are themselves symmetric: mirror-symmetric about x = 0 for
``mirror_state`` and square and symmetric about the origin for
``rotate_state`` without an explicit field.  They exist to check that the solver respects the
symmetries that transition reproduction relies on.
"""
from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .flow import FlowField
from .fsi import CoupledState
from .grid import Grid
from .loads import AeroLoad
from .structures import BodyState, WingState, rot

_MX = np.array([-1.0, 1.0])


def check_mirror_grid(grid: Grid, tol=1e-9):
    if np.max(np.abs(grid.xf + grid.xf[::-1])) > tol:
        raise ParameterError("grid is not mirror-symmetric about x = 0")


def check_quarter_grid(grid: Grid, tol=1e-9):
    check_mirror_grid(grid, tol)
    if grid.xf.shape != grid.yf.shape or np.max(np.abs(grid.xf - grid.yf)) > tol:
        raise ParameterError("quarter-turn symmetry needs identical x and y faces")


def _opt(a, f):
    return None if a is None else f(a)


def _wrap(a):
    return float(np.arctan2(np.sin(a), np.cos(a)))


def mirror_field(field: FlowField) -> FlowField:
    def mu(u):
        return -u[::-1]

    def ms(s):
        return s[::-1].copy()

    return FlowField(mu(field.u), ms(field.v), ms(field.p), ms(field.q), field.time,
                     _opt(field.u_prev, mu), _opt(field.v_prev, ms),
                     _opt(field.solid_fraction, ms),
                     _opt(field.marker_force, lambda f: f * _MX),
                     _opt(field.marker_volume, np.copy), field.div_residual)


def rotate_field_quarter(field: FlowField) -> FlowField:
    """Rotate by +pi/2 about the origin."""
    def ru(u, v):
        return -v.T[::-1].copy()

    def rv(u, v):
        return u.T[::-1].copy()

    def rs(s):
        return s.T[::-1].copy()

    R = rot(np.pi / 2)
    up = vp = None
    if field.u_prev is not None:
        up, vp = ru(field.u_prev, field.v_prev), rv(field.u_prev, field.v_prev)
    return FlowField(ru(field.u, field.v), rv(field.u, field.v), rs(field.p), rs(field.q),
                     field.time, up, vp, _opt(field.solid_fraction, rs),
                     _opt(field.marker_force, lambda f: f @ R.T),
                     _opt(field.marker_volume, np.copy), field.div_residual)


def mirror_body(b: BodyState) -> BodyState:
    return BodyState(b.position * _MX, -b.theta, b.velocity * _MX, -b.omega,
                     b.gravity_dir * _MX, _opt(b.accel, lambda a: a * _MX),
                     _opt(b.alpha, lambda a: -a))


def rotate_body(b: BodyState, angle) -> BodyState:
    R = rot(angle)
    return BodyState(R @ b.position, b.theta + angle, R @ b.velocity, b.omega,
                     R @ b.gravity_dir, _opt(b.accel, lambda a: R @ a), b.alpha)


def mirror_state(s: CoupledState) -> CoupledState:
    w = s.wing
    wing = WingState(w.positions * _MX, w.velocities * _MX, w.ds,
                     _opt(w.accelerations, lambda a: a * _MX))
    aero = AeroLoad(s.aero.force * _MX, -s.aero.moment, s.aero.per_segment_force * _MX)
    return CoupledState(mirror_field(s.flow), wing, mirror_body(s.body), s.time, aero,
                        -s.le_x, _wrap(np.pi - s.le_alpha), -s.stroke_sign)


def rotate_state(s: CoupledState, angle, field=None) -> CoupledState:
    """Rotate the structure and body by ``angle``; the flow is replaced by ``field``.

    With ``field=None`` the flow is rotated exactly by quarter turns only, so
    ``angle`` must then be a multiple of pi/2.
    """
    R = rot(angle)
    if field is None:
        k = angle / (np.pi / 2)
        if abs(k - round(k)) > 1e-12:
            raise ParameterError("exact flow rotation needs a multiple of pi/2")
        field = s.flow
        for _ in range(int(round(k)) % 4):
            field = rotate_field_quarter(field)
    w = s.wing
    wing = WingState(w.positions @ R.T, w.velocities @ R.T, w.ds,
                     _opt(w.accelerations, lambda a: a @ R.T))
    aero = AeroLoad(R @ s.aero.force, s.aero.moment, s.aero.per_segment_force @ R.T)
    return CoupledState(field, wing, rotate_body(s.body, angle), s.time, aero,
                        s.le_x, s.le_alpha, s.stroke_sign)
