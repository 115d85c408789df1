"""Hydrodynamic loads on the wing recovered from the immersed-boundary forcing.

The forcing that enforces no-slip on a marker is the force the wing exerts on
the fluid, so its negative is the pressure + viscous traction integrated over
the marker's arc length (both faces of the thin plate).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flow import FlowField
from .grid import Grid


@dataclass(frozen=True)
class AeroLoad:
    force: np.ndarray               # total, scaled by span
    moment: float                   # about the body mass centre, scaled by span
    per_segment_force: np.ndarray   # (N, 2) per unit span

    @classmethod
    def zero(cls, n):
        return cls(np.zeros(2), 0.0, np.zeros((n, 2)))


def marker_forces(field: FlowField, n_nodes) -> np.ndarray:
    """Per-node force on the wing in flow units (rho_f U_r^2 c per unit span)."""
    if field.marker_force is None:
        return np.zeros((n_nodes, 2))
    return -field.marker_force * field.marker_volume[:, None]


def aero_load(field: FlowField, marker_positions, body_position, span, scale=1.0,
              grid: Grid | None = None, transfer=None) -> AeroLoad:
    """Assemble per-segment and total loads.

    ``scale`` converts flow-unit forces to the caller's force unit.  An
    optional ``(N, M)`` matrix ``transfer`` hands marker forces to the wing
    nodes.  Moments are taken at the markers where the forces act.
    """
    pos = np.asarray(marker_positions, dtype=float)
    if grid is not None:
        grid.check_inside(pos, "wing segment")
    f = marker_forces(field, len(pos)) * scale
    r = pos - np.asarray(body_position)[None, :]
    moment = float(np.sum(r[:, 0] * f[:, 1] - r[:, 1] * f[:, 0]))
    seg = f if transfer is None else transfer @ f
    return AeroLoad(span * f.sum(axis=0), span * moment, seg)
