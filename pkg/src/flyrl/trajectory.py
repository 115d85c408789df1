"""Trajectory CSV files: fixed header, one row per logged time step."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .env import TRAJ_COLUMNS
from .errors import FlyrlError


class TrajectoryWriter:
    """Appends rows; floats are written with 17 significant digits so files round-trip."""

    def __init__(self, path, columns=TRAJ_COLUMNS):
        self.path = Path(path)
        self.columns = tuple(columns)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow(self.columns)
        self._last_t = -np.inf
        self.rows = 0

    def write(self, rows):
        for row in rows:
            if len(row) != len(self.columns):
                raise FlyrlError(f"row has {len(row)} fields, header has {len(self.columns)}")
            vals = np.asarray(row, dtype=float)
            if not np.all(np.isfinite(vals)):
                raise FlyrlError(f"non-finite value in trajectory row at t={row[0]}")
            if vals[0] < self._last_t:
                raise FlyrlError("trajectory rows must be time-ordered")
            self._last_t = vals[0]
            self._w.writerow([f"{v:.17g}" for v in vals])
            self.rows += 1
        self._fh.flush()


    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_trajectory(path):
    """``(columns, array)``; an empty file body gives a ``(0, ncols)`` array."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FlyrlError(f"{path}: empty trajectory file")
    cols = tuple(rows[0])
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(cols))
    return cols, data


def max_abs_difference(path_a, path_b):
    ca, a = read_trajectory(path_a)
    cb, b = read_trajectory(path_b)
    if ca != cb or a.shape != b.shape:
        return float("inf")
    return float(np.max(np.abs(a - b))) if a.size else 0.0
