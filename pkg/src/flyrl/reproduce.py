"""Dynamics-conserving replication of transitions.

A real transition is translated to new start points, optionally mirrored
about the vertical line through the start, and rotated about the start
together with gravity.  All operations act on normalized observations;
positions are relative to the goal and the start point is carried along.
Rewards and fall-out flags are re-evaluated on each replica.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .observation import (IFX, IFY, ICOS, IK, ISIN, IU, IUA, IV, IVA, IW, IX, IXL, IY,
                          ObsScaling, reward_from_obs)


@dataclass(frozen=True)
class ReproductionGrid:
    # translation targets: start points relative to the goal [chords]
    translation_min: float = -900.0
    translation_max: float = 900.0
    translation_step: float = 200.0
    mirror: bool = True
    rotations: int = 10                 # angles k * 2 pi / rotations
    domain_min: tuple = (-1000.0, -1000.0)
    domain_max: tuple = (1000.0, 1000.0)
    translate: bool = True

    def __post_init__(self):
        if self.translate and not (self.translation_step > 0
                                   and self.translation_max >= self.translation_min):
            raise ParameterError("invalid translation range")
        if self.rotations < 1:
            raise ParameterError("rotations must be >= 1")

    def translation_targets(self):
        if not self.translate:
            return None
        n = int(round((self.translation_max - self.translation_min) / self.translation_step)) + 1
        ax = self.translation_min + self.translation_step * np.arange(n)
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([X.ravel(), Y.ravel()], axis=1)

    def angles(self):
        return 2.0 * math.pi * np.arange(self.rotations) / self.rotations

    @property
    def size(self):
        t = 1 if not self.translate else len(self.translation_targets())
        return t * (2 if self.mirror else 1) * self.rotations

    @classmethod
    def identity(cls, **kw):
        return cls(translate=False, mirror=False, rotations=1, **kw)


@dataclass
class TransitionBatch:
    """Transitions as arrays; ``start`` is the start point relative to the goal (chords)."""
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s2: np.ndarray
    done: np.ndarray
    start: np.ndarray
    goal: np.ndarray

    def __len__(self):
        return len(self.s)

    @classmethod
    def single(cls, s, a, r, s2, done, start, goal):
        return cls(np.atleast_2d(np.asarray(s, float)), np.atleast_2d(np.asarray(a, float)),
                   np.atleast_1d(np.asarray(r, float)), np.atleast_2d(np.asarray(s2, float)),
                   np.atleast_1d(np.asarray(done, float)), np.atleast_2d(np.asarray(start, float)),
                   np.atleast_2d(np.asarray(goal, float)))

    def take(self, idx):
        return TransitionBatch(*(getattr(self, f)[idx] for f in
                                 ("s", "a", "r", "s2", "done", "start", "goal")))

    @staticmethod
    def concat(batches):
        fields = ("s", "a", "r", "s2", "done", "start", "goal")
        return TransitionBatch(*(np.concatenate([getattr(b, f) for b in batches]) for f in fields))


def _rescore(t: TransitionBatch, scaling: ObsScaling, grid: ReproductionGrid | None):
    r = reward_from_obs(t.s2, scaling)
    done = t.done
    if grid is not None:
        pos2 = t.goal + t.s2[:, [IX, IY]] * scaling.position
        done = (~_inside(pos2, grid)).astype(float)
    return TransitionBatch(t.s, t.a, np.atleast_1d(r), t.s2, done, t.start, t.goal)


def _inside(pos, grid: ReproductionGrid):
    lo, hi = np.asarray(grid.domain_min), np.asarray(grid.domain_max)
    return np.all((pos >= lo) & (pos <= hi), axis=1)


def translate_obs(obs, shift, scaling: ObsScaling):
    out = np.array(obs, dtype=float, copy=True)
    out[..., [IX, IY]] += np.asarray(shift) / scaling.position
    return out


def mirror_obs(obs, start, scaling: ObsScaling):
    """Reflect about the vertical line through the start point."""
    out = np.array(obs, dtype=float, copy=True)
    xs = np.asarray(start)[..., 0] / scaling.position
    out[..., IX] = 2.0 * xs - out[..., IX]
    for i in (ISIN, IU, IW, IUA, IXL, IK, IFX):
        out[..., i] = -out[..., i]
    return out


def _rot(vec_x, vec_y, c, s):
    return c * vec_x - s * vec_y, s * vec_x + c * vec_y


def rotate_obs(obs, start, theta, scaling: ObsScaling):
    """Rotate positions about the start, and velocities, gravity and pitch, by ``theta``."""
    out = np.array(obs, dtype=float, copy=True)
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    st = np.asarray(start) / scaling.position
    dx = out[..., IX] - st[..., 0]
    dy = out[..., IY] - st[..., 1]
    rx, ry = _rot(dx, dy, c, s)
    out[..., IX] = st[..., 0] + rx
    out[..., IY] = st[..., 1] + ry
    for i, j in ((IU, IV), (IUA, IVA), (IFX, IFY)):
        out[..., i], out[..., j] = _rot(out[..., i], out[..., j], c, s)
    sn, cs = out[..., ISIN].copy(), out[..., ICOS].copy()
    out[..., ISIN] = sn * c + cs * s
    out[..., ICOS] = cs * c - sn * s
    return out


def translate_transition(t: TransitionBatch, x_t, y_t, scaling: ObsScaling,
                         grid: ReproductionGrid | None = None) -> TransitionBatch:
    shift = np.array([x_t, y_t], dtype=float)
    out = TransitionBatch(translate_obs(t.s, shift, scaling), t.a.copy(), t.r.copy(),
                          translate_obs(t.s2, shift, scaling), t.done.copy(),
                          t.start + shift, t.goal.copy())
    return _rescore(out, scaling, grid)


def mirror_transition(t: TransitionBatch, scaling: ObsScaling,
                      grid: ReproductionGrid | None = None) -> TransitionBatch:
    out = TransitionBatch(mirror_obs(t.s, t.start, scaling), t.a.copy(), t.r.copy(),
                          mirror_obs(t.s2, t.start, scaling), t.done.copy(), t.start.copy(),
                          t.goal.copy())
    return _rescore(out, scaling, grid)


def rotate_transition(t: TransitionBatch, theta, scaling: ObsScaling,
                      grid: ReproductionGrid | None = None) -> TransitionBatch:
    out = TransitionBatch(rotate_obs(t.s, t.start, theta, scaling), t.a.copy(), t.r.copy(),
                          rotate_obs(t.s2, t.start, theta, scaling), t.done.copy(),
                          t.start.copy(), t.goal.copy())
    return _rescore(out, scaling, grid)


def reproduce_all(t: TransitionBatch, grid: ReproductionGrid, scaling: ObsScaling,
                  filter_domain=True) -> TransitionBatch:
    """All replicas (translation x mirror x rotation) of every transition in ``t``.

    Replica order: translation target, then mirror flag, then rotation angle.
    """
    out = []
    targets = grid.translation_targets()
    angles = grid.angles()
    mirrors = (False, True) if grid.mirror else (False,)
    for i in range(len(t)):
        one = t.take(slice(i, i + 1))
        shifts = np.zeros((1, 2)) if targets is None else targets - one.start[0]
        nt, nm, nr = len(shifts), len(mirrors), len(angles)
        n = nt * nm * nr
        shift = np.repeat(shifts, nm * nr, axis=0)
        mir = np.tile(np.repeat(np.array(mirrors), nr), nt)
        ang = np.tile(angles, nt * nm)
        start = one.start + shift
        s = translate_obs(np.repeat(one.s, n, axis=0), shift, scaling)
        s2 = translate_obs(np.repeat(one.s2, n, axis=0), shift, scaling)
        if mir.any():
            s[mir] = mirror_obs(s[mir], start[mir], scaling)
            s2[mir] = mirror_obs(s2[mir], start[mir], scaling)
        s = rotate_obs(s, start, ang, scaling)
        s2 = rotate_obs(s2, start, ang, scaling)
        rep = TransitionBatch(s, np.repeat(one.a, n, axis=0), np.repeat(one.r, n),
                              s2, np.repeat(one.done, n), start, np.repeat(one.goal, n, axis=0))
        rep = _rescore(rep, scaling, grid if filter_domain else None)
        if filter_domain:
            pos = rep.goal + rep.s[:, [IX, IY]] * scaling.position
            rep = rep.take(np.nonzero(_inside(pos, grid))[0])
        out.append(rep)
    return TransitionBatch.concat(out)
