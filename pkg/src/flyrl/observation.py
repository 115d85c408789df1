"""Observation layout, normalization, reward and action coding.

Raw observation (13 components)::

    x_r, y_r          flyer position relative to the goal        [chords]
    sin th, cos th    body pitch
    u, v              body velocity                               [U_r]
    omega             body angular velocity                       [pi f_r / 3]
    u_a, v_a          sensed flow velocity                        [U_r]
    x_l               body-frame leading-edge position            [chords]
    k                 sign of the next stroke
    F_bx, F_by        gravity force vector as currently oriented  [body-equation units]
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .structures import AMPLITUDE_MAX, FREQ_RANGE, PITCH_MAX, X_RANGE

OBS_NAMES = ("x_r", "y_r", "sin_theta", "cos_theta", "u", "v", "omega", "u_a", "v_a",
             "x_l", "k", "F_bx", "F_by")
IX, IY, ISIN, ICOS, IU, IV, IW, IUA, IVA, IXL, IK, IFX, IFY = range(13)

REWARD_LENGTH = 1000.0

ACTION_LOW = np.array([0.0, 0.0, FREQ_RANGE[0]])
ACTION_HIGH = np.array([AMPLITUDE_MAX, PITCH_MAX, FREQ_RANGE[1]])


@dataclass(frozen=True)
class ObsScaling:
    position: float = 1000.0
    velocity: float = 2.0
    omega: float = 2.0
    force: float = 197.5 * 0.08175     # m_bw Fr, so the gravity entry is i_g
    x_l: float = X_RANGE

    def __post_init__(self):
        for k in ("position", "velocity", "omega", "force", "x_l"):
            if not getattr(self, k) > 0:
                raise ParameterError(f"observation scale {k} must be positive")

    @classmethod
    def for_groups(cls, groups, **kw):
        return cls(force=groups.mass_ratio * groups.froude, **kw)

    @property
    def vector(self):
        p, v, w, f = self.position, self.velocity, self.omega, self.force
        return np.array([p, p, 1.0, 1.0, v, v, w, v, v, self.x_l, 1.0, f, f])

    def normalize(self, raw):
        return np.asarray(raw, dtype=float) / self.vector

    def denormalize(self, obs):
        return np.asarray(obs, dtype=float) * self.vector


def compute_reward(distance, omega, length=REWARD_LENGTH):
    """``-sqrt(L / L0) - omega^2`` with ``omega`` in reference units."""
    distance = np.asarray(distance, dtype=float)
    if np.any(distance < 0):
        raise ParameterError("distance must be non-negative")
    r = -np.sqrt(distance / length) - np.asarray(omega, dtype=float) ** 2
    return float(r) if np.ndim(r) == 0 else r


def reward_from_obs(obs, scaling: ObsScaling, length=REWARD_LENGTH):
    """Reward of (normalized) observations, evaluated from their own components."""
    obs = np.asarray(obs, dtype=float)
    pos = obs[..., [IX, IY]] * scaling.position
    dist = np.hypot(pos[..., 0], pos[..., 1])
    return compute_reward(dist, obs[..., IW] * scaling.omega, length)


@dataclass(frozen=True)
class ActionBounds:
    """Physical action ranges; may narrow, never widen, the flyer's limits."""
    amplitude: tuple = (0.0, AMPLITUDE_MAX)
    pitch: tuple = (0.0, PITCH_MAX)
    frequency: tuple = FREQ_RANGE

    def __post_init__(self):
        for name, lo_max, hi_max in (("amplitude", 0.0, AMPLITUDE_MAX), ("pitch", 0.0, PITCH_MAX),
                                     ("frequency", FREQ_RANGE[0], FREQ_RANGE[1])):
            lo, hi = getattr(self, name)
            if not (lo_max - 1e-12 <= lo < hi <= hi_max + 1e-12):
                raise ParameterError(f"{name} range [{lo}, {hi}] must lie inside "
                                     f"[{lo_max}, {hi_max}] with low < high")

    @property
    def low(self):
        return np.array([self.amplitude[0], self.pitch[0], self.frequency[0]])

    @property
    def high(self):
        return np.array([self.amplitude[1], self.pitch[1], self.frequency[1]])


DEFAULT_BOUNDS = ActionBounds()


def decode_action(a, bounds: ActionBounds = DEFAULT_BOUNDS):
    """Encoded ``[-1, 1]^3`` -> (A_x, A_alpha, f)."""
    a = np.asarray(a, dtype=float)
    if np.any(np.abs(a) > 1 + 1e-12):
        raise ParameterError("encoded action components must lie in [-1, 1]")
    lo, hi = bounds.low, bounds.high
    return lo + 0.5 * (np.clip(a, -1, 1) + 1.0) * (hi - lo)


def encode_action(phys, bounds: ActionBounds = DEFAULT_BOUNDS):
    phys = np.asarray(phys, dtype=float)
    lo, hi = bounds.low, bounds.high
    return 2.0 * (phys - lo) / (hi - lo) - 1.0


def raw_observation(rel_pos, theta, velocity, omega, sensed, x_l, k, gravity_force):
    return np.array([rel_pos[0], rel_pos[1], math.sin(theta), math.cos(theta),
                     velocity[0], velocity[1], omega, sensed[0], sensed[1], x_l, float(k),
                     gravity_force[0], gravity_force[1]])
