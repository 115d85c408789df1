"""Fluid-free stand-in for the flyer, for checking the learning loop cheaply.

The body is a rigid point with pitch.  A stroke produces a mean force whose
size follows the stroke speed squared and whose split between lift (along
the body axis) and a sideways push follows the pitch amplitude, applied at
the mean leading-edge position so off-centre strokes pitch the body.  This is
an actuator map, not an aerodynamic model: it shares the flyer's observation,
action, reward and symmetries (translation, mirroring, rotation together with
gravity), so reproduced transitions are exact for it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import StepResult
from .errors import FlyrlError, ParameterError
from .observation import ObsScaling, compute_reward, decode_action, raw_observation
from .reproduce import TransitionBatch
from .structures import AMPLITUDE_MAX, FREQ_RANGE, X_RANGE


@dataclass(frozen=True)
class PointMassConfig:
    goal: tuple = (0.0, 0.0)
    start: tuple = (-30.0, 30.0)
    gravity: float = 4.0            # chords / t^2
    lift_ratio: float = 3.0         # strongest lift / weight
    side_ratio: float = 0.5         # strongest sideways push / weight
    drag: float = 0.2               # linear velocity damping, 1/t
    torque_gain: float = 0.25       # angular acceleration per (lever * lift accel)
    spin_damping: float = 1.0
    substeps: int = 20
    episode_strokes: int = 60
    domain_min: tuple = (-1000.0, -1000.0)
    domain_max: tuple = (1000.0, 1000.0)
    omega_to_ref: float = 1.0
    scaling: ObsScaling = ObsScaling(position=100.0, velocity=10.0, omega=2.0, force=1.0)
    reward_length: float = 1000.0

    def __post_init__(self):
        for k in ("gravity", "lift_ratio", "drag", "substeps", "episode_strokes"):
            if not getattr(self, k) > 0:
                raise ParameterError(f"{k} must be positive")


class PointMassEnv:
    def __init__(self, cfg: PointMassConfig = PointMassConfig()):
        self.cfg = cfg
        self.scaling = cfg.scaling
        self.state = None
        self.episode = 0
        self._lift_gain = cfg.lift_ratio * cfg.gravity / (AMPLITUDE_MAX * FREQ_RANGE[1]) ** 2
        self._side_gain = cfg.side_ratio * cfg.gravity / (AMPLITUDE_MAX * FREQ_RANGE[1]) ** 2

    @property
    def start_rel(self):
        return np.asarray(self.cfg.start, float) - np.asarray(self.cfg.goal, float)

    def reset(self, gravity_dir=(0.0, -1.0)):
        self.episode += 1
        self.goal = np.asarray(self.cfg.goal, float)
        self.state = dict(pos=np.asarray(self.cfg.start, float), vel=np.zeros(2), theta=0.0,
                          omega=0.0, x_l=0.0, k=1, gdir=np.asarray(gravity_dir, float), t=0.0)
        self.strokes = 0
        return self.observe()

    def raw_obs(self):
        s = self.state
        return raw_observation(s["pos"] - self.goal, s["theta"], s["vel"],
                               s["omega"] * self.cfg.omega_to_ref, (0.0, 0.0), s["x_l"], s["k"],
                               s["gdir"])

    def observe(self):
        return self.scaling.normalize(self.raw_obs())

    def distance(self):
        return float(np.hypot(*(self.state["pos"] - self.goal)))

    def inside(self):
        p = self.state["pos"]
        lo, hi = self.cfg.domain_min, self.cfg.domain_max
        return lo[0] <= p[0] <= hi[0] and lo[1] <= p[1] <= hi[1]

    def step(self, action) -> StepResult:
        if self.state is None:
            raise FlyrlError("call reset() before step()")
        c, st = self.cfg, self.state
        s = self.observe()
        amp, pitch, freq = decode_action(action)
        k = st["k"]
        end = float(np.clip(st["x_l"] + k * amp, -X_RANGE, X_RANGE))
        lever = 0.5 * (st["x_l"] + end)
        speed2 = (abs(end - st["x_l"]) * freq) ** 2
        lift = self._lift_gain * speed2 * math.sin(2 * pitch)
        side = -k * self._side_gain * speed2 * math.cos(2 * pitch)
        duration = 1.0 / (2.0 * freq)
        h = duration / c.substeps
        pos, vel, th, om = st["pos"].copy(), st["vel"].copy(), st["theta"], st["omega"]
        g = c.gravity * st["gdir"]
        rows = []
        fell = False
        for _ in range(c.substeps):
            up = np.array([-math.sin(th), math.cos(th)])
            ax = np.array([math.cos(th), math.sin(th)])
            acc = lift * up + side * ax + g - c.drag * vel
            alpha = c.torque_gain * lever * lift - c.spin_damping * om
            vel = vel + h * acc
            pos = pos + h * vel
            om = om + h * alpha
            th = th + h * om
            st["t"] += h
            f = lift * up + side * ax
            rows.append([st["t"], pos[0], pos[1], th, vel[0], vel[1], om * c.omega_to_ref,
                         st["x_l"], 0.0, f[0], f[1], c.torque_gain * lever * lift, 0.0,
                         amp, pitch, freq, 0.0, 0.0, self.goal[0], self.goal[1], 0, 0])
            lo, hi = c.domain_min, c.domain_max
            if not (lo[0] <= pos[0] <= hi[0] and lo[1] <= pos[1] <= hi[1]):
                fell = True
                break
        st.update(pos=pos, vel=vel, theta=th, omega=om, x_l=end, k=-k)
        self.strokes += 1
        s2 = self.observe()
        raw2 = self.raw_obs()
        r = compute_reward(float(np.hypot(raw2[0], raw2[1])), raw2[6], c.reward_length)
        for row in rows:
            row[12] = r
        done = fell or self.strokes >= c.episode_strokes
        tb = TransitionBatch.single(s, action, r, s2, float(fell), self.start_rel, self.goal)
        return StepResult(tb, s2, r, done, fell, False, rows)
