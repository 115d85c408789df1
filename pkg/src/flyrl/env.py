"""Reinforcement-learning environment around the coupled flyer simulation.

One environment step is one stroke: the encoded action sets the amplitude,
pitch amplitude and frequency of the next stroke, the stroke sign alternates,
and the coupled solver advances the flyer through it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (ConfigError, CouplingDivergenceError, FlyrlError, GeometryError,
                     ParameterError, SolverError, StabilityError, TimeStepError)
from .flow import BoundarySpec, EdgeBC, probe_velocity
from .fsi import CoupledState, FlyerSimulation, FSIConfig, StepRecord
from .grid import Grid, GridSpec
from .observation import (ActionBounds, ObsScaling, compute_reward, decode_action,
                          raw_observation)
from .reproduce import TransitionBatch
from .scales import NondimGroups
from .structures import BodyLoad, BodyState, StrokeSpec


# ----------------------------------------------------------------------------
# scenarios
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryScenario:
    kind: str = "quiescent"         # quiescent | uniform | pulsatile
    speed: float = 0.0              # uniform: U_r units
    direction: float = 0.0          # uniform: radians from +x
    u_lm: float = 0.59
    v_bm: float = 0.29
    f_l: float = 0.01
    f_b: float = 0.015
    t_i: float = 40.0

    def __post_init__(self):
        if self.kind not in ("quiescent", "uniform", "pulsatile"):
            raise ParameterError(f"unknown boundary scenario {self.kind!r}")
        if self.t_i <= 0:
            raise ParameterError("ramp time t_i must be positive")
        if self.speed < 0:
            raise ParameterError("uniform speed must be non-negative")

    def velocity(self):
        return self.speed * np.array([math.cos(self.direction), math.sin(self.direction)])


_INWARD = {"left": (1.0, 0.0), "right": (-1.0, 0.0), "bottom": (0.0, 1.0), "top": (0.0, -1.0)}


def boundary_profile(t, scenario: BoundaryScenario, domain_min, domain_max) -> BoundarySpec:
    """Boundary conditions at time ``t`` (kinematic time units)."""
    if t < 0:
        raise ParameterError("time must be non-negative")
    if scenario.kind == "quiescent" or (scenario.kind == "uniform" and scenario.speed == 0):
        return BoundarySpec.quiescent()
    if scenario.kind == "uniform":
        vel = scenario.velocity()
        edges = {}
        for name, n in _INWARD.items():
            if vel @ np.array(n) > 1e-12:
                edges[name] = EdgeBC("velocity", _const(vel))
        return BoundarySpec(**edges)
    x0, y0 = -domain_min[0], -domain_min[1]
    lx, ly = domain_max[0] - domain_min[0], domain_max[1] - domain_min[1]
    ramp = min(max(t / scenario.t_i, 0.0), 1.0)
    tt = max(t, scenario.t_i)
    sl = math.sin(2 * math.pi * scenario.f_l * (tt - scenario.t_i))
    sb = math.sin(2 * math.pi * scenario.f_b * (tt - scenario.t_i))
    ulm, vbm = scenario.u_lm * ramp, scenario.v_bm * ramp

    def left(x, y):
        u = ulm * (1.0 - 0.5 * sl * (np.cos(2 * np.pi * (y + y0) / ly) - 1.0))
        return u, np.zeros_like(u)

    def vb(x):
        return vbm * (1.0 - 0.5 * sb * (np.cos(2 * np.pi * (x + x0) / lx) - 1.0))

    def bottom(x, y):
        v = vb(x)
        return np.zeros_like(v), v

    def top(x, y):
        v = -vb(x)
        return np.zeros_like(v), v

    return BoundarySpec(left=EdgeBC("velocity", left), bottom=EdgeBC("velocity", bottom),
                        top=EdgeBC("velocity", top), right=EdgeBC())


def _const(vel):
    def prof(x, y):
        return np.full(np.shape(x), vel[0]), np.full(np.shape(x), vel[1])
    return prof


# ----------------------------------------------------------------------------
# disturbances and missions
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Trigger:
    """Fires at a time, or when the flyer crosses ``axis = value`` (either direction)."""
    time: float | None = None
    axis: str | None = None
    value: float = 0.0

    def __post_init__(self):
        if (self.time is None) == (self.axis is None):
            raise ParameterError("trigger needs exactly one of time or axis")
        if self.axis is not None and self.axis not in ("x", "y"):
            raise ParameterError("trigger axis must be 'x' or 'y'")

    def fired(self, t, prev_pos, pos):
        if self.time is not None:
            return t >= self.time - 1e-12
        i = 0 if self.axis == "x" else 1
        a, b = prev_pos[i] - self.value, pos[i] - self.value
        return a == 0 or b == 0 or (a < 0) != (b < 0)


@dataclass(frozen=True)
class DisturbanceEntry:
    kind: str                   # "force" or "moment"
    trigger: Trigger
    multiple: float = 300.0
    duration: float = 0.4

    def __post_init__(self):
        if self.kind not in ("force", "moment"):
            raise ParameterError("disturbance kind must be 'force' or 'moment'")
        if self.duration <= 0:
            raise ParameterError("disturbance duration must be positive")

    @classmethod
    def force_pulse(cls, trigger, multiple=300.0, duration=0.4):
        return cls("force", trigger, multiple, duration)

    @classmethod
    def moment_pulse(cls, trigger, multiple=62.5, duration=2.0):
        return cls("moment", trigger, multiple, duration)


@dataclass(frozen=True)
class MissionLeg:
    goal: tuple
    trigger: Trigger | None = None      # None: active from the start


class DisturbanceSchedule:
    """Tracks trigger state and returns the active pulse load at any time."""

    def __init__(self, entries, weight, ref_moment):
        self.entries = list(entries)
        self.weight = weight
        self.ref_moment = ref_moment
        self.active = {}          # index -> start time
        self.done = set()
        _check_overlap(self.entries)

    def update(self, t, prev_pos, pos):
        for i, e in enumerate(self.entries):
            if i in self.done or i in self.active:
                continue
            if e.trigger.fired(t, prev_pos, pos):
                for j, t0 in self.active.items():
                    if self.entries[j].kind == e.kind and t < t0 + self.entries[j].duration:
                        raise ConfigError(f"overlapping {e.kind} pulses (entries {j} and {i})")
                self.active[i] = t if e.trigger.time is None else e.trigger.time
        for i, t0 in list(self.active.items()):
            if t > t0 + self.entries[i].duration + 1e-12:
                del self.active[i]
                self.done.add(i)

    def load(self, t):
        f = np.zeros(2)
        m = 0.0
        for i, t0 in self.active.items():
            e = self.entries[i]
            if t0 <= t <= t0 + e.duration + 1e-12:
                if e.kind == "force":
                    f = f + np.array([0.0, -e.multiple * self.weight])
                else:
                    m += e.multiple * self.ref_moment
        return BodyLoad(f, m)

    def flags(self, t):
        kinds = {self.entries[i].kind for i, t0 in self.active.items()
                 if t0 <= t <= t0 + self.entries[i].duration + 1e-12}
        return int("force" in kinds), int("moment" in kinds)


def _check_overlap(entries):
    timed = [e for e in entries if e.trigger.time is not None]
    for i, a in enumerate(timed):
        for b in timed[i + 1:]:
            if a.kind == b.kind:
                lo, hi = sorted([(a.trigger.time, a.duration), (b.trigger.time, b.duration)])
                if hi[0] < lo[0] + lo[1]:
                    raise ConfigError(f"overlapping {a.kind} pulses at t={lo[0]} and t={hi[0]}")


# ----------------------------------------------------------------------------
# environment
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class EnvConfig:
    goal: tuple = (0.0, 0.0)
    start: tuple = (-120.0, 120.0)
    start_theta: float = 0.0
    boundary: BoundaryScenario = BoundaryScenario()
    hover_distance: float = 5.0
    hover_duration: float = 400.0
    episode_cap: int = 3
    max_strokes: int = 2000             # per episode
    sensed_velocity: str = "antenna"    # antenna | boundary
    disturbances: tuple = ()
    mission: tuple = ()
    ref_moment: float = 1.0             # reference stability-test moment (placeholder)
    reward_length: float = 1000.0
    scaling: ObsScaling = ObsScaling()
    action: ActionBounds = ActionBounds()

    def __post_init__(self):
        if self.hover_distance <= 0 or self.hover_duration <= 0:
            raise ParameterError("hover thresholds must be positive")
        if self.episode_cap < 1 or self.max_strokes < 1:
            raise ParameterError("episode cap and stroke budget must be >= 1")
        if self.sensed_velocity not in ("antenna", "boundary"):
            raise ParameterError("sensed_velocity must be 'antenna' or 'boundary'")

    def check_domain(self, lo, hi):
        for name, p in (("goal", self.goal), ("start", self.start)):
            if not (lo[0] <= p[0] <= hi[0] and lo[1] <= p[1] <= hi[1]):
                raise ParameterError(f"{name} {p} lies outside the domain")
        for leg in self.mission:
            g = leg.goal
            if not (lo[0] <= g[0] <= hi[0] and lo[1] <= g[1] <= hi[1]):
                raise ParameterError(f"mission goal {g} lies outside the domain")


@dataclass
class StepResult:
    transition: TransitionBatch
    obs: np.ndarray
    reward: float
    done: bool
    fell: bool
    success: bool
    rows: list


TRAJ_COLUMNS = ("t", "x_b", "y_b", "theta_b", "u", "v", "omega", "x_l", "alpha_l",
                "F_x", "F_y", "M", "reward", "A_x", "A_alpha", "f", "u_a", "v_a",
                "goal_x", "goal_y", "force_pulse", "moment_pulse")


_FSI_FAILURES = (CouplingDivergenceError, StabilityError, SolverError, GeometryError,
                 TimeStepError)


class FlyerEnv:
    """Single flyer in one flow condition."""

    def __init__(self, cfg: EnvConfig, groups: NondimGroups, grid_spec: GridSpec = GridSpec(),
                 fsi: FSIConfig = FSIConfig(), sim: FlyerSimulation | None = None):
        self.cfg = cfg
        self.groups = groups
        self.grid = sim.grid if sim is not None else Grid(grid_spec)
        lo, hi = self.grid.bounds[0::2], self.grid.bounds[1::2]
        self.domain_min, self.domain_max = lo, hi
        cfg.check_domain(lo, hi)
        self.sim = sim or FlyerSimulation(self.grid, groups, fsi)
        self.scaling = cfg.scaling
        self.episode = 0
        self.state: CoupledState | None = None

    # -- helpers ---------------------------------------------------------------
    def boundary(self, t):
        return boundary_profile(t, self.cfg.boundary, self.domain_min, self.domain_max)

    def _goal_at(self, t, prev_pos, pos):
        for leg in self._pending_legs:
            if leg.trigger is None or leg.trigger.fired(t, prev_pos, pos):
                self.goal = np.asarray(leg.goal, dtype=float)
                self._pending_legs.remove(leg)
                break

    def sensed(self, state: CoupledState):
        head = state.body.head_at(self.groups.body_length / 2)
        if self.cfg.sensed_velocity == "boundary":
            bc = self.boundary(state.time)
            e = bc.left if bc.left.kind == "velocity" else None
            if e is None:
                for name in ("bottom", "top", "right"):
                    if bc.edge(name).kind == "velocity":
                        e = bc.edge(name)
                        break
            if e is None:
                return np.zeros(2)
            u, v = e.profile(np.array([head[0]]), np.array([head[1]]))
            return np.array([float(u[0]), float(v[0])])
        if not self.grid.contains(head):
            return np.zeros(2)
        return probe_velocity(self.grid, state.flow, head)

    def raw_obs(self, state: CoupledState):
        b = state.body
        g = self.groups
        fs = g.flow_scale
        return raw_observation(b.position - self.goal, b.theta, b.velocity / fs,
                               b.omega * g.omega_to_ref, self.sensed(state), state.le_x,
                               state.stroke_sign, g.weight * b.gravity_dir)

    def observe(self, state=None):
        return self.scaling.normalize(self.raw_obs(state or self.state))

    @property
    def start_rel(self):
        return np.asarray(self.cfg.start, dtype=float) - np.asarray(self.cfg.goal, dtype=float)

    # -- episode ----------------------------------------------------------------
    def reset(self, gravity_dir=(0.0, -1.0)):
        cfg = self.cfg
        self.episode += 1
        body = BodyState(np.asarray(cfg.start, float), cfg.start_theta, np.zeros(2), 0.0,
                         np.asarray(gravity_dir, float))
        self.state = self.sim.initial_state(body, le_x=0.0, stroke_sign=1)
        self.goal = np.asarray(cfg.goal, dtype=float)
        self._pending_legs = list(cfg.mission)
        self._goal_at(0.0, body.position, body.position)
        self.schedule = DisturbanceSchedule(cfg.disturbances, self.groups.weight, cfg.ref_moment)
        self.hover_clock = 0.0
        self.success = False
        self.strokes = 0
        return self.observe()

    def step(self, action) -> StepResult:
        if self.state is None:
            raise FlyrlError("call reset() before step()")
        st = self.state
        s = self.observe()
        amp, pitch, freq = decode_action(action, self.cfg.action)
        spec = StrokeSpec(float(amp), float(pitch), float(freq), st.stroke_sign, st.time, st.le_x)
        prev = {"pos": st.body.position.copy()}
        rows = []
        sched = self.schedule

        def disturbance(t, body):
            return sched.load(t)

        def on_step(state, rec: StepRecord):
            sched.update(rec.t, prev["pos"], rec.position)
            self._goal_at(rec.t, prev["pos"], rec.position)
            dist = float(np.hypot(*(rec.position - self.goal)))
            if dist < self.cfg.hover_distance:
                self.hover_clock += rec.t - prev.get("t", spec.start_time)
            else:
                self.hover_clock = 0.0
            if self.hover_clock >= self.cfg.hover_duration - 1e-9:
                self.success = True
            prev["pos"] = rec.position.copy()
            prev["t"] = rec.t
            fp, mp = sched.flags(rec.t)
            ua = self.sensed(state)
            rows.append([rec.t, rec.position[0], rec.position[1], rec.theta,
                         rec.velocity[0] / self.groups.flow_scale,
                         rec.velocity[1] / self.groups.flow_scale,
                         rec.omega * self.groups.omega_to_ref, rec.x_l, rec.alpha_l,
                         rec.force[0], rec.force[1], rec.moment, np.nan,
                         amp, pitch, freq, ua[0], ua[1], self.goal[0], self.goal[1], fp, mp])

        try:
            st, log, exited = self.sim.run_stroke(st, spec, disturbance, self.boundary, on_step)
        except _FSI_FAILURES:
            # a numerical failure ends the episode as a failure, not the run
            exited = True
        self.state = st
        self.strokes += 1
        s2 = self.observe()
        raw2 = self.raw_obs(st)
        dist = float(np.hypot(raw2[0], raw2[1]))
        r = compute_reward(dist, raw2[6], self.cfg.reward_length)
        for row in rows:
            row[12] = r
        fell = bool(exited)
        done = fell or self.success or self.strokes >= self.cfg.max_strokes
        tb = TransitionBatch.single(s, action, r, s2, float(fell), self.start_rel, self.goal)
        return StepResult(tb, s2, r, done, fell, self.success, rows)

    def distance(self):
        return float(np.hypot(*(self.state.body.position - self.goal)))
