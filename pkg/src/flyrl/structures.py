"""Leading-edge kinematics, the flexible wing and the rigid flyer body.

Everything is non-dimensional: length in chords, time in ``1 / (2 f_r)``,
forces in ``4 rho_f c^4 f_r^2``.  Body-frame coordinates use ``x`` across
the stroke plane and ``y`` along the body axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ParameterError, StabilityError

X_RANGE = 2.7            # |x_l| bound of the leading edge in the body frame
AMPLITUDE_MAX = 5.4
PITCH_MAX = math.pi / 4
FREQ_RANGE = (0.5, 1.5)


def rot(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class StrokeSpec:
    amplitude: float            # A of x_l, chords
    pitch_amplitude: float      # A of alpha_l, rad
    frequency: float
    sign: int                   # +1 upstroke, -1 downstroke
    start_time: float = 0.0
    start_position: float = 0.0

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ParameterError("stroke sign must be +1 or -1")
        if not 0.0 <= self.amplitude <= AMPLITUDE_MAX + 1e-12:
            raise ParameterError(f"amplitude {self.amplitude} outside [0, {AMPLITUDE_MAX}]")
        if not 0.0 <= self.pitch_amplitude <= PITCH_MAX + 1e-12:
            raise ParameterError(f"pitch amplitude {self.pitch_amplitude} outside [0, pi/4]")
        if not FREQ_RANGE[0] - 1e-12 <= self.frequency <= FREQ_RANGE[1] + 1e-12:
            raise ParameterError(f"frequency {self.frequency} outside {FREQ_RANGE}")
        if abs(self.start_position) > X_RANGE + 1e-12:
            raise ParameterError(f"start position {self.start_position} outside +-{X_RANGE}")
        # keep the end of the stroke inside the allowed range
        end = self.start_position + self.sign * self.amplitude
        if abs(end) > X_RANGE:
            clipped = abs(self.sign * X_RANGE - self.start_position)
            object.__setattr__(self, "amplitude", float(clipped))

    @property
    def duration(self):
        return 1.0 / (2.0 * self.frequency)

    @property
    def end_time(self):
        return self.start_time + self.duration

    @property
    def end_position(self):
        return self.start_position + self.sign * self.amplitude


@dataclass(frozen=True)
class LeadingEdge:
    x: float
    alpha: float
    dx: float
    dalpha: float
    ddx: float = 0.0
    ddalpha: float = 0.0


def leading_edge_state(t, spec: StrokeSpec, tol=1e-9) -> LeadingEdge:
    """Body-frame leading-edge position and pitch; ``t`` may be an array."""
    tau = np.asarray(t, dtype=float) - spec.start_time
    if np.any(tau < -tol) or np.any(tau > spec.duration + tol):
        raise ParameterError(f"t={t} outside stroke window [{spec.start_time}, {spec.end_time}]")
    k, A, Aa, f = spec.sign, spec.amplitude, spec.pitch_amplitude, spec.frequency
    w = 2.0 * math.pi * f
    c, s = np.cos(w * tau), np.sin(w * tau)
    out = LeadingEdge(
        x=spec.start_position - k * (A / 2) * (c - 1.0),
        alpha=-math.pi / 2 - k * Aa * s,
        dx=k * (A / 2) * w * s,
        dalpha=-k * Aa * w * c,
        ddx=k * (A / 2) * w * w * c,
        ddalpha=k * Aa * w * w * s,
    )
    if out.x.ndim == 0:
        out = LeadingEdge(*(float(v) for v in (out.x, out.alpha, out.dx, out.dalpha,
                                               out.ddx, out.ddalpha)))
    return out


# ----------------------------------------------------------------------------
# body
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class BodyState:
    position: np.ndarray
    theta: float
    velocity: np.ndarray
    omega: float
    gravity_dir: np.ndarray = field(default_factory=lambda: np.array([0.0, -1.0]))
    accel: np.ndarray | None = None     # last linear acceleration, for the Verlet update
    alpha: float | None = None          # last angular acceleration

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float))
        g = np.asarray(self.gravity_dir, dtype=float)
        if abs(np.hypot(*g) - 1.0) > 1e-9:
            raise ParameterError("gravity direction must be a unit vector")
        object.__setattr__(self, "gravity_dir", g)
        vals = np.concatenate([self.position, self.velocity, [self.theta, self.omega]])
        if not np.all(np.isfinite(vals)):
            raise ParameterError("body state must be finite")

    def to_world(self, local):
        """World coordinates of body-frame points ``local``."""
        return self.position + np.asarray(local) @ rot(self.theta).T

    def point_velocity(self, world_point):
        r = np.asarray(world_point) - self.position
        return self.velocity + self.omega * np.stack([-r[..., 1], r[..., 0]], axis=-1)

    def head_at(self, half_length):
        return self.to_world(np.array([0.0, half_length]))


@dataclass(frozen=True)
class BodyLoad:
    force: np.ndarray
    moment: float


def body_acceleration(b: BodyState, load: BodyLoad, groups, extra: BodyLoad | None = None):
    span_mass = groups.span_mass
    f = np.asarray(load.force) / span_mass + groups.mass_ratio * groups.froude * b.gravity_dir
    m = load.moment / span_mass
    if extra is not None:
        f = f + np.asarray(extra.force)
        m = m + extra.moment
    return f / groups.mass_ratio, m / groups.inertia


def body_predict(b: BodyState, dt):
    """Position and pitch at ``t + dt`` (they depend only on step-``n`` data)."""
    a = np.zeros(2) if b.accel is None else b.accel
    al = 0.0 if b.alpha is None else b.alpha
    return (b.position + dt * b.velocity + 0.5 * dt * dt * a,
            b.theta + dt * b.omega + 0.5 * dt * dt * al)


def body_step(b: BodyState, load: BodyLoad, groups, dt, extra: BodyLoad | None = None,
              old_load: BodyLoad | None = None, old_extra: BodyLoad | None = None) -> BodyState:
    """Velocity-Verlet step of the flyer body.

    ``load``/``extra`` act at ``t + dt``.  The step-``n`` acceleration is the
    one stored on ``b``; if absent it is evaluated from ``old_load`` (or from
    ``load`` when no history exists).
    """
    if dt <= 0:
        raise ParameterError("dt must be positive")
    if b.accel is None:
        b = replace(b, accel=None, alpha=None)
        a0, al0 = body_acceleration(b, old_load or load, groups, old_extra if old_load else extra)
        b = replace(b, accel=a0, alpha=al0)
    pos, th = body_predict(b, dt)
    moved = replace(b, position=pos, theta=th)
    a1, al1 = body_acceleration(moved, load, groups, extra)
    vel = b.velocity + 0.5 * dt * (b.accel + a1)
    om = b.omega + 0.5 * dt * (b.alpha + al1)
    return replace(moved, velocity=vel, omega=om, accel=a1, alpha=al1)


# ----------------------------------------------------------------------------
# flexible wing
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Clamp:
    position: np.ndarray
    velocity: np.ndarray
    angle: float
    angular_velocity: float = 0.0

    @property
    def tangent(self):
        return np.array([math.cos(self.angle), math.sin(self.angle)])


def clamp_from_body(body: BodyState, le: LeadingEdge) -> Clamp:
    """World-frame clamp data from the body pose and body-frame kinematics."""
    R = rot(body.theta)
    r = R @ np.array([le.x, 0.0])
    rel_v = R @ np.array([le.dx, 0.0])
    vel = body.velocity + body.omega * np.array([-r[1], r[0]]) + rel_v
    return Clamp(body.position + r, vel, body.theta + le.alpha, body.omega + le.dalpha)


@dataclass(frozen=True)
class ClampPath:
    """Clamp data sampled at a sequence of times (arrays with a leading time axis)."""
    positions: np.ndarray
    velocities: np.ndarray
    angles: np.ndarray

    def tangents(self):
        return np.stack([np.cos(self.angles), np.sin(self.angles)], axis=-1)


def clamp_path(pos, theta, vel, omega, le: LeadingEdge) -> ClampPath:
    """Vectorized ``clamp_from_body`` for body poses and kinematics over time."""
    c, s = np.cos(theta), np.sin(theta)
    r = np.stack([c * le.x, s * le.x], axis=-1)
    rel_v = np.stack([c * le.dx, s * le.dx], axis=-1)
    w = np.asarray(omega)[..., None]
    v = vel + w * np.stack([-r[..., 1], r[..., 0]], axis=-1) + rel_v
    return ClampPath(pos + r, v, theta + le.alpha)


def static_clamp_path(clamp: Clamp):
    """``clamp_at`` callable for a clamp that does not move."""
    def at(taus):
        n = len(taus)
        return ClampPath(np.tile(clamp.position, (n, 1)), np.tile(clamp.velocity, (n, 1)),
                         np.full(n, clamp.angle))
    return at


@dataclass
class WingState:
    positions: np.ndarray       # (N, 2)
    velocities: np.ndarray      # (N, 2)
    ds: float
    accelerations: np.ndarray | None = None

    def __post_init__(self):
        if len(self.positions) < 16:
            raise ParameterError("wing needs at least 16 nodes")

    @property
    def n(self):
        return len(self.positions)

    def copy(self):
        return WingState(self.positions.copy(), self.velocities.copy(), self.ds,
                         None if self.accelerations is None else self.accelerations.copy())

    def arc_length(self):
        return float(np.sum(np.linalg.norm(np.diff(self.positions, axis=0), axis=1)))

    def node_weights(self):
        w = np.full(self.n, self.ds)
        w[0] = w[-1] = 0.5 * self.ds
        return w


def straight_wing(clamp: Clamp, n=33, chord=1.0) -> WingState:
    s = np.linspace(0.0, chord, n)
    pos = clamp.position + s[:, None] * clamp.tangent[None, :]
    t_perp = np.array([-clamp.tangent[1], clamp.tangent[0]])
    vel = clamp.velocity + clamp.angular_velocity * s[:, None] * t_perp[None, :]
    return WingState(pos, vel, chord / (n - 1))


@dataclass(frozen=True)
class WingParams:
    tension: float = 7.4e6
    bending: float = 2.0e4
    density_ratio: float = 1000.0
    thickness: float = 1e-3
    froude: float = 0.08175
    max_substep: float = 8e-5
    damping: float = 0.0             # mass-proportional, only for static tests
    max_speed: float = 1e3

    @classmethod
    def from_groups(cls, groups, **kw):
        return cls(tension=groups.tension, bending=groups.bending,
                   density_ratio=groups.density_ratio, thickness=groups.thickness,
                   froude=groups.froude, **kw)

    def stable_substep(self, ds, safety=0.7):
        """Explicit limit from the highest tension + bending mode of the node chain."""
        w_t = 2.0 * math.sqrt(2.2 * self.tension / self.density_ratio) / ds
        w_b = 4.0 * math.sqrt(self.bending / self.density_ratio) / ds**2
        return min(self.max_substep, safety * 2.0 / math.hypot(w_t, w_b))


def wing_energy_gradient(X, ds, tangent, p: WingParams):
    """Gradient of the discrete tension + bending energy, with the clamp ghost."""
    d = (X[1:] - X[:-1]) * (1.0 / ds)
    strain = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] - 1.0
    ft = (p.tension * strain)[:, None] * d
    kb = p.bending / ds**3
    c = kb * (X[2:] - 2.0 * X[1:-1] + X[:-2])
    grad = np.zeros_like(X)
    grad[1:] += ft
    grad[:-1] -= ft
    grad[2:] += c
    grad[1:-1] -= 2.0 * c
    grad[:-2] += c
    # ghost node behind the clamp; its curvature carries weight 1/2
    c0 = kb * (2.0 * (X[1] - X[0]) - 2.0 * ds * tangent)
    grad[1] += c0
    grad[0] -= c0
    return grad


def wing_energy(X, V, ds, tangent, p: WingParams):
    d = np.diff(X, axis=0) / ds
    strain = np.sum(d * d, axis=1) - 1.0
    e_t = 0.25 * p.tension * np.sum(strain**2) * ds
    c = X[2:] - 2.0 * X[1:-1] + X[:-2]
    c0 = 2.0 * (X[1] - X[0]) - 2.0 * ds * tangent
    e_b = 0.5 * p.bending / ds**3 * (np.sum(c * c) + 0.5 * np.dot(c0, c0))
    m = np.full(len(X), ds)
    m[0] = m[-1] = 0.5 * ds
    e_k = 0.5 * p.density_ratio * np.sum(m[:, None] * V * V)
    return e_k + e_t + e_b


def wing_step(w: WingState, clamp_at, aero, gravity_dir, dt, p: WingParams) -> WingState:
    """Advance the wing by ``dt`` with velocity-Verlet sub-steps.

    ``clamp_at(taus)`` returns a ``ClampPath`` at the relative times ``taus``
    in ``[0, dt]``; ``aero`` is the hydrodynamic force per node (per unit
    span) and is held constant over the step.
    """
    if dt <= 0:
        raise ParameterError("dt must be positive")
    aero = np.asarray(aero, dtype=float)
    if aero.shape != w.positions.shape:
        raise ParameterError("aero force needs one 2-vector per wing node")
    ds = w.ds
    mass = (p.density_ratio * w.node_weights())[:, None]
    ext = aero / p.thickness + mass * p.froude * np.asarray(gravity_dir)[None, :]
    nsub = max(1, int(math.ceil(dt / p.stable_substep(ds) - 1e-9)))
    h = dt / nsub
    path = clamp_at(h * np.arange(nsub + 1))
    tangents = path.tangents()
    X = w.positions.copy()
    V = w.velocities.copy()

    def accel(X, V, k):
        a = (ext - wing_energy_gradient(X, ds, tangents[k], p)) / mass
        if p.damping:
            a -= p.damping * V
        return a

    A = accel(X, V, 0) if w.accelerations is None else w.accelerations
    # a runaway is caught by the speed check below, not by floating point warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, nsub + 1):
            X = X + h * V + (0.5 * h * h) * A
            X[0] = path.positions[k]
            Vh = V + (0.5 * h) * A
            A = accel(X, Vh, k)
            V = Vh + (0.5 * h) * A
            V[0] = path.velocities[k]
    if not np.all(np.isfinite(V)) or np.max(np.abs(V)) > p.max_speed:
        raise StabilityError("wing node speed exceeded the stability bound; reduce the sub-step")
    return WingState(X, V, ds, A)
