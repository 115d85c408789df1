"""Strongly coupled partitioned fluid-structure iteration, stepped stroke by stroke.

Per time step the body pose at ``n + 1`` follows from step-``n`` data alone;
the wing, the body velocity and the flow are then iterated with Aitken
relaxation on the wing state until the wing shape stops changing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import CouplingDivergenceError, GeometryError, ParameterError
from .flow import BoundarySpec, FlowField, FlowSolver, Markers
from .grid import Grid
from .loads import AeroLoad, aero_load
from .scales import NondimGroups
from .structures import (AMPLITUDE_MAX, FREQ_RANGE, PITCH_MAX, BodyLoad, BodyState,
                         body_acceleration,
                         StrokeSpec, WingParams, WingState, body_predict, body_step,
                         clamp_from_body, clamp_path, leading_edge_state, straight_wing, wing_step)

NO_LOAD = BodyLoad(np.zeros(2), 0.0)


@dataclass(frozen=True)
class FSIConfig:
    tol: float = 1e-8
    max_iter: int = 100
    omega0: float = 0.5
    omega_min: float = 0.01
    omega_max: float = 1.0
    cfl: float = 0.5
    max_cfl: float = 1.0
    n_nodes: int = 33
    # reference tip speed: fastest stroke allowed by the action bounds
    ref_tip_speed: float = (AMPLITUDE_MAX * math.pi * FREQ_RANGE[1]
                            + PITCH_MAX * 2 * math.pi * FREQ_RANGE[1])
    wall_margin: float = 3.0
    # forcing markers are spaced about ``marker_spacing`` local grid cells apart;
    # much denser markers leave grid-scale force modes the fluid cannot see
    marker_spacing: float = 1.0
    min_markers: int = 3
    # repeated forcing passes sharpen no-slip but feed grid-scale tangential
    # loads back into the flexible wing and destabilize the coupling
    forcing_passes: int = 1

    def __post_init__(self):
        if self.n_nodes < 16:
            raise ParameterError("n_nodes must be >= 16")
        if self.forcing_passes < 1:
            raise ParameterError("forcing_passes must be >= 1")
        if not 0 < self.omega_min <= self.omega0 <= self.omega_max <= 1:
            raise ParameterError("relaxation bounds must satisfy 0 < min <= omega0 <= max <= 1")


@dataclass
class CoupledState:
    flow: FlowField
    wing: WingState
    body: BodyState
    time: float
    aero: AeroLoad
    le_x: float = 0.0           # body-frame leading-edge position at the current time
    le_alpha: float = -math.pi / 2
    stroke_sign: int = 1        # sign of the next stroke

    def copy(self):
        return CoupledState(self.flow.copy(), self.wing.copy(), self.body, self.time, self.aero,
                            self.le_x, self.le_alpha, self.stroke_sign)


@dataclass(frozen=True)
class AitkenStatus:
    omega: float
    residual_norm: float
    iterations: int
    history: tuple = ()


@dataclass
class StepRecord:
    t: float
    x_l: float
    alpha_l: float
    force: np.ndarray
    moment: float
    position: np.ndarray
    theta: float
    velocity: np.ndarray
    omega: float
    iterations: int
    residual: float
    div_residual: float


Disturbance = Callable[[float, BodyState], BodyLoad]
BoundaryFn = Callable[[float], BoundarySpec]


def _quiescent(t):
    return BoundarySpec.quiescent()


def _no_disturbance(t, body):
    return NO_LOAD


class FlyerSimulation:
    def __init__(self, grid: Grid, groups: NondimGroups, cfg: FSIConfig = FSIConfig(),
                 wing_params: WingParams | None = None, solver: FlowSolver | None = None):
        self.grid = grid
        self.groups = groups
        self.cfg = cfg
        self.wing_params = wing_params or WingParams.from_groups(groups)
        self.solver = solver or FlowSolver(grid, groups.reynolds, max_cfl=cfg.max_cfl,
                                            forcing_passes=cfg.forcing_passes)
        self.fs = groups.flow_scale
        core = min(grid.dx.min(), grid.dy.min())
        self.dt_max = cfg.cfl * core / cfg.ref_tip_speed

    # -- setup ---------------------------------------------------------------
    def initial_state(self, body: BodyState, le_x=0.0, stroke_sign=1, time=0.0) -> CoupledState:
        le = leading_edge_state(0.0, StrokeSpec(0.0, 0.0, 1.0, 1, 0.0, le_x))
        clamp = clamp_from_body(body, le)
        wing = straight_wing(clamp, self.cfg.n_nodes)
        flow = FlowField.zeros(self.grid)
        flow.time = time * self.fs
        flow.solid_fraction = self.solver._solid_fraction(self._markers(wing))
        return CoupledState(flow, wing, body, time, AeroLoad.zero(self.cfg.n_nodes), le_x,
                            le.alpha, stroke_sign)

    def marker_count(self, wing: WingState):
        """Markers spaced about ``marker_spacing`` local cells, aligned with wing nodes."""
        hx, hy = self.grid.local_spacing(wing.positions[[0, -1]])
        h = float(min(hx.min(), hy.min()))
        chord = wing.ds * (wing.n - 1)
        need = max(self.cfg.min_markers - 1, int(math.ceil(chord / (self.cfg.marker_spacing * h))))
        intervals = [d for d in range(1, wing.n) if (wing.n - 1) % d == 0]
        return next((d for d in intervals if d >= need), wing.n - 1) + 1

    def transfer_matrix(self, wing: WingState):
        """Linear interpolation from wing nodes to forcing markers, ``(M, N)``."""
        m = self.marker_count(wing)
        W = np.zeros((m, wing.n))
        W[np.arange(m), np.arange(m) * ((wing.n - 1) // (m - 1))] = 1.0
        return W

    def load_matrix(self, wing: WingState, W):
        """Marker forces to node forces through a piecewise-linear load density.

        Exactly force conserving because every marker sits on a node.
        """
        m, n = W.shape
        stride = (n - 1) // (m - 1)
        wm = np.full(m, stride * wing.ds)
        wm[0] = wm[-1] = 0.5 * stride * wing.ds
        s = np.arange(n) / stride
        k = np.minimum(np.floor(s).astype(int), m - 2)
        t = s - k
        L = np.zeros((n, m))
        L[np.arange(n), k] = 1.0 - t
        L[np.arange(n), k + 1] += t
        return wing.node_weights()[:, None] * L / wm[None, :]

    @staticmethod
    def node_weights_of(wing, W):
        m = W.shape[0]
        dsm = wing.ds * (wing.n - 1) / (m - 1)
        w = np.full(m, dsm)
        w[0] = w[-1] = 0.5 * dsm
        return w

    def _markers(self, wing: WingState, W=None) -> Markers:
        W = self.transfer_matrix(wing) if W is None else W
        w = self.node_weights_of(wing, W)
        return Markers(W @ wing.positions, (W @ wing.velocities) / self.fs, w,
                       self.groups.thickness)

    def _body_load(self, aero: AeroLoad):
        return BodyLoad(aero.force, aero.moment)

    def inside(self, body: BodyState):
        return self.grid.contains(body.position, margin=self.cfg.wall_margin)

    # -- one step -------------------------------------------------------------
    def coupled_step(self, state: CoupledState, spec: StrokeSpec, dt: float,
                     disturbance: Disturbance = _no_disturbance,
                     boundary: BoundaryFn = _quiescent):
        if dt <= 0:
            raise ParameterError("dt must be positive")
        cfg, g = self.cfg, self.groups
        t0, t1 = state.time, state.time + dt
        b0 = state.body
        extra0 = disturbance(t0, b0)
        if b0.accel is None:
            a0, al0 = body_acceleration(b0, self._body_load(state.aero), g, extra0)
            b0 = replace(b0, accel=a0, alpha=al0)
        pos1, th1 = body_predict(b0, dt)
        extra1 = disturbance(t1, replace(b0, position=pos1, theta=th1))
        span = g.aspect_ratio

        def body_with(aero):
            return body_step(b0, self._body_load(aero), g, dt, extra1)

        def clamp_fn(b1):
            def at(taus):
                sf = (taus / dt)[:, None]
                le = leading_edge_state(np.minimum(t0 + taus, spec.end_time), spec)
                return clamp_path((1 - sf) * b0.position + sf * b1.position,
                                  (1 - sf[:, 0]) * b0.theta + sf[:, 0] * b1.theta,
                                  (1 - sf) * b0.velocity + sf * b1.velocity,
                                  (1 - sf[:, 0]) * b0.omega + sf[:, 0] * b1.omega, le)
            return at

        def solve_wing(aero, b1):
            return wing_step(state.wing, clamp_fn(b1), aero.per_segment_force, b0.gravity_dir,
                             dt, self.wing_params)

        pred = self.solver.predict(state.flow, boundary(t1), dt * self.fs)
        aero = state.aero
        b1 = body_with(aero)
        it = solve_wing(aero, b1)
        history = []
        omega = cfg.omega0
        r_prev = None
        for k in range(1, cfg.max_iter + 1):
            W = self.transfer_matrix(it)
            markers = self._markers(it, W)
            flow = self.solver.correct(pred, markers)
            aero = aero_load(flow, markers.positions, pos1, span, self.fs**2, self.grid,
                             transfer=self.load_matrix(it, W))
            b1 = body_with(aero)
            new = solve_wing(aero, b1)
            r = np.concatenate([(new.positions - it.positions).ravel(),
                                (new.velocities - it.velocities).ravel() * dt])
            res = float(np.max(np.abs(new.positions - it.positions)))
            history.append(res)
            if res < cfg.tol:
                it = new
                break
            if r_prev is not None:
                dr = r - r_prev
                den = float(dr @ dr)
                if den > 0:
                    omega = -omega * float(r_prev @ dr) / den
                omega = min(max(omega, cfg.omega_min), cfg.omega_max)
            r_prev = r
            it = WingState(it.positions + omega * (new.positions - it.positions),
                           it.velocities + omega * (new.velocities - it.velocities), it.ds,
                           it.accelerations + omega * (new.accelerations - it.accelerations))
        else:
            raise CouplingDivergenceError(
                f"FSI iteration did not converge in {cfg.max_iter} iterations", history)
        le = leading_edge_state(min(t1, spec.end_time), spec)
        new_state = CoupledState(flow, it, b1, t1, aero, le.x, le.alpha, state.stroke_sign)
        return new_state, AitkenStatus(omega, history[-1], len(history), tuple(history))

    # -- one stroke -------------------------------------------------------------
    def stroke_steps(self, spec: StrokeSpec):
        n = max(1, int(math.ceil(spec.duration / self.dt_max - 1e-9)))
        return n, spec.duration / n

    def run_stroke(self, state: CoupledState, spec: StrokeSpec,
                   disturbance: Disturbance = _no_disturbance,
                   boundary: BoundaryFn = _quiescent, on_step=None):
        """Advance through one stroke.  Returns ``(state, log, exited)``."""
        if abs(spec.start_time - state.time) > 1e-9 or spec.start_position != state.le_x:
            spec = replace(spec, start_time=state.time, start_position=state.le_x)
        n, dt = self.stroke_steps(spec)
        log = []
        exited = False
        for i in range(n):
            sub = self._split(state, dt)
            for h in sub:
                try:
                    state, status = self.coupled_step(state, spec, h, disturbance, boundary)
                except GeometryError:
                    exited = True
                    break
            if exited:
                break
            # land exactly on the stroke end to avoid drift in time
            if i == n - 1:
                state.time = spec.end_time
            rec = StepRecord(state.time, state.le_x, state.le_alpha, state.aero.force.copy(),
                             state.aero.moment, state.body.position.copy(), state.body.theta,
                             state.body.velocity.copy(), state.body.omega, status.iterations,
                             status.residual_norm, state.flow.div_residual)
            log.append(rec)
            if on_step is not None:
                on_step(state, rec)
            if not self.inside(state.body):
                exited = True
                break
        if not exited:
            state.stroke_sign = -spec.sign
            state.le_x = spec.end_position
            state.le_alpha = -math.pi / 2
        return state, log, exited

    def _split(self, state: CoupledState, dt):
        c = self.solver.cfl(state.flow, dt * self.fs, self._markers(state.wing))
        n = max(1, int(math.ceil(c / self.cfg.max_cfl - 1e-12)))
        return [dt / n] * n
