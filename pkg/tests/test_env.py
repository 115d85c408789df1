import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from flyrl.env import (BoundaryScenario, DisturbanceEntry, DisturbanceSchedule, EnvConfig,
                       FlyerEnv, MissionLeg, TRAJ_COLUMNS, Trigger, boundary_profile)
from flyrl.errors import (ConfigError, CouplingDivergenceError, ParameterError, SolverError,
                          StabilityError)
from flyrl.fsi import CoupledState, StepRecord
from flyrl.flow import FlowField
from flyrl.grid import Grid, GridSpec
from flyrl.loads import AeroLoad
from flyrl.observation import (ActionBounds, ObsScaling, compute_reward, decode_action,
                               encode_action)
from flyrl.scales import default_groups
from flyrl.structures import StrokeSpec, straight_wing, clamp_from_body, leading_edge_state

G = default_groups()
SMALL = GridSpec(nx=32, ny=32, domain_min=(-40, -40), domain_max=(40, 40))


def test_reward_examples():
    assert compute_reward(0.0, 0.0) == 0.0
    assert compute_reward(1000.0, 0.0) == -1.0
    assert compute_reward(250.0, 0.5) == pytest.approx(-0.75)
    with pytest.raises(ParameterError):
        compute_reward(-1.0, 0.0)


def test_action_decoding_examples():
    assert np.allclose(decode_action([-1, -1, -1]), [0.0, 0.0, 0.5])
    assert np.allclose(decode_action([1, 1, 1]), [5.4, math.pi / 4, 1.5])
    with pytest.raises(ParameterError):
        decode_action([1.5, 0, 0])
    with pytest.raises(ParameterError):
        ActionBounds(frequency=(0.4, 1.5))


@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_action_round_trip(a):
    assert np.allclose(encode_action(decode_action(a)), a, atol=1e-12)
    b = ActionBounds(amplitude=(1.0, 3.0), pitch=(0.1, 0.5), frequency=(0.8, 1.2))
    phys = decode_action(a, b)
    assert np.all(phys >= b.low - 1e-12) and np.all(phys <= b.high + 1e-12)


def test_pulsatile_defaults_and_ramp():
    sc = BoundaryScenario("pulsatile")
    assert (sc.u_lm, sc.v_bm, sc.f_l, sc.f_b, sc.t_i) == (0.59, 0.29, 0.01, 0.015, 40.0)
    lo, hi = (-100.0, -100.0), (100.0, 100.0)
    bc = boundary_profile(0.0, sc, lo, hi)
    y = np.linspace(-100, 100, 7)
    assert not np.any(bc.left.profile(np.full(7, -100.0), y)[0])
    assert not np.any(bc.bottom.profile(y, np.full(7, -100.0))[1])
    bc = boundary_profile(40.0, sc, lo, hi)
    assert bc.left.profile(np.array([-100.0]), np.array([-100.0]))[0][0] == pytest.approx(0.59)
    assert bc.right.kind == "neumann"
    # half ramp
    bc = boundary_profile(20.0, sc, lo, hi)
    assert bc.bottom.profile(np.array([0.0]), np.array([-100.0]))[1][0] == pytest.approx(0.145)
    assert bc.top.profile(np.array([0.0]), np.array([100.0]))[1][0] == pytest.approx(-0.145)


def test_pulsatile_modulation():
    sc = BoundaryScenario("pulsatile")
    lo, hi = (-100.0, -100.0), (100.0, 100.0)
    t = 40.0 + 25.0    # sin(2 pi 0.01 * 25) = 1
    bc = boundary_profile(t, sc, lo, hi)
    # centre of the left edge: cos(pi) - 1 = -2 -> u = u_lm (1 + 1)
    assert bc.left.profile(np.array([-100.0]), np.array([0.0]))[0][0] == pytest.approx(1.18)


def test_uniform_scenarios():
    lo, hi = (-10.0, -10.0), (10.0, 10.0)
    bc = boundary_profile(3.0, BoundaryScenario("uniform", 0.59), lo, hi)
    assert bc.signature == ("velocity", "neumann", "neumann", "neumann")
    assert bc.left.profile(np.zeros(3), np.zeros(3))[0].tolist() == [0.59] * 3
    bc = boundary_profile(3.0, BoundaryScenario("uniform", 1.0, math.pi / 4), lo, hi)
    assert bc.signature == ("velocity", "neumann", "velocity", "neumann")
    assert boundary_profile(0.0, BoundaryScenario("uniform", 0.0), lo, hi).signature == \
        ("neumann",) * 4
    with pytest.raises(ParameterError):
        BoundaryScenario("vortex")


def test_triggers():
    tt = Trigger(time=5.0)
    assert not tt.fired(4.9, None, None) and tt.fired(5.0, None, None)
    tx = Trigger(axis="x", value=-50.0)
    assert tx.fired(1.0, np.array([-51.0, 0]), np.array([-49.0, 0]))
    assert tx.fired(1.0, np.array([-49.0, 0]), np.array([-51.0, 0]))
    assert not tx.fired(1.0, np.array([-60.0, 0]), np.array([-55.0, 0]))
    with pytest.raises(ParameterError):
        Trigger()
    with pytest.raises(ParameterError):
        Trigger(time=1.0, axis="x")


def test_disturbance_magnitudes_and_durations():
    f = DisturbanceEntry.force_pulse(Trigger(time=10.0))
    m = DisturbanceEntry.moment_pulse(Trigger(time=10.0))
    assert (f.multiple, f.duration, m.multiple, m.duration) == (300.0, 0.4, 62.5, 2.0)
    sch = DisturbanceSchedule([f, m], G.weight, ref_moment=2.0)
    sch.update(9.0, np.zeros(2), np.zeros(2))
    load = sch.load(9.0)
    assert not load.force.any() and load.moment == 0
    sch.update(10.1, np.zeros(2), np.zeros(2))
    load = sch.load(10.2)
    assert np.allclose(load.force, [0.0, -300 * G.weight]) and load.moment == 125.0
    assert sch.flags(10.2) == (1, 1)
    sch.update(10.5, np.zeros(2), np.zeros(2))
    assert not sch.load(10.5).force.any() and sch.load(10.5).moment == 125.0
    sch.update(12.1, np.zeros(2), np.zeros(2))
    assert sch.load(12.1).moment == 0 and sch.flags(12.1) == (0, 0)


def test_overlapping_pulses_rejected():
    a = DisturbanceEntry.force_pulse(Trigger(time=1.0))
    b = DisturbanceEntry.force_pulse(Trigger(time=1.2))
    with pytest.raises(ConfigError):
        DisturbanceSchedule([a, b], 1.0, 1.0)
    DisturbanceSchedule([a, DisturbanceEntry.moment_pulse(Trigger(time=1.2))], 1.0, 1.0)
    c = DisturbanceEntry.force_pulse(Trigger(axis="x", value=0.0))
    sch = DisturbanceSchedule([a, c], 1.0, 1.0)
    sch.update(1.0, np.array([-2.0, 0]), np.array([-1.0, 0]))
    with pytest.raises(ConfigError):
        sch.update(1.1, np.array([-1.0, 0]), np.array([1.0, 0]))


# -- a scripted stand-in for the coupled simulation --------------------------

class ScriptedSim:
    """Moves the body along a prescribed velocity; no fluid."""

    def __init__(self, grid, velocity=(0.0, 0.0), exit_after=None, dt=0.1, fail=None):
        self.grid = grid
        self.fail = fail            # (step, exception) raised mid-stroke
        self.velocity = np.asarray(velocity, float)
        self.exit_after = exit_after
        self.dt = dt

    def initial_state(self, body, le_x=0.0, stroke_sign=1, time=0.0):
        cl = clamp_from_body(body, leading_edge_state(0.0, StrokeSpec(0, 0, 1, 1, 0, le_x)))
        return CoupledState(FlowField.zeros(self.grid), straight_wing(cl), body, time,
                            AeroLoad.zero(33), le_x, -math.pi / 2, stroke_sign)

    def run_stroke(self, state, spec, disturbance, boundary, on_step):
        n = int(round(spec.duration / self.dt))
        for i in range(n):
            b = state.body
            pos = b.position + self.dt * self.velocity
            state.body = replace(b, position=pos, velocity=self.velocity.copy())
            state.time = spec.start_time + (i + 1) * spec.duration / n
            rec = StepRecord(state.time, 0.0, -math.pi / 2, np.zeros(2), 0.0, pos.copy(),
                             b.theta, self.velocity.copy(), 0.0, 1, 0.0, 0.0)
            on_step(state, rec)
            if self.fail is not None and i + 1 >= self.fail[0]:
                raise self.fail[1]
            if self.exit_after is not None and i + 1 >= self.exit_after:
                return state, [], True
        state.stroke_sign = -spec.sign
        state.le_x = spec.end_position
        return state, [], False


def _scripted_env(cfg, **kw):
    return FlyerEnv(cfg, G, sim=ScriptedSim(Grid(SMALL), **kw))


def test_observation_at_goal():
    cfg = EnvConfig(goal=(1.0, 2.0), start=(1.0, 2.0), scaling=ObsScaling.for_groups(G))
    env = _scripted_env(cfg)
    obs = env.reset()
    expect = np.zeros(13)
    expect[3] = 1.0
    expect[10] = 1.0
    expect[12] = -1.0
    assert np.allclose(obs, expect, atol=1e-15)
    obs = env.reset(gravity_dir=(1.0, 0.0))
    assert np.allclose(obs[11:], [1.0, 0.0])


def test_hover_latch_success_and_clock_reset():
    cfg = EnvConfig(start=(0.0, 0.0), hover_duration=2.0, hover_distance=5.0)
    env = _scripted_env(cfg)
    env.reset()
    a = encode_action([1.0, 0.2, 1.0])       # stroke lasts 0.5
    results = [env.step(a) for _ in range(4)]
    assert [r.success for r in results] == [False, False, False, True]
    assert results[-1].done and not results[-1].fell
    assert len(results[0].rows) == 5 and len(results[0].rows[0]) == len(TRAJ_COLUMNS)
    # leaving the hover disc resets the clock
    env2 = _scripted_env(EnvConfig(start=(4.0, 0.0), hover_duration=2.0), velocity=(3.0, 0.0))
    env2.reset()
    r = env2.step(a)
    assert env2.hover_clock == 0.0 and not r.success


def test_exit_mid_stroke_is_failure():
    env = _scripted_env(EnvConfig(start=(0.0, 0.0)), exit_after=2)
    env.reset()
    r = env.step(np.zeros(3))
    assert r.done and r.fell and not r.success
    assert r.transition.done[0] == 1.0


@pytest.mark.parametrize("err", [StabilityError("wing blew up"),
                                 CouplingDivergenceError("no convergence", [1.0, 2.0]),
                                 SolverError("poisson", 1.0)])
def test_fsi_failure_ends_episode_as_failure(err):
    env = _scripted_env(EnvConfig(start=(0.0, 0.0)), fail=(2, err))
    env.reset()
    r = env.step(np.zeros(3))
    assert r.done and r.fell and not r.success and r.transition.done[0] == 1.0
    assert len(r.rows) == 2 and all(np.isfinite(row[12]) for row in r.rows)


def test_reward_and_transition_consistent():
    env = _scripted_env(EnvConfig(start=(-30.0, 40.0)), velocity=(2.0, 0.0))
    s = env.reset()
    r = env.step(encode_action([2.0, 0.3, 1.0]))
    assert np.array_equal(r.transition.s[0], s)
    assert r.reward == pytest.approx(compute_reward(env.distance(), 0.0))
    assert all(row[12] == r.reward for row in r.rows)
    assert np.allclose(r.transition.start[0], [-30.0, 40.0])


def test_mission_goal_switch():
    legs = (MissionLeg((0.0, 0.0)), MissionLeg((10.0, 0.0), Trigger(time=0.3)))
    env = _scripted_env(EnvConfig(start=(0.0, 0.0), mission=legs))
    env.reset()
    assert np.array_equal(env.goal, [0.0, 0.0])
    r = env.step(encode_action([1.0, 0.2, 1.0]))
    assert np.array_equal(env.goal, [10.0, 0.0])
    assert r.rows[-1][18] == 10.0


def test_config_validation():
    with pytest.raises(ParameterError):
        EnvConfig(sensed_velocity="radar")
    with pytest.raises(ParameterError):
        _scripted_env(EnvConfig(start=(100.0, 0.0)))


def test_boundary_sensing_mode():
    cfg = EnvConfig(start=(0.0, 0.0), sensed_velocity="boundary",
                    boundary=BoundaryScenario("uniform", 0.59))
    env = _scripted_env(cfg)
    env.reset()
    env.state.flow.u[:] = 3.0           # whatever the wake does
    assert np.allclose(env.sensed(env.state), [0.59, 0.0])


def test_antenna_probe_in_shear():
    env = _scripted_env(EnvConfig(start=(1.0, -2.0), start_theta=0.4))
    env.reset()
    g = env.grid
    f = env.state.flow
    f.u = 0.02 * np.broadcast_to(g.yc[None, :], f.u.shape).copy()
    f.v = -0.01 * np.broadcast_to(g.xc[:, None], f.v.shape).copy()
    head = env.state.body.head_at(G.body_length / 2)
    assert np.allclose(env.sensed(env.state), [0.02 * head[1], -0.01 * head[0]], atol=1e-12)
