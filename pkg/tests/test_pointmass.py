import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from flyrl.errors import FlyrlError, ParameterError
from flyrl.observation import ObsScaling
from flyrl.pointmass import PointMassConfig, PointMassEnv
from flyrl.reproduce import mirror_obs, rotate_obs, translate_obs

CFG = PointMassConfig()
SC = CFG.scaling


def _env_at(pos, vel, theta, omega, x_l, k, gdir=(0.0, -1.0)):
    env = PointMassEnv(CFG)
    env.reset(gravity_dir=gdir)
    env.state.update(pos=np.asarray(pos, float), vel=np.asarray(vel, float), theta=theta,
                     omega=omega, x_l=x_l, k=k)
    return env


states = st.tuples(st.floats(-200, 200), st.floats(-200, 200), st.floats(-3, 3),
                   st.floats(-3, 3), st.floats(-3, 3), st.floats(-1, 1), st.floats(-2.7, 2.7),
                   st.sampled_from([-1, 1]))
actions = st.tuples(*(st.floats(-1, 1) for _ in range(3)))


@given(states, actions, st.floats(-math.pi, math.pi))
def test_rotation_with_gravity_is_exact(x, a, ang):
    px, py, u, v, th, om, xl, k = x
    base = _env_at((px, py), (u, v), th, om, xl, k)
    s, s2 = base.observe(), base.step(a).obs
    c, sn = math.cos(ang), math.sin(ang)
    R = np.array([[c, -sn], [sn, c]])
    start = np.array([10.0, -20.0])
    p = start + R @ (np.array([px, py]) - start)
    rot = _env_at(p, R @ [u, v], th + ang, om, xl, k, R @ [0.0, -1.0])
    r, r2 = rot.observe(), rot.step(a).obs
    assert np.allclose(r, rotate_obs(s, start, ang, SC), atol=1e-9)
    assert np.allclose(r2, rotate_obs(s2, start, ang, SC), atol=1e-9)


@given(states, actions)
def test_mirror_and_translation_are_exact(x, a):
    px, py, u, v, th, om, xl, k = x
    base = _env_at((px, py), (u, v), th, om, xl, k)
    s, s2 = base.observe(), base.step(a).obs
    start = np.array([px, 5.0])
    m = _env_at((2 * start[0] - px, py), (-u, v), -th, -om, -xl, -k)
    assert np.allclose(m.observe(), mirror_obs(s, start, SC), atol=1e-9)
    assert np.allclose(m.step(a).obs, mirror_obs(s2, start, SC), atol=1e-9)
    t = _env_at((px + 30, py - 40), (u, v), th, om, xl, k)
    t.observe()
    assert np.allclose(t.step(a).obs, translate_obs(s2, (30, -40), SC), atol=1e-9)


def test_hover_thrust_and_stroke_alternation():
    env = _env_at((0, 0), (0, 0), 0.0, 0.0, -2.7, 1)
    res = env.step([1.0, 1.0, 1.0])        # full sweep, pitch pi/4, top frequency
    assert env.state["k"] == -1 and env.state["x_l"] == pytest.approx(2.7)
    assert len(res.rows) == CFG.substeps and res.transition.s.shape == (1, 13)
    assert env.state["vel"][1] > 0         # strongest stroke beats gravity
    env.reset()
    env.step([-1.0, -1.0, -1.0])           # no stroke: gravity and drag only
    assert env.state["vel"][1] < 0 and env.state["omega"] == 0


def test_episode_ends_and_falls():
    cfg = PointMassConfig(episode_strokes=3, domain_min=(-31, 29.9), domain_max=(31, 100))
    env = PointMassEnv(cfg)
    env.reset()
    res = env.step([-1, -1, -1])
    assert res.fell and res.done and res.transition.done[0] == 1.0
    env = PointMassEnv(PointMassConfig(episode_strokes=3))
    env.reset()
    done = [env.step([0, 0, 0]).done for _ in range(3)]
    assert done == [False, False, True]


def test_reward_matches_oracle_and_rows():
    env = PointMassEnv(CFG)
    env.reset()
    res = env.step([0.2, 0.1, 0.3])
    d = env.distance()
    om = env.state["omega"]
    assert res.reward == pytest.approx(-math.sqrt(d / 1000) - om**2, abs=1e-12)
    ts = [r[0] for r in res.rows]
    assert all(b > a for a, b in zip(ts, ts[1:]))


def test_validation():
    with pytest.raises(ParameterError):
        PointMassConfig(gravity=0)
    with pytest.raises(FlyrlError):
        PointMassEnv().step([0, 0, 0])
    with pytest.raises(ParameterError):
        ObsScaling(position=0)
