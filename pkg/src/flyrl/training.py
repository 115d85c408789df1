"""Worker/learner loop: flyers send transitions at stroke boundaries, one learner acts.

Deterministic mode visits the workers in fixed round-robin order on one
thread.  Threaded mode advances all active workers' strokes concurrently and
feeds the learner in completion order, so it is not reproducible.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field

import numpy as np

from .reproduce import ReproductionGrid, reproduce_all
from .td3 import TD3


@dataclass
class StrokeLog:
    worker: int
    episode: int
    stroke: int          # real strokes of this worker so far
    total: int           # real strokes over all workers so far
    reward: float
    distance: float
    done: bool
    fell: bool
    success: bool
    replicas: int
    action: np.ndarray


@dataclass
class EpisodeLog:
    worker: int
    episode: int
    strokes: int
    ret: float
    success: bool
    fell: bool
    end_total: int       # cumulative real strokes when the episode ended


@dataclass
class TrainingRecord:
    strokes: list = field(default_factory=list)
    episodes: list = field(default_factory=list)
    success: dict = field(default_factory=dict)     # worker -> bool
    budget_exhausted: bool = False
    total_strokes: int = 0
    wall_time: float = 0.0

    @property
    def all_succeeded(self):
        return bool(self.success) and all(self.success.values())

    def returns(self, worker=None):
        return np.array([e.ret for e in self.episodes if worker is None or e.worker == worker])


class Worker:
    def __init__(self, index, env, episode_cap=None, on_rows=None):
        self.index = index
        self.env = env
        self.episode_cap = episode_cap
        self.on_rows = on_rows
        self.episode = 0
        self.strokes = 0
        self.ret = 0.0
        self.active = True
        self.success = False
        self.obs = None
        self.ep_strokes = 0

    def start_episode(self):
        if self.episode_cap is not None and self.episode >= self.episode_cap:
            self.active = False
            return False
        self.episode += 1
        self.obs = self.env.reset()
        self.ret = 0.0
        self.ep_strokes = 0
        return True


def train(envs, agent: TD3, repro: ReproductionGrid | None, max_strokes: int,
          learn_per_stroke: int | None = None, episode_cap: int | None = None,
          deterministic: bool = True, stop_on_success: bool = True, on_rows=None,
          on_stroke=None, stop_when=None) -> TrainingRecord:
    """Run workers until all succeed, all exhaust their episodes, or the budget expires.

    ``on_rows(worker, episode, rows)`` receives each stroke's trajectory rows;
    ``on_stroke(log)`` sees every stroke log after learning; ``stop_when(record)``
    ends training early when it returns true.
    """
    t0 = time.perf_counter()
    rec = TrainingRecord()
    workers = [Worker(i, e, episode_cap) for i, e in enumerate(envs)]
    for w in workers:
        w.start_episode()
        rec.success[w.index] = False
    n_learn = agent.cfg.learn_per_stroke if learn_per_stroke is None else learn_per_stroke

    def act(w):
        return agent.select_action(w.obs, step=agent.env_steps, distance=w.env.distance())

    def absorb(w, action, res):
        scaling = w.env.scaling
        batch = res.transition if repro is None else reproduce_all(res.transition, repro, scaling)
        agent.buffer.add_batch(batch.s, batch.a, batch.r, batch.s2, batch.done)
        agent.env_steps += 1
        agent.learn(len(batch) if n_learn is None else n_learn)
        w.strokes += 1
        w.ep_strokes += 1
        w.ret += res.reward
        w.obs = res.obs
        rec.total_strokes += 1
        if on_rows is not None:
            on_rows(w.index, w.episode, res.rows)
        log = StrokeLog(w.index, w.episode, w.strokes, rec.total_strokes, res.reward,
                        w.env.distance(), res.done, res.fell, res.success, len(batch),
                        np.asarray(action, float))
        rec.strokes.append(log)
        if on_stroke is not None:
            on_stroke(log)
        if res.done:
            rec.episodes.append(EpisodeLog(w.index, w.episode, w.ep_strokes, w.ret, res.success,
                                           res.fell, rec.total_strokes))
            if res.success:
                rec.success[w.index] = True
                if stop_on_success:
                    w.active = False
                    return
            w.start_episode()

    pool = None if deterministic else ThreadPoolExecutor(max_workers=len(workers))
    try:
        while True:
            active = [w for w in workers if w.active]
            if not active or (stop_when is not None and stop_when(rec)):
                break
            if rec.total_strokes >= max_strokes:
                rec.budget_exhausted = True
                break
            active = active[:max_strokes - rec.total_strokes]
            if pool is None:
                for w in active:
                    a = act(w)
                    absorb(w, a, w.env.step(a))
            else:
                actions = {w.index: act(w) for w in active}
                futs = {pool.submit(w.env.step, actions[w.index]): w for w in active}
                for f in as_completed(futs):
                    w = futs[f]
                    absorb(w, actions[w.index], f.result())
    finally:
        if pool is not None:
            pool.shutdown()
    rec.wall_time = time.perf_counter() - t0
    return rec


def strokes_to_threshold(record: TrainingRecord, threshold, window=10):
    """Real strokes until the mean return of ``window`` consecutive episodes reaches ``threshold``."""
    rets = [e.ret for e in record.episodes]
    for i in range(window, len(rets) + 1):
        if np.mean(rets[i - window:i]) >= threshold:
            return record.episodes[i - 1].end_total
    return None
