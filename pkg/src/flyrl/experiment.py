"""Run directories: training, evaluation, replay and field dumps from a RunConfig."""
from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, dumps_config, load_config
from .env import FlyerEnv
from .errors import FlyrlError
from .flow import write_field_csv
from .fsi import FlyerSimulation
from .grid import Grid
from .pointmass import PointMassEnv
from .scales import derive_nondim_groups
from .td3 import TD3
from .trajectory import TrajectoryWriter, max_abs_difference
from .training import train

STROKE_COLUMNS = ("worker", "episode", "stroke", "total", "reward", "distance", "done", "fell",
                  "success", "replicas", "a0", "a1", "a2")


def build_envs(cfg: RunConfig):
    if cfg.run.env_kind == "pointmass":
        return [PointMassEnv(cfg.pointmass) for _ in cfg.worker_envs()]
    groups = derive_nondim_groups(cfg.scales)
    grid = Grid(cfg.grid)
    envs = []
    for ecfg in cfg.worker_envs():
        sim = FlyerSimulation(grid, groups, cfg.fsi)
        envs.append(FlyerEnv(ecfg, groups, sim=sim))
    return envs


def episode_cap(cfg: RunConfig):
    if cfg.run.max_episodes is not None:
        return cfg.run.max_episodes
    return None if cfg.run.env_kind == "pointmass" else cfg.env.episode_cap


class _Trajectories:
    """One CSV per worker and episode."""

    def __init__(self, out: Path, prefix="traj"):
        self.out = out
        self.prefix = prefix
        self.files = {}

    def __call__(self, worker, episode, rows):
        key = (worker, episode)
        if key not in self.files:
            self.files[key] = TrajectoryWriter(self.out / f"{self.prefix}_w{worker}_ep{episode}.csv")
        self.files[key].write(rows)

    def close(self):
        for w in self.files.values():
            w.close()


def _prepare(out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_train(cfg: RunConfig, out, agent: TD3 | None = None):
    out = _prepare(out)
    (out / "config.yaml").write_text(dumps_config(cfg))
    envs = build_envs(cfg)
    agent = agent or TD3(cfg.learner, seed=cfg.run.seed)
    traj = _Trajectories(out)
    fh = open(out / "strokes.csv", "w", newline="")
    log = csv.writer(fh)
    log.writerow(STROKE_COLUMNS)
    every = cfg.run.checkpoint_every

    def on_stroke(s):
        log.writerow([s.worker, s.episode, s.stroke, s.total, f"{s.reward:.17g}",
                      f"{s.distance:.17g}", int(s.done), int(s.fell), int(s.success), s.replicas]
                     + [f"{v:.17g}" for v in s.action])
        if every and s.total % every == 0:
            save_checkpoint(out / "checkpoint.bin", agent, dumps_config(cfg), {"strokes": s.total})

    try:
        rec = train(envs, agent, cfg.reproduction if cfg.run.reproduce else None,
                    cfg.run.max_strokes, episode_cap=episode_cap(cfg),
                    deterministic=cfg.run.deterministic or cfg.run.workers == 1 and len(envs) == 1,
                    on_rows=traj, on_stroke=on_stroke)
    finally:
        traj.close()
        fh.close()
    save_checkpoint(out / "checkpoint.bin", agent, dumps_config(cfg),
                    {"strokes": rec.total_strokes})
    summary = {"total_strokes": rec.total_strokes, "success": {str(k): v for k, v in rec.success.items()},
               "all_succeeded": rec.all_succeeded, "budget_exhausted": rec.budget_exhausted,
               "episodes": [dataclasses.asdict(e) for e in rec.episodes],
               "wall_time": rec.wall_time}
    (out / "summary.json").write_text(json.dumps(summary, indent=1))
    return rec


def _policy_agent(cfg: RunConfig, checkpoint):
    agent = TD3(cfg.learner, seed=cfg.run.seed)
    if checkpoint is not None:
        load_checkpoint(checkpoint, agent)
    return agent


def run_evaluate(cfg: RunConfig, checkpoint, out, max_strokes=None):
    """Fly each worker's scenario with the frozen policy: no exploration, no learning."""
    out = _prepare(out)
    (out / "config.yaml").write_text(dumps_config(cfg))
    agent = _policy_agent(cfg, checkpoint)
    budget = max_strokes or cfg.run.max_strokes
    results = []
    for i, env in enumerate(build_envs(cfg)):
        obs = env.reset()
        with TrajectoryWriter(out / f"eval_w{i}.csv") as w:
            for n in range(budget):
                res = env.step(agent.select_action(obs, explore=False))
                w.write(res.rows)
                obs = res.obs
                if res.done:
                    break
        results.append({"worker": i, "strokes": n + 1, "success": bool(res.success),
                        "fell": bool(res.fell), "final_distance": env.distance()})
    (out / "evaluation.json").write_text(json.dumps(results, indent=1))
    return results


def run_replay(run_dir, out):
    """Re-run a logged training run deterministically and compare every trajectory file."""
    run_dir = Path(run_dir)
    cfg = load_config(run_dir / "config.yaml")
    if not cfg.run.deterministic:
        cfg = dataclasses.replace(cfg, run=dataclasses.replace(cfg.run, deterministic=True))
    run_train(cfg, out)
    out = Path(out)
    diffs = {}
    names = sorted(p.name for p in run_dir.glob("traj_*.csv"))
    if sorted(p.name for p in out.glob("traj_*.csv")) != names:
        raise FlyrlError("replay produced a different set of trajectory files")
    for name in names + ["strokes.csv"]:
        diffs[name] = _csv_diff(run_dir / name, out / name) if name == "strokes.csv" \
            else max_abs_difference(run_dir / name, out / name)
    return diffs


def _csv_diff(a, b):
    ra = Path(a).read_text().splitlines()
    rb = Path(b).read_text().splitlines()
    if len(ra) != len(rb):
        return float("inf")
    worst = 0.0
    for la, lb in zip(ra[1:], rb[1:]):
        va = np.array(la.split(","), dtype=float)
        vb = np.array(lb.split(","), dtype=float)
        worst = max(worst, float(np.max(np.abs(va - vb))))
    return worst


def run_dump_fields(cfg: RunConfig, checkpoint, out, times=None):
    """Fly the first worker's scenario and write flow-field CSVs at the requested times.

    Fields are written at the first stroke boundary at or after each time.
    """
    if cfg.run.env_kind != "flyer":
        raise FlyrlError("dump-fields needs the flyer environment")
    out = _prepare(out)
    times = sorted(times if times is not None else cfg.run.dump_times)
    if not times:
        raise FlyrlError("no dump times given")
    agent = _policy_agent(cfg, checkpoint)
    env = build_envs(cfg)[0]
    obs = env.reset()
    written = []
    pending = list(times)
    if pending and pending[0] <= 0:
        write_field_csv(out / "field_t0.csv", env.grid, env.state.flow)
        written.append(0.0)
        pending = [t for t in pending if t > 0]
    while pending:
        res = env.step(agent.select_action(obs, explore=False))
        obs = res.obs
        t = env.state.time
        while pending and t >= pending[0] - 1e-9:
            write_field_csv(out / f"field_t{pending[0]:g}.csv", env.grid, env.state.flow)
            written.append(t)
            pending.pop(0)
        if res.done:
            break
    return written
