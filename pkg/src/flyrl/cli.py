"""Command line: ``flyrl {train,evaluate,replay,dump-fields}``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .config import RunConfig, load_config
from .errors import FlyrlError

OUT_ENV = "FLYRL_OUT"


def _parser():
    p = argparse.ArgumentParser(prog="flyrl", description="CFD-coupled flapping flyer control")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, checkpoint=False):
        sp.add_argument("--config", help="YAML run configuration (defaults if omitted)")
        sp.add_argument("--seed", type=int, help="override run.seed")
        sp.add_argument("--out", help=f"output directory (else ${OUT_ENV}, else run.out)")
        sp.add_argument("--deterministic", action="store_true",
                        help="single-threaded round-robin workers")
        sp.add_argument("--workers", type=int, help="worker threads (non-deterministic mode)")
        if checkpoint:
            sp.add_argument("--checkpoint", help="learner checkpoint file")

    common(sub.add_parser("train", help="train the controller"))
    common(sub.add_parser("evaluate", help="fly the frozen policy"), checkpoint=True)
    rp = sub.add_parser("replay", help="re-run a logged run and compare trajectories")
    rp.add_argument("run_dir", help="directory written by 'train'")
    rp.add_argument("--out", help="directory for the re-run")
    dp = sub.add_parser("dump-fields", help="write flow-field CSVs at given times")
    common(dp, checkpoint=True)
    dp.add_argument("--times", type=float, nargs="+", help="times (overrides run.dump_times)")
    return p


def resolve(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    run = cfg.run
    kw = {"mode": args.command}
    if args.seed is not None:
        kw["seed"] = args.seed
    out = args.out or os.environ.get(OUT_ENV)
    if out:
        kw["out"] = out
    if args.deterministic:
        kw["deterministic"] = True
    if args.workers is not None:
        kw["workers"] = args.workers
        if not args.deterministic:
            kw["deterministic"] = args.workers <= 1
    return dataclasses.replace(cfg, run=dataclasses.replace(run, **kw))


def main(argv=None):
    args = _parser().parse_args(argv)
    # heavy imports after argument parsing keeps --help fast
    from . import experiment
    try:
        if args.command == "replay":
            out = args.out or os.environ.get(OUT_ENV) or str(args.run_dir).rstrip("/") + "_replay"
            diffs = experiment.run_replay(args.run_dir, out)
            worst = max(diffs.values()) if diffs else 0.0
            for name, d in sorted(diffs.items()):
                print(f"{name}: max abs difference {d:.3g}")
            print(f"replay {'identical' if worst == 0 else 'DIFFERS'}")
            return 0 if worst == 0 else 1
        cfg = resolve(args)
        if args.command == "train":
            rec = experiment.run_train(cfg, cfg.run.out)
            print(json.dumps({"out": cfg.run.out, "strokes": rec.total_strokes,
                              "all_succeeded": rec.all_succeeded,
                              "budget_exhausted": rec.budget_exhausted}))
        elif args.command == "evaluate":
            res = experiment.run_evaluate(cfg, args.checkpoint, cfg.run.out)
            print(json.dumps(res))
        else:
            times = experiment.run_dump_fields(cfg, args.checkpoint, cfg.run.out, args.times)
            print(json.dumps({"out": cfg.run.out, "times": times}))
        return 0
    except (FlyrlError, OSError, ValueError) as e:
        print(f"flyrl: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
