"""Strokes to a return threshold with and without transition reproduction (point mass).

    python3 scripts/pointmass_reproduction.py --seeds 0 1 2
"""
import argparse
import time

from flyrl.pointmass import PointMassConfig, PointMassEnv
from flyrl.reproduce import ReproductionGrid
from flyrl.td3 import TD3, LearnerConfig
from flyrl.training import strokes_to_threshold, train


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--budget", type=int, default=20000)
    args = p.parse_args()
    lc = LearnerConfig(hidden=(128, 128), actor_lr=1e-3, critic_lr=1e-3, learn_per_stroke=32,
                       tau=5e-3)
    grid = ReproductionGrid(translation_min=-90, translation_max=90, translation_step=20)
    print("seed,baseline_strokes,reproduction_strokes,first10,threshold,seconds")
    for seed in args.seeds:
        t0 = time.perf_counter()

        def halfway(rec):
            r = rec.returns()
            return len(r) >= 20 and r[-10:].mean() >= 0.5 * r[:10].mean()

        base = train([PointMassEnv(PointMassConfig())], TD3(lc, seed=seed), None, args.budget,
                     stop_when=halfway)
        first = base.returns()[:10].mean()
        thr = 0.5 * first
        rep = train([PointMassEnv(PointMassConfig())], TD3(lc, seed=seed), grid, args.budget,
                    stop_when=lambda rec: strokes_to_threshold(rec, thr) is not None)
        print(f"{seed},{strokes_to_threshold(base, thr)},{strokes_to_threshold(rep, thr)},"
              f"{first:.4f},{thr:.4f},{time.perf_counter() - t0:.0f}", flush=True)


if __name__ == "__main__":
    main()
