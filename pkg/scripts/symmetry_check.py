"""One coupled stroke, then the same stroke mirrored and rotated with gravity.

Prints the largest difference in normalized body state for each image.

    python3 scripts/symmetry_check.py --angles 90 36
"""
import argparse
import math
from dataclasses import replace

import numpy as np

from flyrl.fsi import FlyerSimulation
from flyrl.grid import Grid, GridSpec
from flyrl.scales import default_groups
from flyrl.structures import BodyState, StrokeSpec, rot


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--angles", type=float, nargs="+", default=[90.0, 36.0], help="degrees")
    p.add_argument("--nx", type=int, default=128)
    args = p.parse_args()
    G = default_groups()
    sim = FlyerSimulation(Grid(GridSpec(nx=args.nx, ny=args.nx)), G)
    spec = StrokeSpec(4.0, 0.6, 1.2, 1, 0.0, -1.5)
    body = BodyState(np.array([1.3, -0.7]), 0.2, np.array([0.3, -0.1]), 0.15)

    def fly(b, sp):
        return sim.run_stroke(sim.initial_state(b, le_x=sp.start_position), sp)[0].body

    def norm(b):
        return np.array([*(b.position / 1000), math.sin(b.theta), math.cos(b.theta),
                         *(b.velocity / G.flow_scale / 2), b.omega * G.omega_to_ref / 2])

    def image(b, R, th, om):
        return BodyState(R @ b.position, th, R @ b.velocity, om, R @ b.gravity_dir)

    ref = fly(body, spec)
    M = np.diag([-1.0, 1.0])
    got = fly(image(body, M, -body.theta, -body.omega), replace(spec, sign=-1, start_position=1.5))
    print(f"mirror: {np.max(np.abs(norm(got) - norm(image(ref, M, -ref.theta, -ref.omega)))):.3e}")
    for deg in args.angles:
        a = math.radians(deg)
        R = rot(a)
        got = fly(image(body, R, body.theta + a, body.omega), spec)
        want = image(ref, R, ref.theta + a, ref.omega)
        print(f"rotation {deg:g} deg: {np.max(np.abs(norm(got) - norm(want))):.3e}")


if __name__ == "__main__":
    main()
