"""Named random substreams derived from one seed.

Each component draws from its own generator so that, e.g., changing the
number of exploration draws does not shift minibatch sampling.
"""
from __future__ import annotations

import zlib

import numpy as np

STREAMS = ("init", "exploration", "sampling", "target_noise", "env")


def _key(name):
    return zlib.crc32(name.encode("utf-8"))


class RngStreams:
    def __init__(self, seed: int, names=STREAMS):
        self.seed = int(seed)
        self._gens = {n: np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(self.seed, spawn_key=(_key(n),)))) for n in names}

    def __getitem__(self, name) -> np.random.Generator:
        return self._gens[name]

    def get_state(self):
        return {n: g.bit_generator.state for n, g in self._gens.items()}

    def set_state(self, state):
        for n, st in state.items():
            if n not in self._gens:
                self._gens[n] = np.random.Generator(np.random.PCG64())
            self._gens[n].bit_generator.state = st
