"""Counter-based random streams.

Every draw is addressed by ``(seed, purpose, step, query, rollout)`` and an
in-stream position, so the numbers a rollout sees never depend on the order
in which rollouts are generated.
"""

from __future__ import annotations

import numpy as np

SAMPLING = 0
REWARD = 1

_MASK64 = (1 << 64) - 1


class CounterRNG:
    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64

    def uniforms(self, step: int, query: int, rollout: int, n: int, purpose: int = SAMPLING) -> np.ndarray:
        # word 0 of the Philox counter is the in-stream position; the
        # addressing words sit above it so streams cannot overlap
        bitgen = np.random.Philox(
            key=self.seed | (int(purpose) << 64),
            counter=[0, int(rollout), int(query), int(step)],
        )
        return np.random.Generator(bitgen).random(n)
