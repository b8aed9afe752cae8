"""SplitMix64, the one generator used for every sampled quantity.

Reference constants (Steele, Lea & Flood 2014; Vigna's ``splitmix64.c``):
increment ``0x9E3779B97F4A7C15``, multipliers ``0xBF58476D1CE4E5B9`` and
``0x94D049BB133111EB``, shifts 30/27/31. Uniform doubles take the top 53
bits, so any implementation of the same recipe reproduces the draws exactly.
"""

from __future__ import annotations

import numpy as np

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1


def splitmix64_scalar(state: int) -> tuple[int, int]:
    """One step on a Python int: returns ``(new_state, output)``."""
    state = (state + GOLDEN_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return state, z ^ (z >> 31)


class SplitMix64:
    """Counter-based SplitMix64 stream; block draws are vectorized with numpy."""

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state, out = splitmix64_scalar(self.state)
        return out

    def u64(self, count: int) -> np.ndarray:
        if count < 0:
            raise ValueError("count must be non-negative")
        steps = np.arange(1, count + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(GOLDEN_GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
            z = z ^ (z >> np.uint64(31))
        self.state = (self.state + count * GOLDEN_GAMMA) & MASK64
        return z

    def uniform(self, count: int) -> np.ndarray:
        """Doubles in ``[0, 1)`` built from the top 53 bits of each draw."""
        return (self.u64(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53
