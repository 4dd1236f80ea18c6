"""
Portable seeded random numbers.

A 64-bit linear congruential generator

    state <- (a * state + c) mod 2^64,  a = 6364136223846793005,
                                        c = 1442695040888963407,

with uniform output (state >> 11) * 2^-53 in [0, 1). The first output is
taken after one step from the seed. The recurrence is simple enough to
reproduce in any language, so seeded test fields are portable.
"""

from __future__ import annotations

import numpy as np

MULTIPLIER = 6364136223846793005
INCREMENT = 1442695040888963407
MASK = (1 << 64) - 1


class LCG:
    def __init__(self, seed: int = 0):
        self.state = int(seed) & MASK

    def next_u64(self) -> int:
        self.state = (MULTIPLIER * self.state + INCREMENT) & MASK
        return self.state

    def uniform(self, n: int | None = None):
        if n is None:
            return (self.next_u64() >> 11) * 2.0**-53
        return np.array([(self.next_u64() >> 11) * 2.0**-53 for _ in range(n)])

    def symmetric(self, n: int) -> np.ndarray:
        """n values 2u - 1 in [-1, 1)."""
        return 2.0 * self.uniform(n) - 1.0


def random_coefficients(n: int, seed: int) -> np.ndarray:
    return LCG(seed).symmetric(n)


def random_band_limited(domain, m: int, seed: int):
    """Field with LCG coefficients 2u - 1 on the first m modes."""
    from .domain import synthesize

    return synthesize(domain, random_coefficients(m, seed))
