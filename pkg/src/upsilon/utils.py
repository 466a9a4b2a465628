"""This module provides utility functions for seeded random streams, dyadic arithmetic and timing."""

from dataclasses import dataclass, field
import time

import numpy as np


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Random generator for the stream `keys` split off `seed`.

    The same (`seed`, `keys`) always give the same stream, whatever
    other streams were drawn before, so trials and blocks can be
    generated in any order (or concurrently) with identical results."""
    if seed < 0:
        raise ValueError(f'Seed must be non-negative: {seed}')
    sequence = np.random.SeedSequence([seed, *keys])
    return np.random.Generator(np.random.PCG64(sequence))


def floor_log2(x: int) -> int:
    """Largest j with 2**j <= x, for integer x >= 1."""
    if x < 1:
        raise ValueError(f'floor_log2 undefined for {x}')
    return x.bit_length() - 1


def ceil_pow2(x: float) -> int:
    """Smallest power of 2 greater than or equal to `x` (at least 1)."""
    power = 1
    while power < x:
        power *= 2
    return power


@dataclass
class Timer:
    """
    Wall-clock stopwatch used to time report sections.

    Attributes:
        laps: Elapsed seconds of each named section, in the order they were timed.
    """

    laps: dict = field(default_factory=dict)
    _start: float = 0.0

    def start(self):
        """Start (or restart) the stopwatch."""
        self._start = time.perf_counter()

    def lap(self, name: str) -> float:
        """Record the time since the last start or lap under `name`, and restart."""
        now = time.perf_counter()
        elapsed = now - self._start
        self.laps[name] = elapsed
        self._start = now
        return elapsed

    def total(self) -> float:
        """Sum of all recorded laps."""
        return sum(self.laps.values())
