"""Monotone clocks: exact simulated time for tests, wall time for live runs.

Simulated time is held as an exact rational so tick boundaries, rate-gate
slots, and frame counters never drift; ``1/60`` stays ``1/60`` no matter how
many ticks accumulate.  The wall clock reports monotonic time relative to
its construction so both clocks start near zero.
"""
from __future__ import annotations

import time
from fractions import Fraction

__all__ = ["SimulatedClock", "WallClock", "MICROSECONDS"]

MICROSECONDS = 1_000_000


class SimulatedClock:
    """Manually advanced clock; ``sleep_until`` jumps instead of waiting."""

    def __init__(self, start: Fraction = Fraction(0)):
        self._t = Fraction(start)

    @property
    def is_simulated(self) -> bool:
        return True

    def now(self) -> Fraction:
        return self._t

    def now_us(self) -> int:
        return int(self._t * MICROSECONDS)

    def advance(self, dt: Fraction) -> Fraction:
        dt = Fraction(dt)
        if dt < 0:
            raise ValueError("cannot advance a monotone clock backwards")
        self._t += dt
        return self._t

    def sleep_until(self, t: Fraction) -> None:
        t = Fraction(t)
        if t > self._t:
            self._t = t


class WallClock:
    """Monotonic wall time as a rational, zeroed at construction."""

    def __init__(self):
        self._t0_ns = time.monotonic_ns()

    @property
    def is_simulated(self) -> bool:
        return False

    def now(self) -> Fraction:
        return Fraction(time.monotonic_ns() - self._t0_ns, 10 ** 9)

    def now_us(self) -> int:
        return (time.monotonic_ns() - self._t0_ns) // 1000

    def sleep_until(self, t: Fraction) -> None:
        remaining = float(Fraction(t) - self.now())
        if remaining > 0:
            time.sleep(remaining)
