"""Clock abstraction: simulated (explicitly stepped) or wall time.

All timestamps in the stack are integer nanoseconds so that simulated and
wall clocks interchange and simulated runs are exactly reproducible.
"""

from __future__ import annotations

import time
from typing import Protocol, runtime_checkable


@runtime_checkable
class Clock(Protocol):
    def now_ns(self) -> int: ...


class SimClock:
    """Deterministic clock that advances only via explicit steps."""

    def __init__(self, start_ns: int = 0) -> None:
        self._now_ns = int(start_ns)

    def now_ns(self) -> int:
        return self._now_ns

    def advance_ns(self, delta_ns: int) -> int:
        if delta_ns < 0:
            raise ValueError("clock cannot move backwards")
        self._now_ns += int(delta_ns)
        return self._now_ns

    def advance_to(self, t_ns: int) -> int:
        if t_ns < self._now_ns:
            raise ValueError("clock cannot move backwards")
        self._now_ns = int(t_ns)
        return self._now_ns


class WallClock:
    """Monotonic wall clock for interactive sessions."""

    def __init__(self) -> None:
        self._origin = time.monotonic_ns()

    def now_ns(self) -> int:
        return time.monotonic_ns() - self._origin


NS_PER_MS = 1_000_000
NS_PER_S = 1_000_000_000


def s_to_ns(seconds: float) -> int:
    return round(seconds * NS_PER_S)


def ms_to_ns(millis: float) -> int:
    return round(millis * NS_PER_MS)


def ns_to_s(ns: int) -> float:
    return ns / NS_PER_S
