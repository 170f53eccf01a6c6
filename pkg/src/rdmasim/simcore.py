"""Deterministic discrete-event core.

Time is an integer nanosecond count.  The event queue is a binary heap
of (timestamp, insertion sequence, callback, argument) tuples, so ties
dispatch in insertion order and runs with the same seed replay
identically.  Named random streams are derived from the run seed with a
stable hash, which keeps entities decoupled: adding draws to one stream
never perturbs another.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
import random
from typing import Any, Callable, Optional


class SimError(Exception):
    pass


class Engine:
    """Event loop with integer-nanosecond clock.

    heap and tick are public so inner loops can push events without the
    schedule() call overhead: heappush(eng.heap, (when, eng.tick(), fn, arg))
    with when >= eng.now.  schedule() stays the checked front door.
    """

    __slots__ = ("now", "heap", "tick", "_running")

    def __init__(self):
        self.now = 0
        self.heap: list = []
        self.tick = itertools.count().__next__
        self._running = False

    def schedule(self, when: int, fn: Callable[[Any], None], arg: Any = None) -> None:
        """Queue fn(arg) at absolute time when (>= now)."""
        if when < self.now:
            raise SimError(f"schedule at {when} before now {self.now}")
        heapq.heappush(self.heap, (when, self.tick(), fn, arg))

    def schedule_in(self, delay: int, fn: Callable[[Any], None], arg: Any = None) -> None:
        self.schedule(self.now + delay, fn, arg)

    def pending(self) -> int:
        return len(self.heap)

    def stop(self) -> None:
        self._running = False

    def run(self, until: Optional[int] = None) -> None:
        """Dispatch events until the queue empties, stop() is called, or
        the clock would pass until (events at until still run)."""
        heap = self.heap
        pop = heapq.heappop
        self._running = True
        if until is None:
            while heap and self._running:
                when, _, fn, arg = pop(heap)
                self.now = when
                fn(arg)
        else:
            while heap and self._running:
                if heap[0][0] > until:
                    break
                when, _, fn, arg = pop(heap)
                self.now = when
                fn(arg)
        self._running = False
        if until is not None and (not heap or heap[0][0] > until) and self.now < until:
            self.now = until


def stream_seed(seed: int, name: str) -> int:
    """Stable 64-bit sub-seed for a named stream of a run."""
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def stream(seed: int, name: str) -> random.Random:
    """Independent named RNG stream derived from the run seed."""
    return random.Random(stream_seed(seed, name))


def stable_choice_index(seed: int, key: str, n: int) -> int:
    """Deterministic index in [0, n) from (seed, key), independent of
    interpreter hash randomization."""
    digest = hashlib.sha256(f"{seed}:{key}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % n
