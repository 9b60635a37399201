"""Seeded virtual-time network simulator.

A single event queue owns the clock and all randomness, so a run is a pure
function of (scenario, seed). Links shape traffic with sampled latency, an
extra reorder delay, and duplication, while preserving first-in-first-out
delivery per link: the transport contract is reliable and ordered per
connection, so reordering only manifests across clients and duplicates always
trail their originals.
"""

from __future__ import annotations

import heapq
import itertools
import random
from dataclasses import dataclass
from typing import Any, Callable

from .errors import Timeout

FIFO_EPSILON = 1e-6  # ms; keeps per-link delivery strictly ordered


@dataclass(frozen=True)
class NetworkProfile:
    latency_ms: tuple[float, float] = (0.0, 0.0)  # uniform one-way latency
    reorder_prob: float = 0.0
    reorder_window_ms: float = 0.0  # extra delay sampled for reordered frames
    dup_prob: float = 0.0

    def __post_init__(self) -> None:
        lo, hi = self.latency_ms
        if lo < 0 or hi < lo:
            raise ValueError(f"bad latency range {self.latency_ms}")
        for name, p in (("reorder_prob", self.reorder_prob), ("dup_prob", self.dup_prob)):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0,1]")
        if self.reorder_window_ms < 0:
            raise ValueError("reorder_window_ms must be >= 0")


class VirtualNetwork:
    """Event queue + per-link traffic shaping under one seeded RNG."""

    def __init__(self, profile: NetworkProfile, seed: int = 0, max_events: int = 1_000_000):
        self.profile = profile
        self.rng = random.Random(seed)
        self.now = 0.0
        self.max_events = max_events
        self._heap: list[tuple[float, int, Callable[[], None]]] = []
        self._tiebreak = itertools.count()
        self._link_last: dict[str, float] = {}
        self.frames_sent = 0
        self.frames_delivered = 0
        self.frames_duplicated = 0

    def at(self, when: float, fn: Callable[[], None]) -> None:
        if when < self.now:
            when = self.now
        heapq.heappush(self._heap, (when, next(self._tiebreak), fn))

    def after(self, delay: float, fn: Callable[[], None]) -> None:
        self.at(self.now + delay, fn)

    def send(self, link: str, item: Any, deliver: Callable[[Any, float], None]) -> None:
        """Ship one frame over a named unidirectional link."""
        self.frames_sent += 1
        sent_at = self.now
        self._schedule_delivery(link, item, deliver, sent_at, self._shaped_delay())
        if self.rng.random() < self.profile.dup_prob:
            self.frames_duplicated += 1
            dup_delay = self._shaped_delay() + self.rng.uniform(0, self.profile.reorder_window_ms)
            self._schedule_delivery(link, item, deliver, sent_at, dup_delay)

    def _shaped_delay(self) -> float:
        lo, hi = self.profile.latency_ms
        delay = self.rng.uniform(lo, hi)
        if self.profile.reorder_window_ms > 0 and self.rng.random() < self.profile.reorder_prob:
            delay += self.rng.uniform(0, self.profile.reorder_window_ms)
        return delay

    def _schedule_delivery(
        self,
        link: str,
        item: Any,
        deliver: Callable[[Any, float], None],
        sent_at: float,
        delay: float,
    ) -> None:
        when = max(self.now + delay, self._link_last.get(link, 0.0) + FIFO_EPSILON)
        self._link_last[link] = when

        def fire() -> None:
            self.frames_delivered += 1
            deliver(item, sent_at)

        self.at(when, fire)

    def run(self) -> float:
        """Process events until quiescence (empty queue); returns final time."""
        processed = 0
        while self._heap:
            processed += 1
            if processed > self.max_events:
                raise Timeout(f"virtual network still busy after {self.max_events} events")
            when, _, fn = heapq.heappop(self._heap)
            self.now = when
            fn()
        return self.now
