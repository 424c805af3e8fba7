"""Time-ordered event queue with FIFO tie-breaking."""

from __future__ import annotations

import enum
import heapq
from typing import Any, NamedTuple


class EventKind(enum.IntEnum):
    DEVICE_ACTIVATION = 0
    RAO_OCCURS = 1
    TRAO_OCCURS = 2
    MSG2_TX = 3
    MSG2_DEADLINE = 4
    MSG3_TX = 5
    FEEDBACK = 6
    MSG4_DEADLINE = 7
    BACKOFF_EXPIRES = 8
    SCHEDULER_WAKEUP = 9


class Event(NamedTuple):
    subframe: int
    seq: int
    kind: EventKind
    payload: Any


class EventQueue:
    """Events pop in subframe order; equal subframes pop in insertion order."""

    def __init__(self):
        self._heap: list = []
        self._seq = 0

    def push(self, subframe: int, kind: EventKind, payload=None) -> Event:
        ev = Event(subframe, self._seq, kind, payload)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        return ev

    def pop(self) -> Event:
        return heapq.heappop(self._heap)

    def peek(self) -> Event | None:
        return self._heap[0] if self._heap else None

    def __len__(self):
        return len(self._heap)

    def __bool__(self):
        return bool(self._heap)
