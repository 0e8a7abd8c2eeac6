"""Minimal in-process pub/sub bus.

Two independent instances ("A" and "B") stand in for the two middleware
worlds being bridged; topics are plain strings, namespaces do not overlap.
Callbacks run synchronously on the publisher's thread and are never invoked
while the subscriber table lock is held.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable


@dataclass(frozen=True)
class BusMessage:
    """One published message: a routing type id plus the full frame bytes."""

    type_id: int
    data: bytes


Subscriber = Callable[[BusMessage], None]


class Bus:
    def __init__(self, name: str) -> None:
        self.name = name
        self._subs: dict[str, list[Subscriber]] = {}
        self._lock = threading.Lock()

    def subscribe(self, topic: str, callback: Subscriber) -> None:
        with self._lock:
            self._subs.setdefault(topic, []).append(callback)

    def publish(self, topic: str, message: BusMessage) -> int:
        with self._lock:
            subs = list(self._subs.get(topic, ()))
        for cb in subs:
            cb(message)
        return len(subs)
