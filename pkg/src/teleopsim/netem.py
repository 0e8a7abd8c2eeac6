"""Deterministic emulated point-to-point link.

Store-and-forward model with a single serializing server: a frame accepted at
time t starts serializing at max(t, busy_until), takes size*8/rate seconds,
then propagates for the configured one-way delay (plus optional uniform
jitter). Queue occupancy is the backlog of untransmitted bytes (whole queued
frames plus the unsent remainder of the frame on the serializer); a frame is
tail-dropped when admitting it would push the backlog past capacity.

All internal arithmetic is integer nanoseconds; with a fixed seed and a
simulated clock two runs produce identical delivery traces.
"""

from __future__ import annotations

import heapq
import random
import threading
from collections import deque
from dataclasses import dataclass, field

from .bandwidth import StreamSpec, stream_bandwidth
from .clock import Clock, SimClock, ms_to_ns, ns_to_s, s_to_ns
from .errors import TeleopsimError, ValidationError

THROUGHPUT_WINDOW_NS = 1_000_000_000


class OversizedFrameError(TeleopsimError):
    """Frame is larger than the queue can ever hold."""


@dataclass(frozen=True)
class LinkSpec:
    rate_bps: float
    propagation_delay_ms: float
    queue_capacity_bytes: int
    loss_prob: float = 0.0
    jitter_ms: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.rate_bps <= 0:
            raise ValidationError("rate_bps must be > 0")
        if self.propagation_delay_ms < 0:
            raise ValidationError("propagation delay must be >= 0")
        if self.queue_capacity_bytes < 0:
            raise ValidationError("queue capacity must be >= 0")
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ValidationError("loss_prob must be in [0, 1]")
        if self.jitter_ms < 0:
            raise ValidationError("jitter must be >= 0")


@dataclass(frozen=True)
class LinkStats:
    offered: int
    delivered: int
    dropped: int
    dropped_queue: int
    dropped_loss: int
    in_flight: int
    bytes_in_queue: int
    throughput_bps: float
    latency_ns: tuple[int, ...]

    @property
    def latency_s(self) -> tuple[float, ...]:
        return tuple(ns_to_s(v) for v in self.latency_ns)


@dataclass(order=True)
class _Flight:
    delivery_ns: int
    seq: int
    frame: bytes = field(compare=False)
    send_ns: int = field(compare=False)
    ser_start_ns: int = field(compare=False)
    ser_end_ns: int = field(compare=False)


class EmulatedLink:
    """One direction of the emulated channel."""

    def __init__(self, spec: LinkSpec, clock: Clock | None = None) -> None:
        self.spec = spec
        self.clock = clock if clock is not None else SimClock()
        self._rng = random.Random(spec.seed)
        self._prop_ns = ms_to_ns(spec.propagation_delay_ms)
        self._busy_until_ns = 0
        self._queue: deque[_Flight] = deque()  # accepted, serialization not finished
        self._queue_bytes = 0
        self._flying: list[_Flight] = []  # serialized, propagating (heap by delivery)
        self._seq = 0
        self._offered = 0
        self._delivered = 0
        self._dropped_queue = 0
        self._dropped_loss = 0
        self._latency_ns: list[int] = []
        self._window: deque[tuple[int, int]] = deque()  # (delivery_ns, bits)
        self._lock = threading.Lock()

    def _now(self, t_ns: int | None) -> int:
        return self.clock.now_ns() if t_ns is None else int(t_ns)

    def _migrate(self, now_ns: int) -> None:
        # frames whose serialization finished have left the queue
        while self._queue and self._queue[0].ser_end_ns <= now_ns:
            rec = self._queue.popleft()
            self._queue_bytes -= len(rec.frame)
            heapq.heappush(self._flying, rec)

    def _backlog_bytes(self, now_ns: int) -> float:
        """Untransmitted bytes: queued frames plus the serving frame's remainder."""
        total = 0.0
        for rec in self._queue:
            if rec.ser_start_ns >= now_ns:
                total += len(rec.frame)
            else:
                span = rec.ser_end_ns - rec.ser_start_ns
                frac = (rec.ser_end_ns - now_ns) / span if span else 0.0
                total += len(rec.frame) * frac
        return total

    def serialization_ns(self, size_bytes: int) -> int:
        return round(size_bytes * 8 * 1_000_000_000 / self.spec.rate_bps)

    def enqueue(self, frame: bytes, send_ns: int | None = None) -> bool:
        """Offer a frame; returns True if accepted, False if tail-dropped/lost."""
        with self._lock:
            now = self._now(send_ns)
            size = len(frame)
            if size > self.spec.queue_capacity_bytes:
                raise OversizedFrameError(
                    f"{size}-byte frame exceeds queue capacity {self.spec.queue_capacity_bytes}"
                )
            self._offered += 1
            if self.spec.loss_prob > 0.0 and self._rng.random() < self.spec.loss_prob:
                self._dropped_loss += 1
                return False
            self._migrate(now)
            if self._backlog_bytes(now) + size > self.spec.queue_capacity_bytes:
                self._dropped_queue += 1
                return False
            start = max(now, self._busy_until_ns)
            end = start + self.serialization_ns(size)
            self._busy_until_ns = end
            delivery = end + self._prop_ns
            if self.spec.jitter_ms > 0.0:
                delivery += ms_to_ns(self._rng.uniform(-self.spec.jitter_ms, self.spec.jitter_ms))
                # jitter undercuts neither the propagation floor nor serialization
                delivery = max(delivery, now + self._prop_ns, end)
            rec = _Flight(delivery, self._seq, frame, now, start, end)
            self._seq += 1
            if end <= now:
                heapq.heappush(self._flying, rec)
            else:
                self._queue.append(rec)
                self._queue_bytes += size
            return True

    def deliver_ready(self, now_ns: int | None = None) -> list[tuple[bytes, int]]:
        """Pop all frames due by now, in delivery order, as (frame, latency_ns)."""
        with self._lock:
            now = self._now(now_ns)
            self._migrate(now)
            ready: list[tuple[bytes, int]] = []
            # queued frames can be due too when serialization ends exactly at a
            # future migrate point; check both pools
            due_queue = [rec for rec in self._queue if rec.delivery_ns <= now]
            for rec in due_queue:
                self._queue.remove(rec)
                self._queue_bytes -= len(rec.frame)
                heapq.heappush(self._flying, rec)
            while self._flying and self._flying[0].delivery_ns <= now:
                rec = heapq.heappop(self._flying)
                latency = rec.delivery_ns - rec.send_ns
                self._delivered += 1
                self._latency_ns.append(latency)
                self._window.append((rec.delivery_ns, len(rec.frame) * 8))
                ready.append((rec.frame, latency))
            cutoff = now - THROUGHPUT_WINDOW_NS
            while self._window and self._window[0][0] <= cutoff:
                self._window.popleft()
            return ready

    def bytes_in_queue(self, now_ns: int | None = None) -> int:
        with self._lock:
            now = self._now(now_ns)
            self._migrate(now)
            return round(self._backlog_bytes(now))

    def stats(self, now_ns: int | None = None) -> LinkStats:
        with self._lock:
            now = self._now(now_ns)
            self._migrate(now)
            cutoff = now - THROUGHPUT_WINDOW_NS
            window_bits = sum(b for (t, b) in self._window if t > cutoff)
            return LinkStats(
                offered=self._offered,
                delivered=self._delivered,
                dropped=self._dropped_queue + self._dropped_loss,
                dropped_queue=self._dropped_queue,
                dropped_loss=self._dropped_loss,
                in_flight=len(self._queue) + len(self._flying),
                bytes_in_queue=round(self._backlog_bytes(now)),
                throughput_bps=window_bits / ns_to_s(THROUGHPUT_WINDOW_NS),
                latency_ns=tuple(self._latency_ns),
            )

    def drain_empty(self) -> bool:
        with self._lock:
            return not self._queue and not self._flying


@dataclass(frozen=True)
class SteadyState:
    stable: bool
    latency_s: float | None


def steady_state_latency(link: LinkSpec, stream: StreamSpec) -> SteadyState:
    """Analytic check: serialization + propagation if the stream fits, else unstable."""
    prop_s = link.propagation_delay_ms / 1e3
    if stream.rate_hz == 0:
        return SteadyState(True, prop_s)
    if stream_bandwidth(stream) < link.rate_bps:
        ser_s = stream.frame_bytes * 8 / link.rate_bps
        return SteadyState(True, ser_s + prop_s)
    return SteadyState(False, None)


@dataclass(frozen=True)
class StreamRun:
    latencies_s: tuple[float, ...]
    wait_s: tuple[float, ...]
    stats: LinkStats


def simulate_stream(link_spec: LinkSpec, frame_bytes: int, rate_hz: float,
                    duration_s: float, step_ms: int = 1) -> StreamRun:
    """Drive a periodic fixed-size stream through a fresh link on a simulated clock."""
    clock = SimClock()
    link = EmulatedLink(link_spec, clock)
    frame = bytes(frame_bytes)
    period_ns = round(1e9 / rate_hz) if rate_hz > 0 else None
    end_ns = s_to_ns(duration_s)
    step_ns = step_ms * 1_000_000
    next_send = 0
    latencies: list[int] = []
    waits: list[float] = []
    t = 0
    while t <= end_ns:
        clock.advance_to(t)
        if period_ns is not None and t >= next_send:
            before_busy = max(link._busy_until_ns, t)
            if link.enqueue(frame, t):
                waits.append(ns_to_s(before_busy - t))
            next_send += period_ns
        for _frame, lat in link.deliver_ready(t):
            latencies.append(lat)
        t += step_ns
    return StreamRun(
        latencies_s=tuple(ns_to_s(v) for v in latencies),
        wait_s=tuple(waits),
        stats=link.stats(t),
    )
