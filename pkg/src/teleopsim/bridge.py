"""Config-driven relay between the two buses with per-route decimation.

Each route names one endpoint on each bus, a direction, and a message type;
only declared types cross. Relaying is callback-driven: a message is handled
the instant it arrives, so forwarding latency is a small constant independent
of any configured rate. Optional decimation forwards at most one message per
1/f window, always the newest arrival (keep-latest), with the window timer
starting at the first arrival on the route.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .bus import Bus, BusMessage
from .clock import Clock
from .errors import ConfigError
from .messages import SUPPORTED_TYPES


class Direction(Enum):
    A_TO_B = "a_to_b"
    B_TO_A = "b_to_a"


@dataclass(frozen=True)
class BusEndpoint:
    bus: str  # "A" or "B"
    name: str

    def __post_init__(self) -> None:
        if self.bus not in ("A", "B"):
            raise ConfigError(f"endpoint bus must be 'A' or 'B', got {self.bus!r}")
        if not self.name:
            raise ConfigError("endpoint name must be non-empty")


@dataclass(frozen=True)
class BridgeRoute:
    endpoint_a: BusEndpoint
    endpoint_b: BusEndpoint
    direction: Direction
    message_type: int
    decimate_to_hz: float | None = None

    def __post_init__(self) -> None:
        if self.endpoint_a.bus == self.endpoint_b.bus:
            raise ConfigError(f"route {self.label()}: endpoints must be on distinct buses")
        if self.endpoint_a.bus != "A" or self.endpoint_b.bus != "B":
            raise ConfigError(f"route {self.label()}: endpoint_a lives on bus A, endpoint_b on bus B")
        if self.decimate_to_hz is not None and self.decimate_to_hz <= 0:
            raise ConfigError(f"route {self.label()}: decimate_to_hz must be > 0")

    def label(self) -> str:
        arrow = "->" if self.direction is Direction.A_TO_B else "<-"
        return f"A:{self.endpoint_a.name}{arrow}B:{self.endpoint_b.name}"

    @property
    def source(self) -> BusEndpoint:
        return self.endpoint_a if self.direction is Direction.A_TO_B else self.endpoint_b

    @property
    def dest(self) -> BusEndpoint:
        return self.endpoint_b if self.direction is Direction.A_TO_B else self.endpoint_a


def load_routes(entries: list[dict]) -> list[BridgeRoute]:
    """Validate route dicts (as parsed from the config file) into BridgeRoutes."""
    routes: list[BridgeRoute] = []
    seen_sources: set[tuple[str, str, Direction]] = set()
    for i, entry in enumerate(entries):
        try:
            ep_a = BusEndpoint("A", entry["a"])
            ep_b = BusEndpoint("B", entry["b"])
            direction = Direction(entry.get("direction", "a_to_b"))
            type_name = str(entry["message_type"]).lower()
        except KeyError as exc:
            raise ConfigError(f"route #{i}: missing key {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"route #{i}: {exc}") from exc
        if type_name not in SUPPORTED_TYPES:
            raise ConfigError(
                f"route A:{entry['a']}/B:{entry['b']}: unsupported message type {type_name!r} "
                f"(supported: {', '.join(sorted(SUPPORTED_TYPES))})"
            )
        route = BridgeRoute(ep_a, ep_b, direction, int(SUPPORTED_TYPES[type_name]),
                            entry.get("decimate_to_hz"))
        key = (route.source.bus, route.source.name, direction)
        if key in seen_sources:
            raise ConfigError(f"route {route.label()}: duplicate source endpoint")
        seen_sources.add(key)
        routes.append(route)
    return routes


@dataclass
class RouteStats:
    relayed: int = 0
    suppressed: int = 0
    errors: int = 0
    forward_latency_ns: list[int] = field(default_factory=list)


class _RouteState:
    def __init__(self, route: BridgeRoute) -> None:
        self.route = route
        self.period_ns = (
            round(1e9 / route.decimate_to_hz) if route.decimate_to_hz is not None else None
        )
        self.last_forward_ns: int | None = None
        self.stats = RouteStats()
        self.lock = threading.Lock()


ForwardSink = Callable[[BridgeRoute, BusMessage], None]


class Bridge:
    """Relays messages between bus A and bus B according to its routes.

    ``sink`` overrides where forwarded messages go (default: publish on the
    destination endpoint); the scenario runner uses it to push frames onto
    the emulated link instead.
    """

    def __init__(self, bus_a: Bus, bus_b: Bus, routes: list[BridgeRoute],
                 clock: Clock, sink: ForwardSink | None = None) -> None:
        self.bus_a = bus_a
        self.bus_b = bus_b
        self.clock = clock
        self._sink = sink if sink is not None else self._publish
        self._states = {route.label(): _RouteState(route) for route in routes}
        for state in self._states.values():
            src_bus = bus_a if state.route.source.bus == "A" else bus_b
            src_bus.subscribe(state.route.source.name, self._make_callback(state))

    def _publish(self, route: BridgeRoute, message: BusMessage) -> None:
        dest_bus = self.bus_a if route.dest.bus == "A" else self.bus_b
        dest_bus.publish(route.dest.name, message)

    def _make_callback(self, state: _RouteState):
        def on_message(message: BusMessage) -> None:
            self.relay(state.route, message, self.clock.now_ns())
        return on_message

    def relay(self, route: BridgeRoute, message: BusMessage, arrival_ns: int) -> bool:
        """Handle one arrival; returns True if it was forwarded."""
        state = self._states[route.label()]
        with state.lock:
            stats = state.stats
            if message.type_id != route.message_type:
                stats.errors += 1
                return False
            if state.period_ns is not None and state.last_forward_ns is not None:
                if arrival_ns - state.last_forward_ns < state.period_ns:
                    stats.suppressed += 1
                    return False
            t0 = time.perf_counter_ns()
            self._sink(route, message)
            stats.forward_latency_ns.append(time.perf_counter_ns() - t0)
            if state.period_ns is not None:
                state.last_forward_ns = arrival_ns
            stats.relayed += 1
            return True

    def stats(self) -> dict[str, RouteStats]:
        out: dict[str, RouteStats] = {}
        for label, state in self._states.items():
            with state.lock:
                s = state.stats
                out[label] = RouteStats(s.relayed, s.suppressed, s.errors,
                                        list(s.forward_latency_ns))
        return out
