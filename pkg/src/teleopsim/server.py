"""WebSocket service for the operator console.

JSON text frames over a WebSocket, schema version 1:

  server -> client
    hello {version, config, link:{rate_bps, propagation_delay_ms}}
    state {t, pose:[x,y,theta], triplet:[v,omega,v_lat], q:[...]}
    stats {t, bps, latency_ms, queue_bytes, drops}
    pong  {t}
  client -> server
    cmd.feet  {pL:[x,y], pR:[x,y], yawL, yawR}
    cmd.glove {angles:[...]}
    cmd.flood {enabled, rate_hz?, payload_bytes?}   # synthetic un-decimated load
    ping      {t}

Commands cross the emulated uplink before reaching the simulated robot and
state/pong frames cross the downlink on the way back, so the operator
experiences the configured latency; only the stats side-channel is direct.
Protocol violations close the connection with a coded reason (4001 version
mismatch, 4002 malformed message, 4003 operator slot busy).
"""

from __future__ import annotations

import asyncio
import json
import logging
import struct
import time

import numpy as np

from .clock import ns_to_s
from .config import ScenarioConfig
from .locomotion import FootStance
from .messages import Framer, MessageType, split_frame, unpack_f32
from .scenario import LiveSource, Pipeline, ScenarioLoop
from .trace import save_trace

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
TICK_S = 0.02
STATS_PERIOD_S = 0.2
FLOOD_DEFAULT_RATE_HZ = 100.0
FLOOD_DEFAULT_PAYLOAD = 12480  # the legacy per-finger stream this stack replaced

CLOSE_VERSION = 4001
CLOSE_PROTOCOL = 4002
CLOSE_BUSY = 4003


class ProtocolVersionError(ValueError):
    pass


class TeleopServer:
    def __init__(self, config: ScenarioConfig, glove_actuators: int = 5,
                 record_path: str | None = None) -> None:
        self.config = config
        self.pipeline = Pipeline(config, glove_actuators)
        self.loop = ScenarioLoop(self.pipeline)
        idle = FootStance(
            tuple(config.avatar.locomotion.nominal_left),
            tuple(config.avatar.locomotion.nominal_right),
        )
        self.source = LiveSource(config.avatar.glove_map.glove_joints, idle)
        self.record_path = record_path
        self._default_hand = tuple(float(v) for v in self.pipeline.initial_ee.pos)
        self._sample_period_ns = round(1e9 / config.timing.trace_rate_hz)
        self._next_sample = 0
        self._state_period_ns = round(1e9 / config.timing.state_rate_hz)
        self._next_state_out = 0
        self._state_framer = Framer(MessageType.STATE, self.pipeline.clock)
        self._ping_framer = Framer(MessageType.PING, self.pipeline.clock)
        self._pong_framer = Framer(MessageType.PONG, self.pipeline.clock)
        # synthetic un-decimated load rides a type no consumer subscribes to
        self._flood_framer = Framer(MessageType.JOINT_REFS, self.pipeline.clock)
        self._flood_enabled = False
        self._flood_rate_hz = FLOOD_DEFAULT_RATE_HZ
        self._flood_payload = bytes(FLOOD_DEFAULT_PAYLOAD)
        self._next_flood = 0
        self._outbound: asyncio.Queue[str] = asyncio.Queue()
        self._operator = None
        self.pipeline.delivery_hooks[int(MessageType.PING)] = self._bounce_ping

    # ---- simulation ------------------------------------------------------

    def _bounce_ping(self, frame: bytes) -> None:
        _, payload = split_frame(frame)
        self.pipeline.downlink.enqueue(self._pong_framer.frame(payload))

    def _enqueue_state(self) -> None:
        x, y, theta = self.pipeline.robot.base_pose
        v, omega, v_lat = self.pipeline.latest_triplet.as_tuple()
        values = [x, y, theta, v, omega, v_lat, *self.pipeline.robot.q_arm]
        self.pipeline.downlink.enqueue(self._state_framer.frame_floats(*values))

    def step(self) -> list[str]:
        """One simulation step; returns JSON messages that left the downlink."""
        t = self.loop.t_ns
        if self._flood_enabled and t >= self._next_flood:
            self.pipeline.uplink.enqueue(self._flood_framer.frame(self._flood_payload))
            self._next_flood = t + round(1e9 / self._flood_rate_hz)
        samples = []
        if t >= self._next_sample:
            samples.append(self.source.sample(ns_to_s(t), self._default_hand))
            self._next_sample += self._sample_period_ns
        loop_msgs: list[str] = []
        if t >= self._next_state_out:
            self._enqueue_state()
            self._next_state_out += self._state_period_ns
        self.loop.tick(samples)
        for frame, _latency in self.pipeline.downlink.deliver_ready():
            header, payload = split_frame(frame)
            if header.type_id == MessageType.STATE:
                vals = unpack_f32(payload)
                loop_msgs.append(json.dumps({
                    "type": "state",
                    "t": ns_to_s(self.loop.t_ns),
                    "pose": list(vals[0:3]),
                    "triplet": list(vals[3:6]),
                    "q": list(vals[6:]),
                }))
            elif header.type_id == MessageType.PONG:
                (t_client,) = struct.unpack("<d", payload)
                loop_msgs.append(json.dumps({"type": "pong", "t": t_client}))
        return loop_msgs

    def stats_message(self) -> str:
        stats = self.pipeline.uplink.stats()
        recent = stats.latency_ns[-50:]
        latency_ms = float(np.mean(recent)) / 1e6 if recent else None
        return json.dumps({
            "type": "stats",
            "t": ns_to_s(self.loop.t_ns),
            "bps": stats.throughput_bps,
            "latency_ms": latency_ms,
            "queue_bytes": stats.bytes_in_queue,
            "drops": stats.dropped,
        })

    # ---- protocol ----------------------------------------------------------

    def handle_command(self, raw: str) -> None:
        """Apply one client message; raises ValueError on protocol violations."""
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValueError(f"not valid JSON: {exc}") from exc
        if not isinstance(msg, dict) or "type" not in msg:
            raise ValueError("message must be an object with a 'type'")
        kind = msg["type"]
        if kind == "cmd.feet":
            try:
                self.source.stance = FootStance(
                    (float(msg["pL"][0]), float(msg["pL"][1])),
                    (float(msg["pR"][0]), float(msg["pR"][1])),
                    float(msg.get("yawL", 0.0)),
                    float(msg.get("yawR", 0.0)),
                )
            except (KeyError, TypeError, IndexError) as exc:
                raise ValueError(f"bad cmd.feet: {exc}") from exc
        elif kind == "cmd.glove":
            angles = msg.get("angles")
            expected = self.config.avatar.glove_map.glove_joints
            if not isinstance(angles, list) or len(angles) != expected:
                raise ValueError(f"cmd.glove needs {expected} angles")
            self.source.glove = tuple(float(a) for a in angles)
        elif kind == "cmd.flood":
            self._flood_enabled = bool(msg.get("enabled", False))
            self._flood_rate_hz = float(msg.get("rate_hz", FLOOD_DEFAULT_RATE_HZ))
            payload = int(msg.get("payload_bytes", FLOOD_DEFAULT_PAYLOAD))
            self._flood_payload = bytes(payload)
            self._next_flood = self.loop.t_ns
        elif kind == "ping":
            t_client = float(msg.get("t", 0.0))
            self.pipeline.uplink.enqueue(self._ping_framer.frame(struct.pack("<d", t_client)))
        elif kind == "hello":
            if int(msg.get("version", -1)) != PROTOCOL_VERSION:
                raise ProtocolVersionError(f"server speaks version {PROTOCOL_VERSION}")
        else:
            raise ValueError(f"unknown message type {kind!r}")

    def hello_message(self) -> str:
        return json.dumps({
            "type": "hello",
            "version": PROTOCOL_VERSION,
            "config": self.config.name,
            "link": {
                "rate_bps": self.config.link.rate_bps,
                "propagation_delay_ms": self.config.link.propagation_delay_ms,
            },
        })

    # ---- asyncio wiring ------------------------------------------------

    async def _ticker(self) -> None:
        stats_every = max(1, round(STATS_PERIOD_S / TICK_S))
        tick_count = 0
        wall0 = time.monotonic_ns()
        # keep simulated time locked to wall time; cap catch-up bursts so a
        # stall cannot trigger a death spiral
        max_batch = max(1, round(5 * TICK_S * 1e9 / self.loop.step_ns))
        while True:
            await asyncio.sleep(TICK_S)
            owed = time.monotonic_ns() - wall0 - self.loop.t_ns
            steps = min(int(owed // self.loop.step_ns), max_batch)
            for _ in range(max(0, steps)):
                for msg in self.step():
                    await self._outbound.put(msg)
            tick_count += 1
            if tick_count % stats_every == 0:
                await self._outbound.put(self.stats_message())

    async def _sender(self) -> None:
        while True:
            msg = await self._outbound.get()
            ws = self._operator
            if ws is not None:
                try:
                    await ws.send(msg)
                except Exception:  # connection went away between ticks
                    pass

    async def _handler(self, websocket) -> None:
        if self._operator is not None:
            await websocket.close(CLOSE_BUSY, "operator slot busy")
            return
        self._operator = websocket
        log.info("operator connected")
        try:
            await websocket.send(self.hello_message())
            async for raw in websocket:
                try:
                    self.handle_command(raw)
                except ProtocolVersionError as exc:
                    await websocket.close(CLOSE_VERSION, str(exc))
                    return
                except ValueError as exc:
                    await websocket.close(CLOSE_PROTOCOL, str(exc)[:120])
                    return
        finally:
            self._operator = None
            log.info("operator disconnected")
            if self.record_path and self.source.recorded:
                save_trace(self.source.recorded_trace(), self.record_path)
                log.info("session recorded to %s", self.record_path)

    async def run(self, port: int, host: str = "127.0.0.1", ready=None) -> None:
        import websockets

        ticker = asyncio.create_task(self._ticker())
        sender = asyncio.create_task(self._sender())
        try:
            async with websockets.serve(self._handler, host, port) as server:
                bound = server.sockets[0].getsockname()[1]
                log.info("serving operator console on ws://%s:%d", host, bound)
                if ready is not None:
                    ready.set_result(bound)
                await asyncio.Future()
        finally:
            ticker.cancel()
            sender.cancel()


def serve(config: ScenarioConfig, port: int, host: str = "127.0.0.1",
          record_path: str | None = None) -> None:
    """Run the operator console service until interrupted."""
    server = TeleopServer(config, record_path=record_path)
    try:
        asyncio.run(server.run(port, host))
    except KeyboardInterrupt:
        pass
