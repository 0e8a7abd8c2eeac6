import asyncio
import dataclasses
import json

import pytest

from teleopsim.config import load_config
from teleopsim.server import (CLOSE_BUSY, CLOSE_PROTOCOL, PROTOCOL_VERSION,
                              ProtocolVersionError, TeleopServer)

from conftest import CONFIGS


@pytest.fixture(scope="module")
def starlink():
    return load_config(CONFIGS / "starlink")


def fast_config():
    config = load_config(CONFIGS / "starlink")
    link = dataclasses.replace(config.link, propagation_delay_ms=50.0)
    return dataclasses.replace(config, link=link)


def step_sim_seconds(server, seconds):
    msgs = []
    steps = int(seconds * 1e9 / server.loop.step_ns)
    for _ in range(steps):
        msgs.extend(json.loads(m) for m in server.step())
    return msgs


class TestCommands:
    def test_feet_command_updates_source(self, starlink):
        server = TeleopServer(starlink)
        server.handle_command(json.dumps({
            "type": "cmd.feet", "pL": [0.25, 0.1], "pR": [0.0, -0.1],
            "yawL": 0.0, "yawR": 0.0,
        }))
        assert server.source.stance.p_left == (0.25, 0.1)

    def test_glove_command_checks_length(self, starlink):
        server = TeleopServer(starlink)
        with pytest.raises(ValueError, match="20"):
            server.handle_command(json.dumps({"type": "cmd.glove", "angles": [0.1]}))
        server.handle_command(json.dumps({"type": "cmd.glove", "angles": [0.1] * 20}))
        assert server.source.glove == (0.1,) * 20

    def test_malformed_json_rejected(self, starlink):
        server = TeleopServer(starlink)
        with pytest.raises(ValueError):
            server.handle_command("{nope")
        with pytest.raises(ValueError):
            server.handle_command(json.dumps({"type": "cmd.warp"}))
        with pytest.raises(ValueError):
            server.handle_command(json.dumps({"no_type": 1}))

    def test_version_mismatch_is_protocol_error(self, starlink):
        server = TeleopServer(starlink)
        with pytest.raises(ProtocolVersionError):
            server.handle_command(json.dumps({"type": "hello", "version": 99}))
        server.handle_command(json.dumps({"type": "hello", "version": PROTOCOL_VERSION}))


class TestSimulatedSession:
    def test_ping_round_trip_takes_configured_latency(self, starlink):
        # 500 ms each way: the pong surfaces after ~1.0 s of simulated time
        server = TeleopServer(starlink)
        server.handle_command(json.dumps({"type": "ping", "t": 123.25}))
        pongs = [m for m in step_sim_seconds(server, 1.2) if m["type"] == "pong"]
        assert len(pongs) == 1
        assert pongs[0]["t"] == 123.25
        # delivered only after both legs' propagation
        rtt_steps = None
        server2 = TeleopServer(starlink)
        server2.handle_command(json.dumps({"type": "ping", "t": 1.0}))
        for i in range(int(1.2e9 / server2.loop.step_ns)):
            if any(json.loads(m)["type"] == "pong" for m in server2.step()):
                rtt_steps = i
                break
        assert rtt_steps is not None
        rtt_s = rtt_steps * server2.loop.step_ns / 1e9
        assert 1.0 <= rtt_s <= 1.1

    def test_idle_operator_keeps_robot_still_and_bandwidth_low(self, starlink):
        server = TeleopServer(starlink)
        states = [m for m in step_sim_seconds(server, 3.0) if m["type"] == "state"]
        assert states, "state telemetry must flow"
        assert states[-1]["pose"] == [0.0, 0.0, 0.0]
        stats = json.loads(server.stats_message())
        assert stats["bps"] < 50_000  # decimated command path is tiny
        assert stats["drops"] == 0

    def test_feet_command_moves_robot_after_link_delay(self, starlink):
        server = TeleopServer(starlink)
        server.handle_command(json.dumps({
            "type": "cmd.feet", "pL": [0.23, 0.1], "pR": [0.0, -0.1],
            "yawL": 0.0, "yawR": 0.0,
        }))
        states = [m for m in step_sim_seconds(server, 2.0) if m["type"] == "state"]
        assert states[-1]["pose"][0] > 0.1
        # motion starts only after the one-way latency
        early = [s for s in states if s["t"] < 0.5]
        assert all(s["pose"][0] == 0.0 for s in early)

    def test_flood_fills_queue_and_drops(self, starlink):
        server = TeleopServer(starlink)
        server.handle_command(json.dumps({"type": "cmd.flood", "enabled": True}))
        step_sim_seconds(server, 4.0)
        stats = json.loads(server.stats_message())
        assert stats["queue_bytes"] > 100_000
        assert stats["drops"] > 0

    def test_live_session_is_recorded(self, starlink):
        server = TeleopServer(starlink)
        step_sim_seconds(server, 0.5)
        trace = server.source.recorded_trace()
        assert trace.rate_hz == pytest.approx(100.0, rel=1e-6)


@pytest.mark.filterwarnings("ignore::DeprecationWarning")
class TestWebSocket:
    def run_session(self, coro_factory):
        async def main():
            import websockets

            server = TeleopServer(fast_config())
            ready = asyncio.get_running_loop().create_future()
            task = asyncio.create_task(server.run(0, ready=ready))
            port = await ready
            try:
                return await asyncio.wait_for(coro_factory(websockets, port), timeout=20)
            finally:
                task.cancel()
                try:
                    await task
                except (asyncio.CancelledError, Exception):
                    pass
        return asyncio.run(main())

    def test_hello_and_ping_over_socket(self):
        async def session(websockets, port):
            import time
            async with websockets.connect(f"ws://127.0.0.1:{port}") as ws:
                hello = json.loads(await ws.recv())
                assert hello["type"] == "hello" and hello["version"] == PROTOCOL_VERSION
                t0 = time.monotonic()
                await ws.send(json.dumps({"type": "ping", "t": 42.0}))
                while True:
                    msg = json.loads(await ws.recv())
                    if msg["type"] == "pong":
                        rtt = time.monotonic() - t0
                        assert msg["t"] == 42.0
                        # 50 ms each way plus tick/transport overhead
                        assert 0.1 <= rtt < 2.0
                        return True
        assert self.run_session(session)

    def test_protocol_violation_closes_with_code(self):
        async def session(websockets, port):
            async with websockets.connect(f"ws://127.0.0.1:{port}") as ws:
                await ws.recv()  # hello
                await ws.send("{broken")
                try:
                    while True:
                        await ws.recv()
                except websockets.exceptions.ConnectionClosed as exc:
                    return exc.rcvd.code
        assert self.run_session(session) == CLOSE_PROTOCOL

    def test_second_operator_rejected(self):
        async def session(websockets, port):
            async with websockets.connect(f"ws://127.0.0.1:{port}") as first:
                await first.recv()
                try:
                    async with websockets.connect(f"ws://127.0.0.1:{port}") as second:
                        while True:
                            await second.recv()
                except websockets.exceptions.ConnectionClosed as exc:
                    return exc.rcvd.code
        assert self.run_session(session) == CLOSE_BUSY
