"""Closed-loop scenario runner.

Wires operator input (a scripted trace or a live session) through the
pipeline: input samples are framed and published on bus A, the bridge
decimates and pushes frames onto the emulated uplink, delivered frames are
published on bus B where the robot-side consumers retarget hands, solve IK
for the arm, and turn foot stances into base velocity triplets for the
simulated robot. Trace mode runs on a simulated clock stepped at a fixed
1 ms (configurable) period and is bit-reproducible for a fixed seed; live
mode shares the whole pipeline and differs only in where samples come from.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bandwidth import budget_report, stream_bandwidth
from .bridge import Bridge, BridgeRoute
from .bus import Bus, BusMessage
from .clock import SimClock, ns_to_s, s_to_ns
from .config import ScenarioConfig
from .errors import ConfigError
from .geometry import Transform, quat_to_rot, rot_to_quat
from .hands import HandRetargeter
from .ik import (IkResult, IkTask, ReferenceDifferentiator, TaskKind, apply_calibration,
                 calibrate, model_gravity, solve_ik)
from .kinematics import forward_kinematics
from .locomotion import DiffDriveBase, FootStance, VelocityTriplet, ZERO_TRIPLET, compute_triplet
from .messages import (Framer, Hand, HandFrame, MessageType, WearableBatch, decode,
                       decode_vector, parse_header)
from .netem import EmulatedLink, steady_state_latency
from .robot import SimRobot
from .trace import OperatorTrace, TraceSample, save_trace


TRIPLET_TOPIC = "base/triplet"
JOINT_REFS_TOPIC = "arm/refs"


class TraceSource:
    """Feeds samples from a recorded trace at their own timestamps."""

    def __init__(self, trace: OperatorTrace) -> None:
        self.trace = trace
        self._i = 0

    def next_time_ns(self) -> int | None:
        if self._i >= len(self.trace.samples):
            return None
        return s_to_ns(self.trace.samples[self._i].t)

    def pop(self) -> TraceSample:
        sample = self.trace.samples[self._i]
        self._i += 1
        return sample

    @property
    def exhausted(self) -> bool:
        return self._i >= len(self.trace.samples)

    @property
    def end_ns(self) -> int:
        return s_to_ns(self.trace.duration_s)


class LiveSource:
    """Sample-and-hold of the most recent operator commands.

    The pipeline samples it at the configured trace rate, so a recorded live
    session replays through run_scenario with an identical trajectory.
    """

    def __init__(self, glove_joints: int, idle_stance: FootStance) -> None:
        self.stance = idle_stance
        self.glove = tuple(0.0 for _ in range(glove_joints))
        self.hand_pos: tuple[float, float, float] | None = None
        self.recorded: list[TraceSample] = []

    def sample(self, t_s: float, default_hand: tuple[float, float, float]) -> TraceSample:
        hand = self.hand_pos if self.hand_pos is not None else default_hand
        sample = TraceSample(t_s, self.stance, hand, self.glove)
        self.recorded.append(sample)
        return sample

    def recorded_trace(self) -> OperatorTrace:
        return OperatorTrace(tuple(self.recorded))


@dataclass
class _StreamCounter:
    offered_frames: int = 0
    offered_bytes: int = 0
    delivered_frames: int = 0
    delivered_bytes: int = 0
    latency_ns: list[int] = field(default_factory=list)


def _percentiles_ms(samples_ns: list[int]) -> dict:
    if not samples_ns:
        return {"count": 0}
    arr = np.array(samples_ns, dtype=float) / 1e6
    return {
        "count": len(samples_ns),
        "mean_ms": float(np.mean(arr)),
        "p50_ms": float(np.percentile(arr, 50)),
        "p95_ms": float(np.percentile(arr, 95)),
        "min_ms": float(np.min(arr)),
        "max_ms": float(np.max(arr)),
    }


class Pipeline:
    """Everything between the operator's input device and the simulated robot."""

    def __init__(self, config: ScenarioConfig, glove_actuators: int = 5) -> None:
        self.config = config
        self.clock = SimClock()
        self.glove_actuators = glove_actuators
        avatar = config.avatar

        self.bus_a = Bus("A")
        self.bus_b = Bus("B")
        self.uplink = EmulatedLink(config.link, self.clock)
        # robot -> operator direction (state feedback, pongs); independent jitter/loss draws
        from dataclasses import replace as _replace
        self.downlink = EmulatedLink(_replace(config.link, seed=config.link.seed + 1), self.clock)
        self.bridge = Bridge(self.bus_a, self.bus_b, list(config.routes), self.clock,
                             sink=self._bridge_sink)
        self._dest_topic = {r.message_type: r.dest.name for r in config.routes}
        self._source_topic = {r.message_type: r.source.name for r in config.routes}
        self._framers = {
            t: Framer(t, self.clock)
            for t in (MessageType.WEARABLE, MessageType.FEET, MessageType.TRACKER,
                      MessageType.TRIPLET, MessageType.JOINT_REFS)
        }

        base = DiffDriveBase(avatar.wheel_radius, avatar.track)
        self.robot = SimRobot(avatar.robot, avatar.chain, avatar.coupling.n_full, base)
        self.retargeter = HandRetargeter(avatar.coupling, avatar.glove_map)
        self._differentiator = ReferenceDifferentiator()
        self.q_ik = self.robot.q_arm.copy()
        frames0 = forward_kinematics(avatar.chain, self.q_ik)
        self.initial_ee = frames0[avatar.chain.n]
        self._hold_gravity = {
            t.frame: model_gravity(avatar.chain, self.q_ik, t.frame, frames0)
            for t in avatar.ik_tasks if t.source == "hold_initial"
        }
        self._calibration = None
        self._latest_tracker: Transform | None = None
        self.latest_triplet: VelocityTriplet = ZERO_TRIPLET
        self.triplet_nonzero = 0
        self.ik_results: list[IkResult] = []

        self.counters: dict[int, _StreamCounter] = {}
        self.delivery_hooks: dict[int, object] = {}  # type_id -> callable(frame)
        self._waypoint_next = 0
        self.waypoint_hits: list[float] = []

        for type_id, topic in self._dest_topic.items():
            if type_id == MessageType.WEARABLE:
                self.bus_b.subscribe(topic, self._on_wearable)
            elif type_id == MessageType.FEET:
                self.bus_b.subscribe(topic, self._on_feet)
            elif type_id == MessageType.TRACKER:
                self.bus_b.subscribe(topic, self._on_tracker)
        # robot-side internal streams: the locomotion triplet and the arm
        # references travel as typed bus messages, not direct calls
        self.bus_b.subscribe(TRIPLET_TOPIC, self._on_triplet)
        self.bus_b.subscribe(JOINT_REFS_TOPIC, self._on_joint_refs)

    # ---- operator side -------------------------------------------------

    def _bridge_sink(self, route: BridgeRoute, message: BusMessage) -> None:
        counter = self.counters.setdefault(message.type_id, _StreamCounter())
        counter.offered_frames += 1
        counter.offered_bytes += len(message.data)
        self.uplink.enqueue(message.data)

    def feed_sample(self, sample: TraceSample) -> None:
        """Publish one operator sample on bus A (bridge callbacks fire inline)."""
        glove = sample.glove
        zeros = (0.0,) * self.glove_actuators
        batch = WearableBatch(tuple(
            HandFrame(hand, glove, zeros, zeros) for hand in (Hand.LEFT, Hand.RIGHT)
        ))
        frame = self._framers[MessageType.WEARABLE].frame_batch(batch)
        self._publish_a(MessageType.WEARABLE, frame)

        stance = sample.stance
        feet = self._framers[MessageType.FEET].frame_floats(
            stance.p_left[0], stance.p_left[1], stance.yaw_left,
            stance.p_right[0], stance.p_right[1], stance.yaw_right,
        )
        self._publish_a(MessageType.FEET, feet)

        quat = rot_to_quat(self.initial_ee.rot)
        tracker = self._framers[MessageType.TRACKER].frame_floats(
            *sample.hand_pos, *quat,
        )
        self._publish_a(MessageType.TRACKER, tracker)

    def _publish_a(self, type_id: MessageType, frame: bytes) -> None:
        topic = self._source_topic.get(int(type_id))
        if topic is not None:
            self.bus_a.publish(topic, BusMessage(int(type_id), frame))

    # ---- link robot side -----------------------------------------------

    def pump_deliveries(self) -> None:
        for frame, latency_ns in self.uplink.deliver_ready():
            header = parse_header(frame)
            counter = self.counters.setdefault(header.type_id, _StreamCounter())
            counter.delivered_frames += 1
            counter.delivered_bytes += len(frame)
            counter.latency_ns.append(latency_ns)
            topic = self._dest_topic.get(header.type_id)
            if topic is not None:
                self.bus_b.publish(topic, BusMessage(header.type_id, frame))
            elif (hook := self.delivery_hooks.get(header.type_id)) is not None:
                hook(frame)

    def _on_wearable(self, message: BusMessage) -> None:
        batch = decode(message.data)
        if not batch.hands:
            return
        left = next((h for h in batch.hands if h.hand_id is Hand.LEFT), batch.hands[0])
        self.robot.set_hand(self.retargeter.full_joints(np.array(left.joint_angles)))

    def _on_feet(self, message: BusMessage) -> None:
        _, vals = decode_vector(message.data, MessageType.FEET, 6)
        stance = FootStance((vals[0], vals[1]), (vals[3], vals[4]), vals[2], vals[5])
        triplet = compute_triplet(stance, self.config.avatar.locomotion)
        frame = self._framers[MessageType.TRIPLET].frame_floats(*triplet.as_tuple())
        self.bus_b.publish(TRIPLET_TOPIC, BusMessage(int(MessageType.TRIPLET), frame))

    def _on_triplet(self, message: BusMessage) -> None:
        _, vals = decode_vector(message.data, MessageType.TRIPLET, 3)
        triplet = VelocityTriplet(*vals)
        if not triplet.is_zero():
            self.triplet_nonzero += 1
        self.latest_triplet = triplet
        self.robot.set_triplet(triplet)

    def _on_tracker(self, message: BusMessage) -> None:
        _, vals = decode_vector(message.data, MessageType.TRACKER, 7)
        pose = Transform(quat_to_rot(np.array(vals[3:7])), np.array(vals[0:3]))
        if self._calibration is None:
            self._calibration = calibrate(pose, self.robot.ee_pose())
        self._latest_tracker = pose

    # ---- control ticks ---------------------------------------------------

    def ik_tick(self, dt_s: float) -> None:
        if self._calibration is None or self._latest_tracker is None:
            return
        target = apply_calibration(self._calibration, self._latest_tracker)
        tasks = []
        for tc in self.config.avatar.ik_tasks:
            if tc.kind is TaskKind.CARTESIAN:
                tasks.append(IkTask.cartesian(tc.frame, target, tc.weight))
            else:
                tasks.append(IkTask.gravity(tc.frame, self._hold_gravity[tc.frame], tc.weight))
        result = solve_ik(self.config.avatar.chain, tasks, self.q_ik,
                          self.config.avatar.ik_params)
        self.q_ik = result.q
        self.ik_results.append(result)
        q, dq, ddq = self._differentiator.push(result.q, dt_s)
        frame = self._framers[MessageType.JOINT_REFS].frame_floats(*q, *dq, *ddq)
        self.bus_b.publish(JOINT_REFS_TOPIC, BusMessage(int(MessageType.JOINT_REFS), frame))

    def _on_joint_refs(self, message: BusMessage) -> None:
        _, vals = decode_vector(message.data, MessageType.JOINT_REFS)
        n = len(vals) // 3
        q = np.array(vals[:n])
        dq = np.array(vals[n:2 * n])
        ddq = np.array(vals[2 * n:])
        self.robot.set_arm_refs(q, dq, ddq)

    def check_waypoints(self) -> None:
        if self._waypoint_next >= len(self.config.waypoints):
            return
        target = np.array(self.config.waypoints[self._waypoint_next])
        ee = self.robot.ee_pose().pos
        if float(np.linalg.norm(ee - target)) <= self.config.waypoint_tolerance_m:
            self.waypoint_hits.append(ns_to_s(self.clock.now_ns()))
            self._waypoint_next += 1


class ScenarioLoop:
    """Fixed-step driver shared by trace mode, live mode, and the server."""

    def __init__(self, pipeline: Pipeline) -> None:
        self.pipeline = pipeline
        timing = pipeline.config.timing
        self.step_ns = timing.step_ms * 1_000_000
        self._ik_period_ns = round(1e9 / timing.ik_rate_hz)
        self._ik_dt_s = 1.0 / timing.ik_rate_hz
        self._state_period_ns = round(1e9 / timing.state_rate_hz)
        self._next_ik = 0
        self._next_state = 0
        self.trajectory: list[tuple[float, float, float, float]] = []
        self.t_ns = 0

    def tick(self, samples: list[TraceSample]) -> None:
        """One simulation step at the current t_ns; call sites own sample timing."""
        t = self.t_ns
        pipeline = self.pipeline
        pipeline.clock.advance_to(t)
        for sample in samples:
            pipeline.feed_sample(sample)
        pipeline.pump_deliveries()
        if t >= self._next_ik:
            pipeline.ik_tick(self._ik_dt_s)
            self._next_ik += self._ik_period_ns
        if t >= self._next_state:
            x, y, theta = pipeline.robot.base_pose
            self.trajectory.append((ns_to_s(t), x, y, theta))
            self._next_state += self._state_period_ns
        pipeline.robot.step(self.step_ns / 1e9)
        pipeline.check_waypoints()
        self.t_ns += self.step_ns


def run_scenario(config: ScenarioConfig, trace: OperatorTrace,
                 glove_actuators: int = 5) -> dict:
    """Run a scripted trace through the pipeline; returns the report dict."""
    if trace.glove_joints != config.avatar.glove_map.glove_joints:
        raise ConfigError(
            f"trace has {trace.glove_joints} glove joints, "
            f"avatar glove_map expects {config.avatar.glove_map.glove_joints}"
        )
    pipeline = Pipeline(config, glove_actuators)
    source = TraceSource(trace)
    loop = ScenarioLoop(pipeline)
    hard_end = source.end_ns + s_to_ns(config.timing.max_drain_s)

    while True:
        t = loop.t_ns
        samples: list[TraceSample] = []
        while (nt := source.next_time_ns()) is not None and nt <= t:
            samples.append(source.pop())
        loop.tick(samples)
        if source.exhausted and t >= source.end_ns and pipeline.uplink.drain_empty():
            break
        if t >= hard_end:
            break

    return build_report(config, pipeline, loop.trajectory, duration_s=ns_to_s(loop.t_ns))


def run_live(config: ScenarioConfig, source: LiveSource, duration_s: float,
             on_step=None, glove_actuators: int = 5) -> dict:
    """Drive the pipeline from a LiveSource for a fixed duration.

    ``on_step(t_ns, source)`` runs before each step so a caller can script
    command changes; the source records every sample it serves, so the same
    session replays through run_scenario.
    """
    pipeline = Pipeline(config, glove_actuators)
    loop = ScenarioLoop(pipeline)
    sample_period_ns = round(1e9 / config.timing.trace_rate_hz)
    next_sample = 0
    end_ns = s_to_ns(duration_s)
    default_hand = tuple(float(v) for v in pipeline.initial_ee.pos)

    while loop.t_ns <= end_ns:
        if on_step is not None:
            on_step(loop.t_ns, source)
        samples: list[TraceSample] = []
        if loop.t_ns >= next_sample:
            samples.append(source.sample(ns_to_s(loop.t_ns), default_hand))
            next_sample += sample_period_ns
        loop.tick(samples)

    return build_report(config, pipeline, loop.trajectory, duration_s=ns_to_s(loop.t_ns))


def build_report(config: ScenarioConfig, pipeline: Pipeline,
                 trajectory: list[tuple[float, float, float, float]],
                 duration_s: float) -> dict:
    link_stats = pipeline.uplink.stats()
    streams_measured = {}
    for type_id, counter in sorted(pipeline.counters.items()):
        name = MessageType(type_id).name.lower()
        streams_measured[name] = {
            "offered_frames": counter.offered_frames,
            "offered_bytes": counter.offered_bytes,
            "delivered_frames": counter.delivered_frames,
            "delivered_bytes": counter.delivered_bytes,
            "mean_bps": (counter.delivered_bytes * 8 / duration_s) if duration_s else 0.0,
            "latency": _percentiles_ms(counter.latency_ns),
        }
    bridge_stats = {
        label: {"relayed": s.relayed, "suppressed": s.suppressed, "errors": s.errors}
        for label, s in sorted(pipeline.bridge.stats().items())
    }
    residuals = [r.residual_norm for r in pipeline.ik_results]
    waypoints = []
    for i, wp in enumerate(config.waypoints):
        reached = i < len(pipeline.waypoint_hits)
        waypoints.append({
            "target": list(wp),
            "reached": reached,
            "t_reached_s": pipeline.waypoint_hits[i] if reached else None,
        })
    x, y, theta = pipeline.robot.base_pose
    return {
        "config": config.name,
        "seed": config.seed,
        "duration_s": duration_s,
        "budget": budget_data(config),
        "streams_measured": streams_measured,
        "link": {
            "offered": link_stats.offered,
            "delivered": link_stats.delivered,
            "dropped": link_stats.dropped,
            "dropped_queue": link_stats.dropped_queue,
            "dropped_loss": link_stats.dropped_loss,
            "bytes_in_queue": link_stats.bytes_in_queue,
            "latency": _percentiles_ms(list(link_stats.latency_ns)),
        },
        "bridge": bridge_stats,
        "ik": {
            "solves": len(residuals),
            "mean_residual": float(np.mean(residuals)) if residuals else None,
            "max_residual": float(np.max(residuals)) if residuals else None,
            "residual_history": residuals,
        },
        "hand_clamp_count": pipeline.retargeter.clamp_count,
        "rejected_triplets": pipeline.robot.rejected_triplets,
        "triplet_nonzero_count": pipeline.triplet_nonzero,
        "final_pose": [x, y, theta],
        "trajectory": [list(row) for row in trajectory],
        "waypoints": waypoints,
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def budget_data(config: ScenarioConfig) -> dict:
    """Config-level bandwidth accounting, split in-band vs out-of-band."""
    all_specs = [e.spec for e in config.streams]
    in_band = [e.spec for e in config.streams if not e.out_of_band]
    report = budget_report(all_specs)
    lines = [
        {
            "name": line.name,
            "rate_hz": line.rate_hz,
            "frame_bytes": line.frame_bytes,
            "bits_per_s": line.bits_per_s,
            "out_of_band": any(
                e.spec.name == line.name and e.out_of_band for e in config.streams
            ),
        }
        for line in report.lines
    ]
    stability = {}
    for spec in in_band:
        ss = steady_state_latency(config.link, spec)
        stability[spec.name] = {
            "stable": ss.stable,
            "steady_latency_s": ss.latency_s,
        }
    return {
        "streams": lines,
        "total_bps": report.total_bps,
        "command_path_bps": sum(stream_bandwidth(s) for s in in_band),
        "link_rate_bps": config.link.rate_bps,
        "command_path_stability": stability,
    }


def render_bandwidth_report(config: ScenarioConfig) -> str:
    data = budget_data(config)
    out = [f"# bandwidth report: {config.name}"]
    header = f"{'stream':<22}{'rate_hz':>9}{'frame_B':>9}{'bits/s':>14}{'mbit/s':>9}  {'path'}"
    out.append(header)
    for line in data["streams"]:
        path = "out-of-band" if line["out_of_band"] else "command"
        out.append(
            f"{line['name']:<22}{line['rate_hz']:>9g}{line['frame_bytes']:>9d}"
            f"{line['bits_per_s']:>14,.0f}{line['bits_per_s'] / 1e6:>9.3f}  {path}"
        )
    out.append(f"{'TOTAL':<22}{'':>9}{'':>9}{data['total_bps']:>14,.0f}"
               f"{data['total_bps'] / 1e6:>9.3f}")
    out.append(f"{'COMMAND PATH':<22}{'':>9}{'':>9}{data['command_path_bps']:>14,.0f}"
               f"{data['command_path_bps'] / 1e6:>9.3f}")
    out.append(f"link capacity: {data['link_rate_bps']:,.0f} bits/s")
    for name, st in sorted(data["command_path_stability"].items()):
        if st["stable"]:
            out.append(f"  {name}: stable, steady one-way latency {st['steady_latency_s']:.6f} s")
        else:
            out.append(f"  {name}: UNSTABLE on this link (offered load >= capacity)")
    return "\n".join(out) + "\n"


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(report_to_json(report))


def record_live_trace(source: LiveSource, path: str | Path) -> None:
    save_trace(source.recorded_trace(), path)
