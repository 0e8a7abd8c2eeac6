"""YAML scenario configuration.

One format serves every subcommand. A scenario file holds the link, the
stream budget, the bridge routes, scenario timing, and a reference to (or
inline copy of) the avatar description (robot counts, arm chain, hand
coupling, glove mapping, locomotion gains, IK settings). Unknown keys are
rejected: a typo must fail before a simulation starts.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .bandwidth import StreamSpec
from .bridge import BridgeRoute, load_routes
from .errors import ConfigError, ValidationError
from .geometry import Transform, rpy_to_rot
from .hands import (CouplingLaw, GloveMapping, grouped_glove_mapping, identity_law,
                    interlocked_law)
from .ik import IkParams, TaskKind
from .kinematics import JointSpec, KinChain
from .locomotion import LocomotionParams
from .messages import HEADER_SIZE, Hand, HandFrame, WearableBatch, encode
from .netem import LinkSpec
from .robot import BaseKind, RobotSpec


def _require(d: dict, key: str, ctx: str):
    if key not in d:
        raise ConfigError(f"{ctx}: missing required key {key!r}")
    return d[key]


def _check_keys(d: dict, allowed: set[str], ctx: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{ctx}: unknown key(s) {sorted(unknown)}")


@dataclass(frozen=True)
class StreamEntry:
    spec: StreamSpec
    out_of_band: bool = False


@dataclass(frozen=True)
class TaskConfig:
    kind: TaskKind
    frame: int
    weight: float
    source: str  # "hand_tracker" | "hold_initial"


@dataclass(frozen=True)
class ScenarioTiming:
    step_ms: int = 1
    trace_rate_hz: float = 100.0
    ik_rate_hz: float = 25.0
    state_rate_hz: float = 20.0
    max_drain_s: float = 30.0


@dataclass(frozen=True)
class AvatarConfig:
    robot: RobotSpec
    wheel_radius: float
    track: float
    locomotion: LocomotionParams
    ik_params: IkParams
    ik_tasks: tuple[TaskConfig, ...]
    chain: KinChain
    coupling: CouplingLaw
    glove_map: GloveMapping


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    seed: int
    link: LinkSpec
    streams: tuple[StreamEntry, ...]
    routes: tuple[BridgeRoute, ...]
    avatar: AvatarConfig
    timing: ScenarioTiming
    waypoints: tuple[tuple[float, float, float], ...] = ()
    waypoint_tolerance_m: float = 0.02
    path: Path | None = None

    def stream(self, name: str) -> StreamSpec:
        for entry in self.streams:
            if entry.spec.name == name:
                return entry.spec
        raise ConfigError(f"no stream named {name!r} in config {self.name}")

    @property
    def command_streams(self) -> tuple[StreamSpec, ...]:
        return tuple(e.spec for e in self.streams if not e.out_of_band)


def computed_payload_bytes(message: dict, ctx: str) -> int:
    """Size of the payload of an actually-encoded wearable batch."""
    _check_keys(message, {"hands", "joints_per_hand", "actuators_per_hand"}, ctx)
    hands = int(message.get("hands", 2))
    joints = int(_require(message, "joints_per_hand", ctx))
    actuators = int(_require(message, "actuators_per_hand", ctx))
    ids = (Hand.LEFT, Hand.RIGHT)[:hands]
    batch = WearableBatch(tuple(
        HandFrame(h, (0.0,) * joints, (0.0,) * actuators, (0.0,) * actuators) for h in ids
    ))
    return len(encode(batch, 0, 0)) - HEADER_SIZE


def _build_stream(entry: dict, i: int) -> StreamEntry:
    ctx = f"streams[{i}]"
    _check_keys(entry, {"name", "rate_hz", "payload_bytes", "message", "out_of_band"}, ctx)
    name = _require(entry, "name", ctx)
    payload = _require(entry, "payload_bytes", ctx)
    if payload == "computed":
        payload = computed_payload_bytes(_require(entry, "message", ctx), f"{ctx}.message")
    elif "message" in entry:
        raise ConfigError(f"{ctx}: 'message' only applies with payload_bytes: computed")
    try:
        spec = StreamSpec(name, float(_require(entry, "rate_hz", ctx)), int(payload))
    except ValidationError as exc:
        raise ConfigError(f"{ctx}: {exc}") from exc
    return StreamEntry(spec, bool(entry.get("out_of_band", False)))


def _build_link(d: dict) -> LinkSpec:
    _check_keys(d, {"rate_bps", "propagation_delay_ms", "queue_capacity_bytes",
                    "loss_prob", "jitter_ms", "seed"}, "link")
    try:
        return LinkSpec(
            rate_bps=float(_require(d, "rate_bps", "link")),
            propagation_delay_ms=float(_require(d, "propagation_delay_ms", "link")),
            queue_capacity_bytes=int(_require(d, "queue_capacity_bytes", "link")),
            loss_prob=float(d.get("loss_prob", 0.0)),
            jitter_ms=float(d.get("jitter_ms", 0.0)),
            seed=int(d.get("seed", 0)),
        )
    except ValidationError as exc:
        raise ConfigError(f"link: {exc}") from exc


def _build_transform(d: dict, ctx: str) -> Transform:
    _check_keys(d, {"xyz", "rpy"}, ctx)
    xyz = d.get("xyz", [0.0, 0.0, 0.0])
    rpy = d.get("rpy", [0.0, 0.0, 0.0])
    if len(xyz) != 3 or len(rpy) != 3:
        raise ConfigError(f"{ctx}: xyz and rpy must have three entries")
    return Transform(rpy_to_rot(*[float(v) for v in rpy]),
                     np.array([float(v) for v in xyz]))


def _build_chain(d: dict, ctx: str = "chain") -> KinChain:
    _check_keys(d, {"joints", "tip"}, ctx)
    joints = []
    for i, jd in enumerate(_require(d, "joints", ctx)):
        jctx = f"{ctx}.joints[{i}]"
        _check_keys(jd, {"axis", "xyz", "rpy", "limits"}, jctx)
        axis = np.array([float(v) for v in _require(jd, "axis", jctx)])
        norm = np.linalg.norm(axis)
        if norm == 0:
            raise ConfigError(f"{jctx}: axis must be non-zero")
        offset = _build_transform({k: jd[k] for k in ("xyz", "rpy") if k in jd}, jctx)
        limits = tuple(float(v) for v in jd.get("limits", (-np.pi, np.pi)))
        try:
            joints.append(JointSpec(axis / norm, offset, limits))
        except ValidationError as exc:
            raise ConfigError(f"{jctx}: {exc}") from exc
    tip = _build_transform(d.get("tip", {}), f"{ctx}.tip")
    if not joints:
        raise ConfigError(f"{ctx}: needs at least one joint")
    return KinChain(tuple(joints), tip)


def _build_coupling(d: dict, base_dir: Path, ctx: str = "coupling") -> CouplingLaw:
    if "file" in d:
        _check_keys(d, {"file"}, ctx)
        sub = _load_yaml(base_dir / d["file"])
        return _build_coupling(sub, base_dir, ctx=f"{ctx}({d['file']})")
    if "preset" in d:
        _check_keys(d, {"preset", "full", "drive"}, ctx)
        preset = d["preset"]
        if preset == "identity":
            return identity_law(int(_require(d, "drive", ctx)))
        if preset == "interlocked":
            return interlocked_law(int(d.get("full", 18)), int(d.get("drive", 13)))
        raise ConfigError(f"{ctx}: unknown preset {preset!r}")
    _check_keys(d, {"matrix", "offset", "drive_limits"}, ctx)
    try:
        return CouplingLaw(
            np.array(_require(d, "matrix", ctx), dtype=float),
            np.array(_require(d, "offset", ctx), dtype=float),
            np.array(_require(d, "drive_limits", ctx), dtype=float),
        )
    except (ValidationError, ValueError) as exc:
        raise ConfigError(f"{ctx}: {exc}") from exc


def _build_glove_map(d: dict, ctx: str = "glove_map") -> GloveMapping:
    if d.get("preset") == "grouped":
        _check_keys(d, {"preset", "glove_joints", "drive_joints"}, ctx)
        return grouped_glove_mapping(int(d.get("glove_joints", 20)),
                                     int(d.get("drive_joints", 13)))
    _check_keys(d, {"glove_joints", "rows"}, ctx)
    rows = tuple(
        tuple((int(idx), float(w)) for idx, w in row)
        for row in _require(d, "rows", ctx)
    )
    return GloveMapping(int(_require(d, "glove_joints", ctx)), rows)


def _build_tasks(entries: list[dict], chain: KinChain) -> tuple[TaskConfig, ...]:
    tasks = []
    for i, d in enumerate(entries):
        ctx = f"ik_tasks[{i}]"
        _check_keys(d, {"kind", "frame", "weight", "source"}, ctx)
        kind_name = _require(d, "kind", ctx)
        try:
            kind = TaskKind(kind_name)
        except ValueError as exc:
            raise ConfigError(f"{ctx}: unknown task kind {kind_name!r}") from exc
        frame_raw = _require(d, "frame", ctx)
        frame = chain.n if frame_raw == "tip" else int(frame_raw)
        if not 0 <= frame <= chain.n:
            raise ConfigError(f"{ctx}: frame {frame} outside [0, {chain.n}]")
        source = d.get("source", "hand_tracker" if kind is TaskKind.CARTESIAN else "hold_initial")
        if source not in ("hand_tracker", "hold_initial"):
            raise ConfigError(f"{ctx}: unknown source {source!r}")
        tasks.append(TaskConfig(kind, frame, float(d.get("weight", 1.0)), source))
    if not any(t.kind is TaskKind.CARTESIAN for t in tasks):
        raise ConfigError("ik_tasks: need at least one cartesian task for the tracker")
    return tuple(tasks)


def _build_avatar(d: dict, base_dir: Path) -> AvatarConfig:
    _check_keys(d, {"robot", "base", "locomotion", "ik", "ik_tasks", "chain",
                    "coupling", "glove_map"}, "avatar")
    rd = _require(d, "robot", "avatar")
    _check_keys(rd, {"name", "total_joints", "controllable_joints", "base_kind",
                     "hand_joints", "hand_drive_joints"}, "avatar.robot")
    try:
        robot = RobotSpec(
            name=str(_require(rd, "name", "avatar.robot")),
            total_joints=int(_require(rd, "total_joints", "avatar.robot")),
            controllable_joints=int(_require(rd, "controllable_joints", "avatar.robot")),
            base_kind=BaseKind(_require(rd, "base_kind", "avatar.robot")),
            hand_joints=int(_require(rd, "hand_joints", "avatar.robot")),
            hand_drive_joints=int(_require(rd, "hand_drive_joints", "avatar.robot")),
        )
    except (ValidationError, ValueError) as exc:
        raise ConfigError(f"avatar.robot: {exc}") from exc
    bd = d.get("base", {})
    _check_keys(bd, {"wheel_radius", "track"}, "avatar.base")
    loco_d = d.get("locomotion", {})
    _check_keys(loco_d, {f.name for f in LocomotionParams.__dataclass_fields__.values()},
                "avatar.locomotion")
    ik_d = d.get("ik", {})
    _check_keys(ik_d, {"damping", "tol", "max_iters"}, "avatar.ik")
    chain = _build_chain(_require(d, "chain", "avatar"))
    try:
        locomotion = LocomotionParams(**{k: float(v) for k, v in loco_d.items()})
        ik_params = IkParams(
            damping=float(ik_d.get("damping", 1e-3)),
            tol=float(ik_d.get("tol", 1e-9)),
            max_iters=int(ik_d.get("max_iters", 100)),
        )
    except ValidationError as exc:
        raise ConfigError(f"avatar: {exc}") from exc
    coupling = _build_coupling(_require(d, "coupling", "avatar"), base_dir)
    glove_map = _build_glove_map(_require(d, "glove_map", "avatar"))
    if glove_map.n_drive != coupling.n_drive:
        raise ConfigError(
            f"glove_map drives {glove_map.n_drive} joints but coupling expects {coupling.n_drive}"
        )
    if coupling.n_full != robot.hand_joints:
        raise ConfigError(
            f"coupling produces {coupling.n_full} joints but robot.hand_joints = {robot.hand_joints}"
        )
    return AvatarConfig(
        robot=robot,
        wheel_radius=float(bd.get("wheel_radius", 0.1)),
        track=float(bd.get("track", 0.4)),
        locomotion=locomotion,
        ik_params=ik_params,
        ik_tasks=_build_tasks(d.get("ik_tasks", []), chain),
        chain=chain,
        coupling=coupling,
        glove_map=glove_map,
    )


def _load_yaml(path: Path) -> dict:
    if not path.exists():
        raise FileNotFoundError(path)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def resolve_config_path(arg: str | Path) -> Path:
    """Accept a config path with or without the .yaml extension."""
    path = Path(arg)
    if path.exists():
        return path
    with_ext = path.with_suffix(".yaml")
    if with_ext.exists():
        return with_ext
    raise FileNotFoundError(path)


def load_config(path: str | Path) -> ScenarioConfig:
    path = resolve_config_path(path)
    d = _load_yaml(path)
    _check_keys(d, {"name", "seed", "link", "streams", "routes", "avatar", "scenario"},
                str(path))
    base_dir = path.parent
    avatar_raw = _require(d, "avatar", str(path))
    if isinstance(avatar_raw, str):
        avatar_d = _load_yaml(base_dir / avatar_raw)
    else:
        avatar_d = avatar_raw
    sc = d.get("scenario", {})
    _check_keys(sc, {"step_ms", "trace_rate_hz", "ik_rate_hz", "state_rate_hz",
                     "max_drain_s", "waypoints", "waypoint_tolerance_m"}, "scenario")
    timing = ScenarioTiming(
        step_ms=int(sc.get("step_ms", 1)),
        trace_rate_hz=float(sc.get("trace_rate_hz", 100.0)),
        ik_rate_hz=float(sc.get("ik_rate_hz", 25.0)),
        state_rate_hz=float(sc.get("state_rate_hz", 20.0)),
        max_drain_s=float(sc.get("max_drain_s", 30.0)),
    )
    if timing.step_ms <= 0:
        raise ConfigError("scenario.step_ms must be > 0")
    waypoints = tuple(
        tuple(float(v) for v in wp) for wp in sc.get("waypoints", [])
    )
    if any(len(wp) != 3 for wp in waypoints):
        raise ConfigError("scenario.waypoints must be [x, y, z] triples")
    try:
        routes = tuple(load_routes(d.get("routes", [])))
    except ConfigError:
        raise
    return ScenarioConfig(
        name=str(_require(d, "name", str(path))),
        seed=int(d.get("seed", 0)),
        link=_build_link(_require(d, "link", str(path))),
        streams=tuple(_build_stream(e, i) for i, e in enumerate(d.get("streams", []))),
        routes=routes,
        avatar=_build_avatar(avatar_d, base_dir),
        timing=timing,
        waypoints=waypoints,
        waypoint_tolerance_m=float(sc.get("waypoint_tolerance_m", 0.02)),
        path=path,
    )
