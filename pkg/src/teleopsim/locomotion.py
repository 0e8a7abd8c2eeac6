"""Tracker-based locomotion interface.

The operator's feet are tracked relative to a nominal stance (one idle disc
of radius r per foot). Pushing a foot beyond its disc commands translation
proportional to the excess, with the dominant (larger-excess) foot winning
and ties going to the left foot; while both feet stay inside their discs,
the mean foot yaw beyond a deadband commands rotation in place. Translation
and rotation are mutually exclusive modes. The resulting
(linear, angular, lateral) triplet feeds a differential-drive base, an
omni base, or a unicycle footstep planner.

Conventions: waist frame, x forward, y left, yaw counter-clockwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TeleopsimError, ValidationError
from .geometry import Transform


class UnachievableCommandError(TeleopsimError):
    """The base cannot execute this triplet (e.g. lateral on a differential drive)."""


@dataclass(frozen=True)
class LocomotionParams:
    idle_radius: float = 0.08
    stance_width: float = 0.2
    k_lin: float = 2.0
    k_lat: float = 2.0
    k_ang: float = 1.0
    yaw_deadband: float = 0.1
    v_max: float = 0.5
    v_lat_max: float = 0.5
    omega_max: float = 0.8

    def __post_init__(self) -> None:
        positives = ("idle_radius", "stance_width", "k_lin", "k_lat", "k_ang",
                     "v_max", "v_lat_max", "omega_max")
        for name in positives:
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be > 0")
        if self.yaw_deadband < 0:
            raise ValidationError("yaw_deadband must be >= 0")

    @property
    def nominal_left(self) -> np.ndarray:
        return np.array([0.0, self.stance_width / 2.0])

    @property
    def nominal_right(self) -> np.ndarray:
        return np.array([0.0, -self.stance_width / 2.0])


@dataclass(frozen=True)
class VelocityTriplet:
    v: float
    omega: float
    v_lat: float

    def is_zero(self) -> bool:
        return self.v == 0.0 and self.omega == 0.0 and self.v_lat == 0.0

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.v, self.omega, self.v_lat)


ZERO_TRIPLET = VelocityTriplet(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class FootStance:
    """Planar foot state in the waist frame."""

    p_left: tuple[float, float]
    p_right: tuple[float, float]
    yaw_left: float = 0.0
    yaw_right: float = 0.0


@dataclass(frozen=True)
class OperatorPose:
    """World poses of the tracked waist and feet."""

    waist: Transform
    left_foot: Transform
    right_foot: Transform

    def stance(self) -> FootStance:
        inv = self.waist.inverse()
        feet = []
        yaws = []
        for foot in (self.left_foot, self.right_foot):
            rel = inv @ foot
            feet.append((float(rel.pos[0]), float(rel.pos[1])))
            # yaw of the foot's forward (x) axis projected on the waist plane
            fx = rel.rot[:, 0]
            yaws.append(math.atan2(fx[1], fx[0]))
        return FootStance(feet[0], feet[1], yaws[0], yaws[1])


def _sat(value: float, bound: float) -> float:
    return max(-bound, min(bound, value))


def _excess(p: np.ndarray, nominal: np.ndarray, radius: float) -> np.ndarray:
    d = p - nominal
    dist = float(np.linalg.norm(d))
    if dist <= radius:
        return np.zeros(2)
    return (dist - radius) * d / dist


def compute_triplet(stance: FootStance | OperatorPose,
                    params: LocomotionParams) -> VelocityTriplet:
    """Map a foot stance to a velocity triplet (translation xor rotation)."""
    if isinstance(stance, OperatorPose):
        stance = stance.stance()
    e_left = _excess(np.asarray(stance.p_left, dtype=float), params.nominal_left,
                     params.idle_radius)
    e_right = _excess(np.asarray(stance.p_right, dtype=float), params.nominal_right,
                      params.idle_radius)
    n_left = float(np.linalg.norm(e_left))
    n_right = float(np.linalg.norm(e_right))
    if n_left == 0.0 and n_right == 0.0:
        mean_yaw = (stance.yaw_left + stance.yaw_right) / 2.0
        if abs(mean_yaw) > params.yaw_deadband:
            return VelocityTriplet(0.0, float(_sat(params.k_ang * mean_yaw, params.omega_max)), 0.0)
        return ZERO_TRIPLET
    e = e_left if n_left >= n_right else e_right  # tie goes to the left foot
    return VelocityTriplet(
        float(_sat(params.k_lin * e[0], params.v_max)),
        0.0,
        float(_sat(params.k_lat * e[1], params.v_lat_max)),
    )


class DiffDriveBase:
    """Differential-drive wheel mapping with a rejected-command counter."""

    # lat_tolerance absorbs float32 wire quantization; anything larger is a
    # genuinely lateral command the base cannot execute
    def __init__(self, wheel_radius: float, track: float, lat_tolerance: float = 1e-6) -> None:
        if wheel_radius <= 0 or track <= 0:
            raise ValidationError("wheel_radius and track must be > 0")
        self.wheel_radius = wheel_radius
        self.track = track
        self.lat_tolerance = lat_tolerance
        self.rejected = 0

    def wheel_speeds(self, triplet: VelocityTriplet) -> tuple[float, float]:
        if abs(triplet.v_lat) > self.lat_tolerance:
            self.rejected += 1
            raise UnachievableCommandError(
                f"differential base cannot translate laterally (v_lat={triplet.v_lat})"
            )
        half = triplet.omega * self.track / 2.0
        return ((triplet.v - half) / self.wheel_radius,
                (triplet.v + half) / self.wheel_radius)

    def body_twist(self, omega_left: float, omega_right: float) -> tuple[float, float]:
        """Forward model: wheel speeds back to (v, omega)."""
        v = self.wheel_radius * (omega_left + omega_right) / 2.0
        omega = self.wheel_radius * (omega_right - omega_left) / self.track
        return v, omega


def map_omni(triplet: VelocityTriplet, params: LocomotionParams) -> VelocityTriplet:
    """Omni bases execute the triplet directly; re-check saturation."""
    return VelocityTriplet(
        _sat(triplet.v, params.v_max),
        _sat(triplet.omega, params.omega_max),
        _sat(triplet.v_lat, params.v_lat_max),
    )


@dataclass(frozen=True)
class Footstep:
    side: str  # "left" | "right"
    x: float
    y: float
    yaw: float


@dataclass(frozen=True)
class FootstepParams:
    step_period: float = 1.0
    stance_width: float = 0.2
    max_step_length: float = 0.5

    def __post_init__(self) -> None:
        if self.step_period <= 0 or self.stance_width <= 0 or self.max_step_length <= 0:
            raise ValidationError("footstep parameters must be > 0")


class UnicycleFootstepPlanner:
    """Integrates a unicycle driven by the triplet stream and emits footsteps.

    The unicycle pose integrates (v, omega) only; lateral velocity
    accumulates as a lateral offset applied to step placement in the heading
    frame. A step is emitted each period only if some motion was commanded
    during it, alternating sides, with displacement from the previous
    same-side step clamped to max_step_length.
    """

    def __init__(self, params: FootstepParams, start_side: str = "left") -> None:
        self.params = params
        self.x = 0.0
        self.y = 0.0
        self.theta = 0.0
        self.lat_offset = 0.0
        self._elapsed = 0.0
        self._moved = False
        self._next_side = start_side
        self._last_step: dict[str, Footstep] = {}
        self.steps: list[Footstep] = []

    def _emit(self) -> Footstep:
        side = self._next_side
        half = self.params.stance_width / 2.0
        lateral = (half if side == "left" else -half) + self.lat_offset
        px = self.x - math.sin(self.theta) * lateral
        py = self.y + math.cos(self.theta) * lateral
        prev = self._last_step.get(side)
        if prev is not None:
            dx, dy = px - prev.x, py - prev.y
            dist = math.hypot(dx, dy)
            if dist > self.params.max_step_length:
                scale = self.params.max_step_length / dist
                px = prev.x + dx * scale
                py = prev.y + dy * scale
        step = Footstep(side, px, py, self.theta)
        self._last_step[side] = step
        self.steps.append(step)
        self._next_side = "right" if side == "left" else "left"
        return step

    def push(self, triplet: VelocityTriplet, dt: float) -> Footstep | None:
        if not triplet.is_zero():
            self.x += triplet.v * math.cos(self.theta) * dt
            self.y += triplet.v * math.sin(self.theta) * dt
            self.theta += triplet.omega * dt
            self.lat_offset += triplet.v_lat * dt
            self._moved = True
        self._elapsed += dt
        emitted = None
        if self._elapsed >= self.params.step_period - 1e-9:
            self._elapsed -= self.params.step_period
            if self._moved:
                emitted = self._emit()
            self._moved = False
        return emitted

    def plan(self, triplets, dt: float) -> list[Footstep]:
        for triplet in triplets:
            self.push(triplet, dt)
        return list(self.steps)
