"""Robot description and the kinematic stand-in that consumes references.

The real platform's whole-body torque controller and stabilizer are not
modelled: SimRobot is a reference-consuming sink. Arm and hand joints track
their latest references directly (clamped to limits); the base integrates
the latest velocity triplet with explicit Euler at the simulation step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ValidationError
from .geometry import Transform
from .kinematics import KinChain, forward_kinematics
from .locomotion import DiffDriveBase, UnachievableCommandError, VelocityTriplet, ZERO_TRIPLET


class BaseKind(Enum):
    DIFFERENTIAL = "differential"
    OMNI = "omni"
    BIPED = "biped"


@dataclass(frozen=True)
class RobotSpec:
    name: str
    total_joints: int
    controllable_joints: int
    base_kind: BaseKind
    hand_joints: int
    hand_drive_joints: int

    def __post_init__(self) -> None:
        if self.controllable_joints > self.total_joints:
            raise ValidationError("controllable_joints cannot exceed total_joints")
        if self.hand_drive_joints > self.hand_joints:
            raise ValidationError("hand_drive_joints cannot exceed hand_joints")


class SimRobot:
    def __init__(self, spec: RobotSpec, arm: KinChain, hand_joint_count: int,
                 base: DiffDriveBase | None = None,
                 q_arm_init: np.ndarray | None = None) -> None:
        self.spec = spec
        self.arm = arm
        self.base = base
        if spec.base_kind is BaseKind.DIFFERENTIAL and base is None:
            raise ValidationError("differential robot needs wheel geometry")
        self.x = 0.0
        self.y = 0.0
        self.theta = 0.0
        self.triplet: VelocityTriplet = ZERO_TRIPLET
        self.q_arm = (
            arm.clamp(q_arm_init) if q_arm_init is not None else np.zeros(arm.n)
        )
        self.q_hand = np.zeros(hand_joint_count)
        self.rejected_triplets = 0

    def set_triplet(self, triplet: VelocityTriplet) -> None:
        if self.spec.base_kind is BaseKind.DIFFERENTIAL:
            try:
                # validates achievability; the integrator works on the twist
                self.base.wheel_speeds(triplet)
            except UnachievableCommandError:
                self.rejected_triplets += 1
                return
        self.triplet = triplet

    def set_arm_refs(self, q: np.ndarray, dq: np.ndarray | None = None,
                     ddq: np.ndarray | None = None) -> None:
        self.q_arm = self.arm.clamp(q)

    def set_hand(self, q_full: np.ndarray) -> None:
        q = np.asarray(q_full, dtype=float)
        if q.shape != self.q_hand.shape:
            raise ValidationError(
                f"hand reference has shape {q.shape}, robot hand has {self.q_hand.shape}"
            )
        self.q_hand = q

    def step(self, dt_s: float) -> None:
        v, omega, v_lat = self.triplet.as_tuple()
        c, s = math.cos(self.theta), math.sin(self.theta)
        self.x += (v * c - v_lat * s) * dt_s
        self.y += (v * s + v_lat * c) * dt_s
        self.theta += omega * dt_s

    @property
    def base_pose(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.theta)

    def ee_pose(self) -> Transform:
        return forward_kinematics(self.arm, self.q_arm)[self.arm.n]
