"""Serial-chain robot model: forward kinematics and geometric Jacobians.

A chain is an ordered list of revolute joints, each a fixed offset transform
from its parent frame followed by a rotation about a unit axis, plus a fixed
tip transform after the last joint. Frame index i (0-based) is the frame
after joint i's rotation; index n refers to the tip frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .geometry import Transform, rot_exp

_AXIS_TOL = 1e-9


@dataclass(frozen=True)
class JointSpec:
    axis: np.ndarray  # unit 3-vector in the joint's local frame
    offset: Transform  # parent frame -> joint pivot frame
    limits: tuple[float, float] = (-np.pi, np.pi)

    def __post_init__(self) -> None:
        axis = np.array(self.axis, dtype=float)
        axis.setflags(write=False)
        object.__setattr__(self, "axis", axis)
        if abs(np.linalg.norm(axis) - 1.0) > _AXIS_TOL:
            raise ValidationError("joint axis must be unit length")
        lo, hi = self.limits
        if not lo < hi:
            raise ValidationError("joint limits need min < max")


@dataclass(frozen=True)
class KinChain:
    joints: tuple[JointSpec, ...]
    tip: Transform = field(default_factory=Transform.identity)

    @property
    def n(self) -> int:
        return len(self.joints)

    @property
    def q_min(self) -> np.ndarray:
        return np.array([j.limits[0] for j in self.joints])

    @property
    def q_max(self) -> np.ndarray:
        return np.array([j.limits[1] for j in self.joints])

    def clamp(self, q: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(q, dtype=float), self.q_min, self.q_max)


def forward_kinematics(chain: KinChain, q: np.ndarray) -> list[Transform]:
    """World pose of every frame: n joint frames followed by the tip frame."""
    q = np.asarray(q, dtype=float)
    if q.shape != (chain.n,):
        raise ValidationError(f"chain has {chain.n} joints, got configuration shape {q.shape}")
    frames: list[Transform] = []
    t = Transform.identity()
    for joint, angle in zip(chain.joints, q):
        t = t @ joint.offset @ Transform(rot_exp(joint.axis * angle), np.zeros(3))
        frames.append(t)
    frames.append(t @ chain.tip)
    return frames


def frame_jacobians(chain: KinChain, q: np.ndarray, frame_index: int,
                    frames: list[Transform] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Geometric Jacobians of a frame: (position 3xn, world angular 3xn).

    Column j is the instantaneous effect of joint j; joints beyond the frame
    contribute zero columns.
    """
    if frames is None:
        frames = forward_kinematics(chain, q)
    if not 0 <= frame_index <= chain.n:
        raise ValidationError(f"frame index {frame_index} outside [0, {chain.n}]")
    p = frames[frame_index].pos
    last_joint = min(frame_index, chain.n - 1)
    j_pos = np.zeros((3, chain.n))
    j_ang = np.zeros((3, chain.n))
    for j in range(last_joint + 1):
        # the joint's world axis; R(axis, q) fixes the axis so the post-rotation
        # frame rotation works directly
        z = frames[j].rot @ chain.joints[j].axis
        j_ang[:, j] = z
        j_pos[:, j] = np.cross(z, p - frames[j].pos)
    return j_pos, j_ang
