"""Task-based inverse kinematics for upper-body retargeting.

Two task kinds drive a serial chain:

* cartesian -- pin a frame's world pose to a tracker-derived target; residual
  is [p(q) - p*, log(R*^T R(q))] (meters, axis-angle radians).
* gravity -- align a frame's model-predicted gravity direction, expressed in
  the frame, with an IMU-measured one; residual is g_meas x g_model(q).
  The anti-parallel configuration is a stationary point of this residual:
  do not start a solve there.

The solver is damped Gauss-Newton on the stacked weighted residual with
Levenberg-style damping adaptation (halved on accepted steps, doubled and
retried when the step would increase the residual) and per-iterate clamping
to joint limits. Identical inputs produce identical iterates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ValidationError
from .geometry import Transform, is_rotation, rot_log, skew, so3_right_jacobian_inv
from .kinematics import KinChain, forward_kinematics, frame_jacobians

GRAVITY_WORLD = np.array([0.0, 0.0, -1.0])


class TaskKind(Enum):
    CARTESIAN = "cartesian"
    GRAVITY = "gravity"


@dataclass(frozen=True)
class IkTask:
    kind: TaskKind
    frame: int
    weight: float = 1.0
    target: Transform | None = None
    gravity_meas: np.ndarray | None = None
    position_only: bool = False  # cartesian task, orientation left free

    def __post_init__(self) -> None:
        if self.weight <= 0:
            raise ValidationError("task weight must be > 0")
        if self.kind is TaskKind.CARTESIAN:
            if self.target is None:
                raise ValidationError("cartesian task needs a target pose")
            if not is_rotation(self.target.rot):
                raise ValidationError("cartesian target rotation must be orthonormal, det +1")
        else:
            if self.gravity_meas is None:
                raise ValidationError("gravity task needs a measured direction")
            g = np.asarray(self.gravity_meas, dtype=float)
            if abs(np.linalg.norm(g) - 1.0) > 1e-8:
                raise ValidationError("measured gravity direction must be unit length")

    @property
    def dim(self) -> int:
        if self.kind is TaskKind.GRAVITY or self.position_only:
            return 3
        return 6

    @staticmethod
    def cartesian(frame: int, target: Transform, weight: float = 1.0) -> "IkTask":
        return IkTask(TaskKind.CARTESIAN, frame, weight, target=target)

    @staticmethod
    def position(frame: int, pos: np.ndarray, weight: float = 1.0) -> "IkTask":
        target = Transform(np.eye(3), np.asarray(pos, dtype=float))
        return IkTask(TaskKind.CARTESIAN, frame, weight, target=target, position_only=True)

    @staticmethod
    def gravity(frame: int, gravity_meas: np.ndarray, weight: float = 1.0) -> "IkTask":
        g = np.asarray(gravity_meas, dtype=float)
        return IkTask(TaskKind.GRAVITY, frame, weight, gravity_meas=g / np.linalg.norm(g))


def model_gravity(chain: KinChain, q: np.ndarray, frame: int,
                  frames: list[Transform] | None = None) -> np.ndarray:
    """World gravity direction expressed in the given frame."""
    if frames is None:
        frames = forward_kinematics(chain, q)
    return frames[frame].rot.T @ GRAVITY_WORLD


def task_residual(chain: KinChain, q: np.ndarray, task: IkTask,
                  frames: list[Transform] | None = None) -> np.ndarray:
    if frames is None:
        frames = forward_kinematics(chain, q)
    pose = frames[task.frame]
    if task.kind is TaskKind.CARTESIAN:
        e_pos = pose.pos - task.target.pos
        if task.position_only:
            return e_pos
        e_rot = rot_log(task.target.rot.T @ pose.rot)
        return np.concatenate([e_pos, e_rot])
    g_model = pose.rot.T @ GRAVITY_WORLD
    return np.cross(task.gravity_meas, g_model)


def task_jacobian(chain: KinChain, q: np.ndarray, task: IkTask,
                  frames: list[Transform] | None = None) -> np.ndarray:
    if frames is None:
        frames = forward_kinematics(chain, q)
    j_pos, j_ang = frame_jacobians(chain, q, task.frame, frames)
    rot = frames[task.frame].rot
    if task.kind is TaskKind.CARTESIAN:
        if task.position_only:
            return j_pos
        e_rot = rot_log(task.target.rot.T @ rot)
        j_body = rot.T @ j_ang
        return np.vstack([j_pos, so3_right_jacobian_inv(e_rot) @ j_body])
    # d(R^T g)/dq = R^T [g]x J_ang; residual premultiplies by [g_meas]x
    d_gmodel = rot.T @ skew(GRAVITY_WORLD) @ j_ang
    return skew(task.gravity_meas) @ d_gmodel


def stack_tasks(chain: KinChain, q: np.ndarray,
                tasks: list[IkTask]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stacked residual r, Jacobian J, and per-row weight vector."""
    frames = forward_kinematics(chain, q)
    residuals, jacobians, weights = [], [], []
    for task in tasks:
        residuals.append(task_residual(chain, q, task, frames))
        jacobians.append(task_jacobian(chain, q, task, frames))
        weights.append(np.full(task.dim, task.weight))
    return np.concatenate(residuals), np.vstack(jacobians), np.concatenate(weights)


def weighted_norm(r: np.ndarray, w: np.ndarray) -> float:
    return float(np.sqrt(r @ (w * r)))


@dataclass(frozen=True)
class IkParams:
    damping: float = 1e-3
    tol: float = 1e-9
    max_iters: int = 100
    max_step: float = 0.5  # per-iterate step clip, radians (2-norm)
    damping_min: float = 1e-9
    damping_max: float = 1e8

    def __post_init__(self) -> None:
        if self.damping < 0:
            raise ValidationError("damping must be >= 0")
        if self.max_step <= 0:
            raise ValidationError("max_step must be > 0")


@dataclass
class IkResult:
    q: np.ndarray
    converged: bool
    iterations: int
    residual_norm: float
    norm_history: list[float] = field(default_factory=list)


def solve_ik(chain: KinChain, tasks: list[IkTask], q_init: np.ndarray,
             params: IkParams = IkParams()) -> IkResult:
    if not tasks:
        raise ValidationError("solve_ik needs at least one task")
    q = chain.clamp(np.asarray(q_init, dtype=float))
    lam = params.damping
    r, jac, w = stack_tasks(chain, q, tasks)
    norm = weighted_norm(r, w)
    history = [norm]
    iterations = 0
    identity = np.eye(chain.n)
    for _ in range(params.max_iters):
        if norm < params.tol:
            break
        jtw = jac.T * w  # n x d
        grad = jtw @ r
        improved = False
        while lam <= params.damping_max:
            h = jtw @ jac + lam * identity
            dq = -np.linalg.solve(h, grad)
            step = float(np.linalg.norm(dq))
            if step > params.max_step:
                dq *= params.max_step / step
            q_new = chain.clamp(q + dq)
            r_new, jac_new, _ = stack_tasks(chain, q_new, tasks)
            norm_new = weighted_norm(r_new, w)
            if norm_new < norm:
                q, r, jac, norm = q_new, r_new, jac_new, norm_new
                lam = max(lam / 2.0, params.damping_min)
                improved = True
                break
            lam *= 2.0
        iterations += 1
        if not improved:
            break  # stalled (limits or a stationary point)
        history.append(norm)
    return IkResult(q, norm < params.tol, iterations, norm, history)


@dataclass(frozen=True)
class FrameCalibration:
    """Fixed transform from a tracker's frame to the robot link it drives."""

    tracker_to_link: Transform


def calibrate(t_world_tracker_0: Transform, t_world_link_0: Transform) -> FrameCalibration:
    for t in (t_world_tracker_0, t_world_link_0):
        if not is_rotation(t.rot):
            raise ValidationError("calibration poses must have orthonormal rotations")
    return FrameCalibration(t_world_tracker_0.inverse() @ t_world_link_0)


def apply_calibration(cal: FrameCalibration, t_world_tracker: Transform) -> Transform:
    """Target link pose for the current tracker pose."""
    return t_world_tracker @ cal.tracker_to_link


class ReferenceDifferentiator:
    """Turns successive joint solutions into (q, dq, ddq) references."""

    def __init__(self) -> None:
        self._q: np.ndarray | None = None
        self._dq: np.ndarray | None = None

    def push(self, q: np.ndarray, dt_s: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        q = np.asarray(q, dtype=float)
        if self._q is None:
            dq = np.zeros_like(q)
            ddq = np.zeros_like(q)
        else:
            dq = (q - self._q) / dt_s
            ddq = (dq - self._dq) / dt_s
        self._q, self._dq = q, dq
        return q, dq, ddq
