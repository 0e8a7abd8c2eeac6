"""Rotation and rigid-transform primitives used by the retargeting stack."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

_EPS = 1e-10


def skew(v: np.ndarray) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rot_exp(omega: np.ndarray) -> np.ndarray:
    """Rodrigues formula: axis-angle vector to rotation matrix."""
    omega = np.asarray(omega, dtype=float)
    theta = np.linalg.norm(omega)
    k = skew(omega)
    if theta < 1e-8:
        # second-order series, accurate to ~1e-16 here
        return np.eye(3) + k + 0.5 * (k @ k)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / (theta * theta)
    return np.eye(3) + a * k + b * (k @ k)


def rot_log(r: np.ndarray) -> np.ndarray:
    """Inverse of rot_exp; principal axis-angle vector with angle in [0, pi]."""
    r = np.asarray(r, dtype=float)
    cos_theta = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
    theta = np.arccos(cos_theta)
    if theta < 1e-8:
        # first-order: vee of the skew part
        return np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]]) / 2.0
    if np.pi - theta < 1e-6:
        # near pi the sine route degenerates; use the symmetric part
        m = (r + np.eye(3)) / 2.0
        axis = np.sqrt(np.maximum(np.diagonal(m), 0.0))
        # pick signs from the largest diagonal entry's column
        k = int(np.argmax(np.diagonal(m)))
        if axis[k] > 0:
            axis = m[:, k] / axis[k]
            axis = axis / np.linalg.norm(axis)
        return theta * axis
    vee = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    return theta / (2.0 * np.sin(theta)) * vee


def so3_right_jacobian_inv(phi: np.ndarray) -> np.ndarray:
    """Inverse right Jacobian of SO(3): d log(R Exp(d))/dd at d=0 for R=Exp(phi)."""
    phi = np.asarray(phi, dtype=float)
    theta = np.linalg.norm(phi)
    k = skew(phi)
    if theta < 1e-5:
        return np.eye(3) + 0.5 * k + (1.0 / 12.0) * (k @ k)
    coef = 1.0 / (theta * theta) - (1.0 + np.cos(theta)) / (2.0 * theta * np.sin(theta))
    return np.eye(3) + 0.5 * k + coef * (k @ k)


def rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=float)


def rot_y(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=float)


def rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=float)


def rpy_to_rot(roll: float, pitch: float, yaw: float) -> np.ndarray:
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def quat_to_rot(q: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) to rotation matrix."""
    w, x, y, z = np.asarray(q, dtype=float) / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def rot_to_quat(r: np.ndarray) -> np.ndarray:
    """Rotation matrix to unit quaternion (w, x, y, z), w >= 0."""
    omega = rot_log(r)
    theta = np.linalg.norm(omega)
    if theta < _EPS:
        return np.array([1.0, 0.0, 0.0, 0.0])
    axis = omega / theta
    return np.concatenate([[np.cos(theta / 2.0)], np.sin(theta / 2.0) * axis])


def is_rotation(r: np.ndarray, tol: float = 1e-8) -> bool:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        return False
    return bool(
        np.allclose(r.T @ r, np.eye(3), atol=tol) and abs(np.linalg.det(r) - 1.0) < tol
    )


@dataclass(frozen=True)
class Transform:
    """Rigid transform: x_world = rot @ x_local + pos."""

    rot: np.ndarray
    pos: np.ndarray

    def __post_init__(self) -> None:
        rot = np.array(self.rot, dtype=float)
        pos = np.array(self.pos, dtype=float)
        rot.setflags(write=False)
        pos.setflags(write=False)
        object.__setattr__(self, "rot", rot)
        object.__setattr__(self, "pos", pos)
        if rot.shape != (3, 3) or pos.shape != (3,):
            raise ValidationError("Transform needs a 3x3 rotation and 3-vector position")

    @staticmethod
    def identity() -> "Transform":
        return Transform(np.eye(3), np.zeros(3))

    @staticmethod
    def from_parts(rot: np.ndarray, pos: np.ndarray, check: bool = True) -> "Transform":
        if check and not is_rotation(rot):
            raise ValidationError("rotation part is not orthonormal with det +1")
        return Transform(rot, pos)

    @staticmethod
    def translation(x: float, y: float, z: float) -> "Transform":
        return Transform(np.eye(3), np.array([x, y, z], dtype=float))

    def __matmul__(self, other: "Transform") -> "Transform":
        return Transform(self.rot @ other.rot, self.rot @ other.pos + self.pos)

    def inverse(self) -> "Transform":
        rt = self.rot.T
        return Transform(rt, -(rt @ self.pos))

    def apply(self, point: np.ndarray) -> np.ndarray:
        return self.rot @ np.asarray(point, dtype=float) + self.pos

    def allclose(self, other: "Transform", atol: float = 1e-9) -> bool:
        return bool(
            np.allclose(self.rot, other.rot, atol=atol)
            and np.allclose(self.pos, other.pos, atol=atol)
        )
