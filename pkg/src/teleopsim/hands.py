"""Hand retargeting: glove angles -> drive joints -> full finger joints.

The dexterous hand exposes m drive joints; the remaining joints are
mechanically interlocked with them. We model the interlock as an affine
coupling q_full = A q_drive + b, which covers tendon-style couplings and is
exactly testable. Out-of-limit commands clamp (and are counted) instead of
faulting: an over-extended operator must not halt teleoperation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ValidationError

log = logging.getLogger(__name__)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CouplingLaw:
    """Affine map from m drive joints to n full joints (n >= m)."""

    matrix: np.ndarray  # n x m
    offset: np.ndarray  # n
    drive_limits: np.ndarray  # m x 2 (min, max) radians

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrix", _freeze(self.matrix))
        object.__setattr__(self, "offset", _freeze(self.offset))
        object.__setattr__(self, "drive_limits", _freeze(self.drive_limits))
        n, m = self.matrix.shape
        if n < m:
            raise ValidationError(f"coupling maps {m} drive joints to {n} < {m} full joints")
        if self.offset.shape != (n,):
            raise ValidationError("offset length must match full joint count")
        if self.drive_limits.shape != (m, 2):
            raise ValidationError("drive_limits must be m pairs")
        if np.any(self.drive_limits[:, 0] >= self.drive_limits[:, 1]):
            raise ValidationError("each drive limit needs min < max")

    @property
    def n_full(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_drive(self) -> int:
        return self.matrix.shape[1]


def clamp_drive(law: CouplingLaw, q_drive: np.ndarray) -> tuple[np.ndarray, int]:
    """Clamp to drive limits; returns (clamped, number of clamped entries)."""
    q = np.asarray(q_drive, dtype=float)
    lo, hi = law.drive_limits[:, 0], law.drive_limits[:, 1]
    clamped = np.clip(q, lo, hi)
    return clamped, int(np.count_nonzero(clamped != q))


def expand(law: CouplingLaw, q_drive: np.ndarray) -> np.ndarray:
    """q_full = A q_drive + b, clamping the drive command to its limits first."""
    q = np.asarray(q_drive, dtype=float)
    if q.shape != (law.n_drive,):
        raise ValidationError(f"expected {law.n_drive} drive joints, got shape {q.shape}")
    q, n_clamped = clamp_drive(law, q)
    if n_clamped:
        log.warning("drive command clamped on %d joint(s)", n_clamped)
    return law.matrix @ q + law.offset


@dataclass(frozen=True)
class GloveMapping:
    """Per-drive-joint weighted selection of glove joints.

    rows[i] is a list of (glove_index, weight) pairs feeding drive joint i.
    """

    glove_joints: int
    rows: tuple[tuple[tuple[int, float], ...], ...]

    def __post_init__(self) -> None:
        for i, row in enumerate(self.rows):
            if not row:
                raise ConfigError(f"drive joint {i} has no glove sources")
            for idx, _w in row:
                if not 0 <= idx < self.glove_joints:
                    raise ConfigError(
                        f"drive joint {i} references glove joint {idx}, "
                        f"but the glove has {self.glove_joints}"
                    )

    @property
    def n_drive(self) -> int:
        return len(self.rows)

    def as_matrix(self) -> np.ndarray:
        w = np.zeros((self.n_drive, self.glove_joints))
        for i, row in enumerate(self.rows):
            for idx, weight in row:
                w[i, idx] += weight
        return w


def retarget_glove(law: CouplingLaw, glove_angles: np.ndarray,
                   mapping: GloveMapping) -> tuple[np.ndarray, int]:
    """Map glove joint angles onto drive joints; returns (q_drive, clamp count)."""
    g = np.asarray(glove_angles, dtype=float)
    if g.shape != (mapping.glove_joints,):
        raise ConfigError(f"glove vector has shape {g.shape}, mapping expects {mapping.glove_joints}")
    if mapping.n_drive != law.n_drive:
        raise ConfigError(f"mapping drives {mapping.n_drive} joints, coupling expects {law.n_drive}")
    raw = mapping.as_matrix() @ g
    return clamp_drive(law, raw)


class HandRetargeter:
    """Stateful wrapper tracking clamp events across a session."""

    def __init__(self, law: CouplingLaw, mapping: GloveMapping) -> None:
        self.law = law
        self.mapping = mapping
        self.clamp_count = 0

    def retarget(self, glove_angles: np.ndarray) -> np.ndarray:
        q_drive, clamped = retarget_glove(self.law, glove_angles, self.mapping)
        self.clamp_count += clamped
        return q_drive

    def full_joints(self, glove_angles: np.ndarray) -> np.ndarray:
        return expand(self.law, self.retarget(glove_angles))


def identity_law(n: int, limit: float = 2.0) -> CouplingLaw:
    """Toy 1:1 coupling, n drive joints driving n full joints."""
    limits = np.tile([-limit, limit], (n, 1))
    return CouplingLaw(np.eye(n), np.zeros(n), limits)


def interlocked_law(full: int = 18, drive: int = 13) -> CouplingLaw:
    """Synthetic stand-in for a hand whose extra joints follow their drivers.

    The first ``drive`` full joints track the drive joints directly; each of
    the remaining ``full - drive`` interlocked joints follows a blend of two
    neighbouring drivers at reduced travel, the usual shape of a distal
    finger joint slaved to its proximal pair.
    """
    a = np.zeros((full, drive))
    a[:drive, :drive] = np.eye(drive)
    for r in range(drive, full):
        i = (r - drive) * 2 % drive
        j = (i + 1) % drive
        a[r, i] = 0.6
        a[r, j] = 0.4
    b = np.zeros(full)
    limits = np.tile([0.0, 1.6], (drive, 1))
    limits[0] = [-0.5, 1.6]  # thumb abduction travels both ways
    return CouplingLaw(a, b, limits)


def grouped_glove_mapping(glove_joints: int = 20, drive_joints: int = 13) -> GloveMapping:
    """Average consecutive glove joints into each drive joint."""
    rows: list[tuple[tuple[int, float], ...]] = []
    per = glove_joints / drive_joints
    for i in range(drive_joints):
        lo = int(round(i * per))
        hi = max(lo + 1, int(round((i + 1) * per)))
        hi = min(hi, glove_joints)
        idxs = list(range(lo, hi)) or [glove_joints - 1]
        w = 1.0 / len(idxs)
        rows.append(tuple((idx, w) for idx in idxs))
    return GloveMapping(glove_joints, tuple(rows))
