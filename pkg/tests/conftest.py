import struct
from pathlib import Path

import numpy as np
import pytest

from teleopsim.geometry import Transform
from teleopsim.kinematics import JointSpec, KinChain

REPO = Path(__file__).resolve().parent.parent
CONFIGS = REPO / "configs"
TRACES = REPO / "traces"


def f32(x: float) -> float:
    """Round to the nearest float32 value (what the wire carries)."""
    return struct.unpack("<f", struct.pack("<f", x))[0]


def joint(axis, xyz=(0.0, 0.0, 0.0), limits=(-np.pi, np.pi)) -> JointSpec:
    return JointSpec(np.asarray(axis, dtype=float), Transform.translation(*xyz), tuple(limits))


def planar_two_link(l1: float = 1.0, l2: float = 1.0) -> KinChain:
    """Two continuous z-axis revolute joints in the xy plane with unit links."""
    wide = (-2 * np.pi, 2 * np.pi)
    return KinChain(
        (joint([0, 0, 1], limits=wide), joint([0, 0, 1], (l1, 0, 0), limits=wide)),
        tip=Transform.translation(l2, 0, 0),
    )


def random_chain(rng: np.random.Generator, n_joints: int = 6) -> KinChain:
    """Random serial chain with unit axes and modest offsets."""
    joints = []
    for _ in range(n_joints):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        xyz = rng.uniform(-0.3, 0.3, size=3)
        joints.append(joint(axis, xyz, (-2.5, 2.5)))
    return KinChain(tuple(joints), tip=Transform.translation(*rng.uniform(-0.2, 0.2, size=3)))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)
