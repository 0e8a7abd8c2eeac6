"""teleopsim: a desk-scale, hardware-free teleoperation stack.

Binary wire codec and bandwidth accounting, a deterministic emulated network
link, a config-driven pub/sub bridge with rate decimation, hand-coupling and
task-based IK retargeting, a velocity-triplet locomotion interface, and a
closed-loop scenario runner with a live operator console protocol.
"""

__version__ = "0.1.0"

from .bandwidth import StreamSpec, budget_report, stream_bandwidth
from .bridge import Bridge, BridgeRoute, BusEndpoint, Direction, load_routes
from .bus import Bus, BusMessage
from .clock import Clock, SimClock, WallClock
from .errors import ConfigError, TeleopsimError, ValidationError
from .hands import CouplingLaw, GloveMapping, HandRetargeter, expand, retarget_glove
from .ik import (FrameCalibration, IkParams, IkResult, IkTask, TaskKind,
                 apply_calibration, calibrate, solve_ik, task_residual)
from .kinematics import JointSpec, KinChain, forward_kinematics
from .locomotion import (DiffDriveBase, FootStance, Footstep, FootstepParams,
                         LocomotionParams, OperatorPose, UnicycleFootstepPlanner,
                         VelocityTriplet, compute_triplet, map_omni)
from .messages import (Hand, HandFrame, MessageHeader, MessageType, WearableBatch,
                       decode, encode)
from .netem import EmulatedLink, LinkSpec, LinkStats, steady_state_latency
from .robot import BaseKind, RobotSpec, SimRobot
from .trace import OperatorTrace, TraceSample, load_trace, save_trace
