"""Deterministic 2-D home simulation: world, robot, sensors, alignment IK."""

from .world import (
    DetectorParams,
    Scene,
    SceneObject,
    World,
    WorldError,
    WorldMap,
    default_home,
)
from .robot import (
    CAPTURE_RADIUS,
    PHYSICS_DT,
    GraspEvent,
    JointLimits,
    RobotGeometry,
    RobotModel,
    RobotState,
    SpeedLimits,
)
from .sensors import (
    LIDAR_BEAMS,
    LIDAR_MAX_RANGE,
    Detection,
    Detector,
    lidar,
    scan_points,
)
from .ik import AlignDeltas, ReachError, align_ik, apply_deltas, gripper_error

__all__ = [
    "CAPTURE_RADIUS",
    "LIDAR_BEAMS",
    "LIDAR_MAX_RANGE",
    "PHYSICS_DT",
    "AlignDeltas",
    "Detection",
    "Detector",
    "DetectorParams",
    "GraspEvent",
    "JointLimits",
    "ReachError",
    "RobotGeometry",
    "RobotModel",
    "RobotState",
    "Scene",
    "SceneObject",
    "SpeedLimits",
    "World",
    "WorldError",
    "WorldMap",
    "align_ik",
    "apply_deltas",
    "default_home",
    "gripper_error",
    "lidar",
    "scan_points",
]
