"""Shared-autonomy layer: blending laws, velocity governor, and planning."""

from .laws import (
    ALIGNMENT_AXES,
    PROTECTED_AXES,
    CONFIDENCE_FLOOR,
    TURN_SCALE,
    AlignmentGains,
    BaseInput,
    ContractViolation,
    GovernorConfig,
    GovernResult,
    MotionCommand,
    alignment_command,
    arm_axis_heading,
    assist_level,
    blend_alignment,
    clamp,
    govern,
    governor_scale,
    proximity_alert,
    room_blend,
    sgn,
    wrap_angle,
)
from .planner import (
    INFLATION_MARGIN,
    Costmap,
    CostmapPlan,
    PlanningError,
    PurePursuitTracker,
    TrackerConfig,
    TrackerOutput,
    TrackingError,
    inflation_radius_for,
    plan_global,
)

__all__ = [
    "ALIGNMENT_AXES",
    "PROTECTED_AXES",
    "CONFIDENCE_FLOOR",
    "TURN_SCALE",
    "INFLATION_MARGIN",
    "AlignmentGains",
    "BaseInput",
    "ContractViolation",
    "Costmap",
    "CostmapPlan",
    "GovernorConfig",
    "GovernResult",
    "MotionCommand",
    "PlanningError",
    "PurePursuitTracker",
    "TrackerConfig",
    "TrackerOutput",
    "TrackingError",
    "alignment_command",
    "arm_axis_heading",
    "assist_level",
    "blend_alignment",
    "clamp",
    "govern",
    "governor_scale",
    "inflation_radius_for",
    "plan_global",
    "proximity_alert",
    "room_blend",
    "sgn",
    "wrap_angle",
]
