"""Closed-form alignment inverse kinematics for the base + lift + extension chain.

The arm's extension axis is perpendicular to the drive direction, so aligning
with a point decouples into: rotate the base until the axis passes through
the point's ground projection, extend to the planar distance, lift to the
height.  All three come out in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..autonomy.laws import arm_axis_heading, wrap_angle
from .robot import JointLimits, RobotModel, RobotState


class ReachError(Exception):
    """Target outside the arm's reachable annulus or lift span."""

    def __init__(self, message: str, shortfall: float):
        super().__init__(message)
        self.shortfall = shortfall


@dataclass(frozen=True)
class AlignDeltas:
    d_theta: float
    d_extension: float
    d_lift: float

    def magnitude(self) -> float:
        return max(abs(self.d_theta), abs(self.d_extension), abs(self.d_lift))


def align_ik(
    state: RobotState,
    target: tuple[float, float, float],
    limits: JointLimits | None = None,
    side: str = "right",
) -> AlignDeltas:
    """Base-heading, extension, and lift deltas that put the gripper point
    on the target.

    Raises :class:`ReachError` when the planar distance falls outside the
    extension range or the height outside the lift range; ``shortfall``
    carries how far out of range the target is.
    """
    lims = limits or JointLimits()
    tx, ty, tz = target
    dx, dy = tx - state.x, ty - state.y
    r = math.hypot(dx, dy)
    if r < 1e-12:
        raise ReachError("target is at the base axis; heading undefined", 0.0)
    ext_lo, ext_hi = lims.extension
    if r > ext_hi:
        raise ReachError(
            f"target {r - ext_hi:.3f} m beyond maximum extension", r - ext_hi
        )
    if r < ext_lo:
        raise ReachError(
            f"target {ext_lo - r:.3f} m inside minimum extension", ext_lo - r
        )
    lift_lo, lift_hi = lims.lift
    if not lift_lo <= tz <= lift_hi:
        short = tz - lift_hi if tz > lift_hi else lift_lo - tz
        raise ReachError(f"target height {tz:.3f} m outside lift span", short)
    theta_star = arm_axis_heading(dx, dy, side)
    return AlignDeltas(
        d_theta=wrap_angle(theta_star - state.theta),
        d_extension=r - state.extension,
        d_lift=tz - state.lift,
    )


def apply_deltas(state: RobotState, deltas: AlignDeltas) -> RobotState:
    """Return the state after executing the deltas exactly (no dynamics)."""
    new = state.copy()
    new.theta = wrap_angle(state.theta + deltas.d_theta)
    new.extension = state.extension + deltas.d_extension
    new.lift = state.lift + deltas.d_lift
    return new


def gripper_error(model: RobotModel, state: RobotState,
                  target: tuple[float, float, float]) -> float:
    """Euclidean distance from the gripper point to the target."""
    return math.dist(model.gripper_position(state), target)
