"""Nonholonomic base + telescoping-arm kinematic chain on a fixed 10 ms step.

The base follows unicycle kinematics with an exact-arc update (no Euler
drift for curved motion).  The arm is a vertical lift carrying a horizontal
telescoping extension perpendicular to the drive direction; the wrist angles
orient the gripper but do not move its position in this planar surrogate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from ..autonomy.laws import clamp, wrap_angle
from .world import Scene, SceneObject, WorldMap

PHYSICS_DT = 0.01  # s, fixed

# An object whose centroid lies within this distance of the gripper point
# can be captured by a closing gripper.
CAPTURE_RADIUS = 0.06


@dataclass(frozen=True)
class RobotGeometry:
    """Chassis footprint and arm mounting; defaults follow a compact
    tele-manipulator base of the Stretch class."""

    length: float = 0.33
    width: float = 0.34
    arm_side: str = "right"

    @property
    def circumscribed_radius(self) -> float:
        return math.hypot(self.length / 2.0, self.width / 2.0)


@dataclass(frozen=True)
class JointLimits:
    lift: tuple[float, float] = (0.0, 1.1)
    extension: tuple[float, float] = (0.0, 0.52)
    wrist_yaw: tuple[float, float] = (-1.57, 1.57)
    wrist_pitch: tuple[float, float] = (-1.57, 0.56)
    wrist_roll: tuple[float, float] = (-3.14, 3.14)
    gripper: tuple[float, float] = (0.0, 0.085)


@dataclass(frozen=True)
class SpeedLimits:
    """Maximum magnitudes used to scale normalized commands to velocities."""

    v_max: float = 0.3
    omega_max: float = 1.0
    lift: float = 0.12
    extension: float = 0.14
    wrist: float = 1.0
    gripper: float = 0.08


@dataclass
class RobotState:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0
    lift: float = 0.6
    extension: float = 0.0
    wrist_yaw: float = 0.0
    wrist_pitch: float = 0.0
    wrist_roll: float = 0.0
    gripper: float = 0.085  # aperture, open

    JOINTS = ("lift", "extension", "wrist_yaw", "wrist_pitch",
              "wrist_roll", "gripper")

    def copy(self) -> "RobotState":
        return replace(self)


@dataclass(frozen=True)
class GraspEvent:
    kind: str  # "grasp" | "release"
    object_id: str


class RobotModel:
    """Geometry + limits bundled with the update rules that use them."""

    def __init__(self, geometry: RobotGeometry | None = None,
                 limits: JointLimits | None = None,
                 speeds: SpeedLimits | None = None):
        self.geometry = geometry or RobotGeometry()
        self.limits = limits or JointLimits()
        self.speeds = speeds or SpeedLimits()

    # ------------------------------------------------------------ collision

    def collides(self, wmap: WorldMap, x: float, y: float, theta: float) -> bool:
        """True when the chassis rectangle overlaps any occupied cell.

        Cells are treated as squares: the rectangle is dilated by the cell's
        support along the body axes, then cell centers are point-tested.
        """
        g = self.geometry
        cell = wmap.cell_size
        half = cell / 2.0
        support = half * (abs(math.cos(theta)) + abs(math.sin(theta)))
        hl = g.length / 2.0 + support
        hw = g.width / 2.0 + support
        reach = math.hypot(hl, hw)
        r0, c0 = wmap.cell_at(x - reach, y - reach)
        r1, c1 = wmap.cell_at(x + reach, y + reach)
        rows, cols = wmap.shape
        ct, st = math.cos(theta), math.sin(theta)
        for r in range(r0, r1 + 1):
            for c in range(c0, c1 + 1):
                if not (0 <= r < rows and 0 <= c < cols):
                    continue  # off-map area has no cells; boundary is walled
                if not wmap.grid[r, c]:
                    continue
                cx, cy = wmap.cell_center((r, c))
                dx, dy = cx - x, cy - y
                bx = dx * ct + dy * st
                by = -dx * st + dy * ct
                if abs(bx) <= hl and abs(by) <= hw:
                    return True
        return False

    # ----------------------------------------------------------- kinematics

    def step(
        self,
        wmap: WorldMap,
        state: RobotState,
        v: float,
        omega: float,
        joint_vel: dict[str, float] | None = None,
        dt: float = PHYSICS_DT,
    ) -> tuple[RobotState, bool]:
        """One fixed physics step; returns (new state, base_blocked).

        The base pose integrates along an exact circular arc when turning.
        If the candidate footprint would overlap an obstacle the linear
        velocity is rejected (forced to zero); if even the pure rotation
        would collide, the pose holds still.  Joints integrate with their
        positions clamped to limits.
        """
        x, y, th = state.x, state.y, state.theta
        blocked = False
        nx, ny, nth = _arc(x, y, th, v, omega, dt)
        if v != 0.0 and self.collides(wmap, nx, ny, nth):
            blocked = True
            nx, ny, nth = _arc(x, y, th, 0.0, omega, dt)
        if self.collides(wmap, nx, ny, nth):
            if not self.collides(wmap, x, y, th):
                nx, ny, nth = x, y, th
                blocked = True
            # already embedded (should not happen): leave the pose where the
            # update put it rather than wedging forever

        new = state.copy()
        new.x, new.y, new.theta = nx, ny, wrap_angle(nth)
        for name, vel in (joint_vel or {}).items():
            if name not in RobotState.JOINTS:
                raise ValueError(f"unknown joint {name!r}")
            lo, hi = getattr(self.limits, name)
            setattr(new, name, clamp(getattr(state, name) + vel * dt, lo, hi))
        return new, blocked

    # ------------------------------------------------------------------- FK

    def arm_direction(self, theta: float) -> tuple[float, float]:
        """Unit vector of the arm's extension axis in the world frame."""
        if self.geometry.arm_side == "right":
            return (math.sin(theta), -math.cos(theta))
        return (-math.sin(theta), math.cos(theta))

    def gripper_position(self, state: RobotState) -> tuple[float, float, float]:
        ax, ay = self.arm_direction(state.theta)
        return (state.x + state.extension * ax,
                state.y + state.extension * ay,
                state.lift)

    # ---------------------------------------------------------------- grasp

    def grasp_check(
        self,
        state: RobotState,
        scene: Scene,
        gripper_vel: float,
    ) -> list[GraspEvent]:
        """Capture on closing, release on opening; held objects track the
        gripper point exactly."""
        events: list[GraspEvent] = []
        tip = self.gripper_position(state)
        held = scene.grasped_object()
        if gripper_vel < 0.0 and held is None:
            best: SceneObject | None = None
            best_d = CAPTURE_RADIUS
            for obj in scene.objects:
                d = math.dist(obj.position, tip)
                if d <= best_d:
                    best, best_d = obj, d
            if best is not None:
                best.grasped = True
                events.append(GraspEvent("grasp", best.id))
                held = best
        elif gripper_vel > 0.0 and held is not None:
            held.grasped = False
            events.append(GraspEvent("release", held.id))
            held = None
        if held is not None:
            held.position = tip
        return events


def _arc(x: float, y: float, th: float, v: float, omega: float,
         dt: float) -> tuple[float, float, float]:
    """Exact unicycle arc over dt (straight-line form below the turn epsilon)."""
    if abs(omega) > 1e-6:
        nth = th + omega * dt
        r = v / omega
        return (x + r * (math.sin(nth) - math.sin(th)),
                y - r * (math.cos(nth) - math.cos(th)),
                nth)
    return (x + v * math.cos(th) * dt, y + v * math.sin(th) * dt, th + omega * dt)
