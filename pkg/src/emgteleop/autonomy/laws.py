"""Assistance laws: alignment blending, room-navigation blending, velocity governor.

All three laws are pure functions of their inputs so the control tick can
evaluate them deterministically.  The conventions used throughout:

  * robot frame: +x forward, +y left, angles CCW, z up from the floor
  * user inputs are normalized magnitudes in [0, 1]
  * blended motion commands are normalized to [-1, 1] per axis; the service
    layer maps them onto physical joint/base velocity limits
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

# Axes the autonomous alignment suggestion is allowed to drive.  Everything
# else belongs to the user alone: wrist orientation and the gripper are the
# final-approach/grasp axes and must pass through from the user untouched.
ALIGNMENT_AXES = ("base_drive", "base_rotate", "lift", "extension")
PROTECTED_AXES = ("wrist_yaw", "wrist_pitch", "wrist_roll", "gripper")

# Detections below this confidence never engage assistance.
CONFIDENCE_FLOOR = 0.3

TURN_SCALE = 0.3  # forward-scaling factor applied when only a turn is held


class ContractViolation(ValueError):
    """An autonomous command touched an axis reserved for the user."""


def sgn(x: float) -> float:
    """Sign with sgn(0) = 0; zero never conflicts with a nonzero sign."""
    if x > 0:
        return 1.0
    if x < 0:
        return -1.0
    return 0.0


def clamp(x: float, lo: float, hi: float) -> float:
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


@dataclass(frozen=True)
class MotionCommand:
    """Normalized per-axis command for the base and arm, in [-1, 1]."""

    base_drive: float = 0.0
    base_rotate: float = 0.0
    lift: float = 0.0
    extension: float = 0.0
    wrist_yaw: float = 0.0
    wrist_pitch: float = 0.0
    wrist_roll: float = 0.0
    gripper: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def is_zero(self) -> bool:
        return all(getattr(self, f.name) == 0.0 for f in fields(self))


@dataclass(frozen=True)
class BaseInput:
    """Directional base command held by the user: forward, left, right, back.

    Components are nonnegative magnitudes in [0, 1]; opposing directions are
    carried separately rather than as one signed value.
    """

    u_f: float = 0.0
    u_l: float = 0.0
    u_r: float = 0.0
    u_b: float = 0.0

    def __post_init__(self):
        for name in ("u_f", "u_l", "u_r", "u_b"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


def blend_alignment(
    u_h: MotionCommand,
    u_a: MotionCommand,
    alpha: float,
    limit: float = 1.0,
) -> MotionCommand:
    """Add the scaled autonomous suggestion to the user command.

    The suggestion may only drive the alignment axes (base drive/rotate,
    lift, extension); the wrist and gripper axes pass through from ``u_h``
    untouched.  Alignment axes are clamped to ``[-limit, limit]`` after the
    sum.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    for axis in PROTECTED_AXES:
        if getattr(u_a, axis) != 0.0:
            raise ContractViolation(
                f"autonomous command drives user-reserved axis {axis!r}"
            )
    out = {}
    for f in fields(MotionCommand):
        base = getattr(u_h, f.name)
        if f.name in ALIGNMENT_AXES:
            out[f.name] = clamp(base + alpha * getattr(u_a, f.name), -limit, limit)
        else:
            out[f.name] = base
    return MotionCommand(**out)


def assist_level(confidence: float) -> float:
    """Map detection confidence onto the assistance weight.

    Linear ramp from 0 at the detector's publication floor (0.3) to 1 at
    full confidence, clamped to [0, 1].
    """
    return clamp((confidence - CONFIDENCE_FLOOR) / (1.0 - CONFIDENCE_FLOOR), 0.0, 1.0)


@dataclass(frozen=True)
class AlignmentGains:
    """Proportional gains and per-axis caps for the alignment suggestion."""

    k_rotate: float = 2.0
    k_lift: float = 4.0
    cap_rotate: float = 0.6
    cap_lift: float = 0.6
    max_detection_age_s: float = 1.0 / 1.5  # one detector period


def arm_axis_heading(dx: float, dy: float, side: str = "right") -> float:
    """Base heading that points the arm axis through planar offset (dx, dy).

    The telescoping arm extends perpendicular to the drive direction; with
    the arm on the right side its axis direction at heading th is
    (sin th, -cos th), so solving for th gives atan2(dx, -dy).
    """
    if side == "right":
        return math.atan2(dx, -dy)
    if side == "left":
        return math.atan2(-dx, dy)
    raise ValueError(f"unknown arm side {side!r}")


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a > math.pi:
        a -= 2.0 * math.pi
    elif a <= -math.pi:
        a += 2.0 * math.pi
    return a


def alignment_command(
    centroid: tuple[float, float, float],
    confidence: float,
    age_s: float,
    lift_height: float,
    gains: AlignmentGains | None = None,
    side: str = "right",
) -> tuple[MotionCommand, float]:
    """Suggest base-rotation and lift motion that aligns the arm with a target.

    ``centroid`` is the detected object centroid in the robot frame.  The
    suggestion turns the base until the arm's extension axis intersects the
    centroid's ground projection and drives the lift toward its height,
    proportional to the error with per-axis caps.  Returns ``(u_a, alpha)``
    where ``alpha`` is the confidence-derived assistance weight.  A stale
    detection yields a zero command with ``alpha = 0``.
    """
    g = gains or AlignmentGains()
    if age_s > g.max_detection_age_s:
        return MotionCommand(), 0.0
    cx, cy, cz = centroid
    heading_err = wrap_angle(arm_axis_heading(cx, cy, side))
    lift_err = cz - lift_height
    u_a = MotionCommand(
        base_rotate=clamp(g.k_rotate * heading_err, -g.cap_rotate, g.cap_rotate),
        lift=clamp(g.k_lift * lift_err, -g.cap_lift, g.cap_lift),
    )
    return u_a, assist_level(confidence)


def room_blend(
    u: BaseInput,
    v_nav: float,
    omega_nav: float,
    k_v: float = 1.0,
    k_omega: float = 1.0,
) -> tuple[float, float]:
    """Blend the user's directional input with the planner velocity.

    The law, in order:

      1. Any backward input overrides everything: (v, w) = (-u_b, 0).
      2. The planner contribution is scaled by the user's forward effort:
         alpha = u_f when forward is held; a held turn alone admits a
         reduced alpha = 0.3 * max(u_l, u_r); otherwise alpha = 0 and the
         base does not progress along the path.
      3. v = k_v * alpha * v_nav.
      4. The user's turn command w_user = u_l - u_r is compared with the
         scaled planner turn w_plan = k_omega * alpha * omega_nav: when both
         are nonzero with opposite signs the user wins outright, otherwise
         they sum.
    """
    if u.u_b > 0.0:
        return (-u.u_b, 0.0)

    if u.u_f > 0.0:
        alpha = u.u_f
    elif u.u_l > 0.0 or u.u_r > 0.0:
        alpha = TURN_SCALE * max(u.u_l, u.u_r)
    else:
        alpha = 0.0

    v_out = k_v * alpha * v_nav
    omega_user = u.u_l - u.u_r
    omega_plan = k_omega * alpha * omega_nav

    conflict = (
        omega_user != 0.0
        and sgn(omega_plan) != 0.0
        and sgn(omega_user) != sgn(omega_plan)
    )
    omega_out = omega_user if conflict else omega_plan + omega_user
    return (v_out, omega_out)


@dataclass(frozen=True)
class GovernorConfig:
    """Geometry for the obstacle-distance velocity governor.

    ``corridor_halfwidth`` bounds the lateral band of scan points considered
    along the motion direction; ``d_offset`` subtracts the sensor-to-chassis-
    edge distance so zero clearance means contact; the scale falls linearly
    to zero over ``d_slow``.  The ``consider_*`` fields describe the wider
    proximity zone used for advisory events, not for scaling.
    """

    corridor_halfwidth: float = 0.27
    d_offset: float = 0.2
    d_slow: float = 0.3
    consider_lateral: float = 0.5
    consider_longitudinal: float = 0.3

    def __post_init__(self):
        if self.d_slow <= 0:
            raise ValueError("d_slow must be positive")
        for name in ("corridor_halfwidth", "d_offset",
                     "consider_lateral", "consider_longitudinal"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class GovernResult:
    v: float
    mu: float
    distance: float
    warning: str | None = None


def governor_scale(d: float, d_offset: float, d_slow: float) -> float:
    """Velocity scale mu = clamp((d - d_offset) / d_slow, 0, 1)."""
    return clamp((d - d_offset) / d_slow, 0.0, 1.0)


def govern(
    scan: list[tuple[float, float]],
    direction: float,
    v: float,
    config: GovernorConfig | None = None,
) -> GovernResult:
    """Scale linear speed by clearance to the nearest obstacle in the path.

    ``scan`` holds robot-frame (x, y) points; ``direction`` selects which
    half-plane matters (+1 forward, -1 reverse, 0 disables scaling).  The
    governed distance is the smallest range among points inside the lateral
    corridor on the motion side.  The angular command is never scaled.  An
    empty scan carries no information, so the speed passes through with a
    warning.
    """
    cfg = config or GovernorConfig()
    if direction == 0.0:
        return GovernResult(v=v, mu=1.0, distance=math.inf)
    if not scan:
        return GovernResult(
            v=v, mu=1.0, distance=math.inf,
            warning="governor: empty scan, speed not limited",
        )
    d = math.inf
    for (px, py) in scan:
        if px * direction <= 0.0:
            continue
        if abs(py) > cfg.corridor_halfwidth:
            continue
        r = math.hypot(px, py)
        if r < d:
            d = r
    mu = governor_scale(d, cfg.d_offset, cfg.d_slow) if math.isfinite(d) else 1.0
    return GovernResult(v=mu * v, mu=mu, distance=d)


def proximity_alert(
    scan: list[tuple[float, float]],
    config: GovernorConfig | None = None,
) -> bool:
    """True when any scan point falls inside the advisory proximity zone."""
    cfg = config or GovernorConfig()
    for (px, py) in scan:
        if abs(py) <= cfg.consider_lateral and abs(px) <= cfg.consider_longitudinal:
            return True
    return False
