"""The teleoperation engine: one deterministic loop from labels to motion.

Timeline (all simulation time, no wall clock):

  * 10 ms   physics step (base arc + joints + grasp attachment)
  * 40 ms   one label push per arm (25 windows/s, the classifier cadence)
  * 100 ms  control tick: inbound messages -> mode/actions -> one authority
            (direct teleop | alignment blend | room blend) -> governor ->
            command emission + log
  * 1/1.5 s detector tick while an alignment query is armed

Every input that influences the run (window labels, text commands, task
markers) is logged, so :func:`replay` can rebuild the identical session from
the log alone plus the world file.
"""

from __future__ import annotations

import hashlib
import math
import os
from collections import deque
from dataclasses import dataclass

import numpy as np

from ..autonomy.laws import (
    BaseInput,
    MotionCommand,
    alignment_command,
    blend_alignment,
    clamp,
    govern,
    proximity_alert,
    room_blend,
    sgn,
)
from ..autonomy.planner import (
    Costmap,
    PlanningError,
    PurePursuitTracker,
    TrackerConfig,
    TrackingError,
    inflation_radius_for,
    plan_global,
)
from ..intent import (
    REST,
    ArmPipeline,
    CommandEmitter,
    GestureCommand,
    HoldTracker,
    MODE_CYCLE,
    ModeMachine,
    UdpCommandSender,
    map_action,
    speed_tier,
)
from ..ml.data import LEFT_GESTURES, RIGHT_GESTURES
from ..ml.model import load_model
from ..sim.robot import RobotModel, RobotState
from ..sim.sensors import Detector, lidar, scan_points
from ..sim.world import World, WorldError, default_home
from .config import ConfigError, ServiceConfig, parse_action_table
from .sessionlog import LogError, SessionLog, verify_chain
from .tasks import TaskRun, TaskSpec
from .textcmd import parse_text

PUSH_PERIOD_MS = 40
TICK_PERIOD_MS = 100
STEP_MS = 10

# gesture labels the left arm maps onto directional base input in room mode
_ROOM_DIRECTIONS = {
    "wrist_forward": "u_f",
    "wrist_back": "u_b",
    "wrist_supination": "u_l",
    "wrist_pronation": "u_r",
}

_GRIPPER_SEEK_TOL = 0.005
_WRIST_SEEK_TOL = 0.05
_WRIST_YAW_PRESETS = (0.0, 1.57)


def world_hash(world: World) -> str:
    return hashlib.sha256(world.to_json().encode()).hexdigest()


@dataclass
class AlignState:
    """An armed alignment query and the latest world-frame target for it."""

    query: str
    object_id: str | None = None
    label: str | None = None
    target: tuple[float, float, float] | None = None
    confidence: float = 0.0
    det_ms: int | None = None

    def fresh(self, t_ms: int, max_age_s: float) -> bool:
        return (self.target is not None and self.det_ms is not None
                and (t_ms - self.det_ms) / 1000.0 <= max_age_s)


class TeleopEngine:
    """Deterministic orchestrator for one teleoperation session."""

    def __init__(
        self,
        config: ServiceConfig | None = None,
        world: World | None = None,
        scenario=None,
        log_path=None,
        start: dict | None = None,
        replay_mode: bool = False,
    ):
        self.config = config or ServiceConfig()
        if world is None:
            world = (World.load(self.config.world_file)
                     if self.config.world_file else default_home())
        self.world = world
        self.world_sha = world_hash(world)
        self.scene = world.scene.copy()
        self.model = RobotModel()
        self.models = {}
        if not replay_mode:
            # replay feeds recorded labels back in, so the model files a
            # session was run with do not need to exist to replay its log
            for arm, path in (("left", self.config.left_model),
                              ("right", self.config.right_model)):
                if path is None:
                    continue
                if not os.path.exists(path):
                    raise ConfigError(f"model file not found: {path}")
                self.models[arm] = load_model(path)

        self.emg = None
        if self.config.emg_endpoint and not replay_mode:
            if scenario is not None:
                raise ConfigError("scripted scenarios own the label stream; "
                                  "unset emg_endpoint to run one")
            from .emgsource import EmgGestureSource
            self.emg = EmgGestureSource(
                self.config.emg_endpoint, self.models,
                {"left": LEFT_GESTURES, "right": RIGHT_GESTURES}).start()

        self.action_table = parse_action_table(self.config.action_table)
        self.left = ArmPipeline(LEFT_GESTURES)
        self.right = ArmPipeline(RIGHT_GESTURES)
        self.mode = ModeMachine()
        self.emitter = CommandEmitter()
        self.holds = HoldTracker()
        self.detector = Detector(world.detector, seed=self.config.seed)
        self.scenario = scenario
        self.log = SessionLog(log_path)
        self.sender = None
        if self.config.udp_endpoint and not replay_mode:
            self.sender = UdpCommandSender(self.config.udp_endpoint)

        self.t_ms = 0
        self.state = self._resolve_start(start)
        if self.model.collides(world.map, self.state.x, self.state.y,
                               self.state.theta):
            raise WorldError("start pose collides with the map")

        self.gesture_enabled = self.config.gesture_on_start
        self.room_mode = False
        self.drive_sign = 1.0
        self.nav = None           # {"tracker", "room", "cost"}
        self.align: AlignState | None = None
        self.tasks: list[TaskRun] = []
        self.listeners = []
        self.inbound_sources = []

        self._costmap: Costmap | None = None
        self._inbound: deque[dict] = deque()
        self._held_labels = {"left": REST, "right": REST}
        self._prev_actions: set[str] = set()
        self._gripper_target: float | None = None
        self._yaw_target: float | None = None
        self._motion = (0.0, 0.0, {})
        self._last_heat: dict[str, np.ndarray] = {}
        self._emg_err_logged = False
        self._last_window_ms: int | None = None
        self._detect_due: float | None = None
        self._push_i = 0
        self._was_stale = True
        self._mu_limited = False
        self._scan_warned = False
        self._finished = False
        self._heat_rng = np.random.default_rng(self.config.seed + 1)

        self.log.append(0, "session_start", {
            "seed": self.config.seed,
            "world_sha256": self.world_sha,
            "config": self.config.to_dict(),
            "start": {
                "pose": [self.state.x, self.state.y, self.state.theta],
                "lift": self.state.lift,
                "extension": self.state.extension,
            },
        })
        self._broadcast(self._mode_message())

    # ------------------------------------------------------------ wiring

    def add_listener(self, fn):
        self.listeners.append(fn)

    def add_inbound_source(self, fn):
        """``fn()`` returns an iterable of inbound messages, drained per tick."""
        self.inbound_sources.append(fn)

    def queue_text(self, text: str):
        self._inbound.append({"kind": "text_command", "text": text})

    def set_held_labels(self, left: str | None = None, right: str | None = None):
        """Update the keyboard-held labels; arms passed as None are untouched
        (release a key by passing "rest" explicitly)."""
        msg = {}
        if left is not None:
            msg["left"] = left
        if right is not None:
            msg["right"] = right
        self._apply_keyboard(msg)

    def held_object(self):
        return self.scene.grasped_object()

    def _broadcast(self, msg: dict):
        for fn in self.listeners:
            try:
                fn(msg)
            except Exception:  # noqa: BLE001 - listeners must not stop the loop
                pass

    # ------------------------------------------------------------ lifecycle

    def _resolve_start(self, start: dict | None) -> RobotState:
        if start is None:
            room = self.config.start_room
            if room not in self.world.map.rooms:
                raise ConfigError(f"start room {room!r} not in world")
            x, y, theta = self.world.map.rooms[room]
            start = {"pose": [x, y, theta]}
        pose = start["pose"]
        st = RobotState(x=float(pose[0]), y=float(pose[1]), theta=float(pose[2]))
        if "lift" in start:
            st.lift = float(start["lift"])
        if "extension" in start:
            st.extension = float(start["extension"])
        return st

    def run_ms(self, duration_ms: int):
        if duration_ms % STEP_MS:
            raise ValueError(f"duration must be a multiple of {STEP_MS} ms")
        end = self.t_ms + duration_ms
        while self.t_ms < end:
            self._boundary(self.t_ms)
            self._physics_step()
            self.t_ms += STEP_MS

    def finish(self):
        """Final bookkeeping: open tasks marked incomplete, end record written."""
        if self._finished:
            return
        self._finished = True
        for run in self.tasks:
            if not run.done:
                self.log.append(self.t_ms, "task", {
                    "event": "incomplete", "name": run.spec.name})
        s = self.state
        held = self.held_object()
        self.log.append(self.t_ms, "session_end", {
            "duration_ms": self.t_ms,
            "final_pose": [s.x, s.y, s.theta],
            "final_joints": {j: getattr(s, j) for j in RobotState.JOINTS},
            "held": held.id if held else None,
        })

    def close(self):
        self.log.close()
        if self.sender is not None:
            self.sender.close()

    # ------------------------------------------------------------ main loop

    def _boundary(self, t: int):
        if self.scenario is not None:
            for msg in self.scenario.events(t):
                self._inbound.append(msg)
        self._push_windows(t)
        if t % TICK_PERIOD_MS == 0:
            self._control_tick(t)
        self._detect(t)

    def _push_windows(self, t: int):
        labels = probs = None
        if self.scenario is not None:
            labels = self.scenario.labels(t, self)
        elif t % PUSH_PERIOD_MS == 0:
            if self.emg is not None:
                probs = self.emg.take()
            else:
                labels = dict(self._held_labels)
        if not labels and not probs:
            return
        self._push_i += 1
        for arm, pipe in (("left", self.left), ("right", self.right)):
            if probs is not None:
                if arm not in probs:
                    continue
                vec, grid = probs[arm]
                voted = pipe.push_probs(vec)
                self._last_heat[arm] = grid
                # log the gated label: replay re-pushes it at the vote stage
                self.log.append(t, "window", {"arm": arm, "in": pipe.last_push,
                                              "out": voted})
            else:
                if arm not in labels:
                    continue
                label = labels[arm] or REST
                voted = pipe.push_label(label)
                self.log.append(t, "window",
                                {"arm": arm, "in": label, "out": voted})
        self.emitter.note_window(t)
        self._last_window_ms = t
        if self.gesture_enabled:
            if self.mode.step(t / 1000.0, self.left.voted, self.right.voted):
                self._mode_changed(t)
        self._broadcast({"kind": "prediction", "t_ms": t,
                         "left": self.left.voted, "right": self.right.voted})
        if self.listeners and self._push_i % 4 == 0:
            self._broadcast({"kind": "heatmap", "t_ms": t,
                             "left": self._heat_payload("left", self.left.voted),
                             "right": self._heat_payload("right",
                                                         self.right.voted)})

    def _heat_payload(self, arm: str, voted: str) -> list:
        grid = self._last_heat.get(arm)
        if grid is None:
            return self._surrogate_heatmap(voted)
        return np.round(grid, 3).tolist()

    def _physics_step(self):
        v, omega, joint_vel = self._motion
        self.state, _blocked = self.model.step(
            self.world.map, self.state, v, omega, joint_vel)
        events = self.model.grasp_check(self.state, self.scene,
                                        joint_vel.get("gripper", 0.0))
        for ev in events:
            self.log.append(self.t_ms + STEP_MS, "grasp",
                            {"event": ev.kind, "id": ev.object_id})
            self._broadcast({"kind": "log", "t_ms": self.t_ms + STEP_MS,
                             "level": "info",
                             "text": f"{ev.kind}: {ev.object_id}"})

    # ------------------------------------------------------------ control tick

    def _control_tick(self, t: int):
        for source in self.inbound_sources:
            for msg in source():
                self._inbound.append(msg)
        while self._inbound:
            self._handle_inbound(self._inbound.popleft(), t)

        self._update_tasks(t)

        if (self.emg is not None and self.emg.error
                and not self._emg_err_logged):
            self._emg_err_logged = True
            self.log.append(t, "degradation",
                            {"stage": "stream", "detail": self.emg.error})

        stale = self.emitter.is_stale(t)
        if stale and not self._was_stale:
            self.log.append(t, "degradation",
                            {"stage": "classifier",
                             "detail": "no window for 500 ms; commands at rest"})
        self._was_stale = stale

        active = self.gesture_enabled and not stale
        eff_left = self.left.voted if active else REST
        eff_right = self.right.voted if active else REST
        dual_hold = (eff_left == eff_right == self.mode.trigger_label)
        if dual_hold:
            eff_left = eff_right = REST

        acts = map_action(self.mode.mode, eff_left, eff_right, self.action_table)
        aset = set(acts.actions)
        self._rising_edge_toggles(aset, t)
        holds = self.holds.update(t / 1000.0, aset)
        tiers = {a: speed_tier(a, holds[a]) for a in aset}
        tier = max(tiers.values(), default=1)

        u_h, axis_tier = self._user_motion(aset, tiers)

        authority = "direct"
        max_age = self.config.alignment.max_detection_age_s
        if self.nav is not None:
            authority = "room"
        elif self.align is not None and self.align.fresh(t, max_age):
            authority = "align"

        u = u_h
        if authority == "align":
            u_a, alpha = alignment_command(
                self._target_in_base_frame(self.align.target),
                self.align.confidence,
                (t - self.align.det_ms) / 1000.0,
                self.state.lift,
                self.config.alignment,
                self.model.geometry.arm_side,
            )
            u = blend_alignment(u_h, u_a, alpha)

        v, omega, joint_vel = self._to_physical(u, axis_tier)

        if authority == "room":
            v, omega = self._room_base(eff_left, t)

        ranges = lidar(self.world.map, self.state.x, self.state.y,
                       self.state.theta, self.config.lidar_beams,
                       self.config.lidar_max_range)
        pts = scan_points(ranges, self.config.lidar_max_range)
        result = govern(pts, sgn(v), v, self.config.governor)
        v = result.v
        if result.warning and not self._scan_warned:
            self._scan_warned = True
            self.log.append(t, "degradation",
                            {"stage": "lidar", "detail": result.warning})
        if result.mu < 1.0 and not self._mu_limited:
            self.log.append(t, "governor",
                            {"mu": result.mu, "distance": result.distance})
        self._mu_limited = result.mu < 1.0

        cmd = self.emitter.tick(t, self.mode.mode, eff_left, eff_right, tier)
        latency = None if cmd.stale else t - self._last_window_ms
        self.log.append(t, "command", {
            "seq": cmd.seq, "mode": cmd.mode, "left": cmd.left,
            "right": cmd.right, "tier": cmd.tier, "stale": cmd.stale,
            "authority": authority, "v": v, "w": omega, "mu": result.mu,
            "lat_ms": latency,
        })
        if self.sender is not None:
            self.sender.send(cmd)

        self._motion = (v, omega, joint_vel)
        self._broadcast_state(t, cmd, authority, v, omega, result.mu,
                              proximity_alert(pts, self.config.governor))
        self._broadcast({"kind": "command_echo", "t_ms": t, "seq": cmd.seq,
                         "mode": cmd.mode, "left": cmd.left, "right": cmd.right,
                         "tier": cmd.tier, "stale": cmd.stale})

    # ------------------------------------------------------------ user motion

    def _rising_edge_toggles(self, aset: set[str], t: int):
        fresh = aset - self._prev_actions
        if "arm_direction_toggle" in fresh:
            self.drive_sign = -self.drive_sign
            self.log.append(t, "toggle",
                            {"what": "drive_direction", "sign": self.drive_sign})
        if "gripper_toggle" in fresh:
            lo, hi = self.model.limits.gripper
            mid = (lo + hi) / 2.0
            self._gripper_target = lo if self.state.gripper > mid else hi
        if "wrist_yaw_toggle" in fresh:
            a, b = _WRIST_YAW_PRESETS
            near_a = abs(self.state.wrist_yaw - a) < abs(self.state.wrist_yaw - b)
            self._yaw_target = b if near_a else a
        self._prev_actions = aset

    def _user_motion(self, aset, tiers) -> tuple[MotionCommand, dict]:
        axes: dict[str, float] = {}
        axis_tier: dict[str, int] = {}

        def put(axis, value, action):
            axes[axis] = value
            axis_tier[axis] = tiers[action]

        for a in aset:
            if a == "base_forward":
                put("base_drive", self.drive_sign, a)
            elif a == "base_backward":
                put("base_drive", -self.drive_sign, a)
            elif a == "base_turn_left":
                put("base_rotate", 1.0, a)
            elif a == "base_turn_right":
                put("base_rotate", -1.0, a)
            elif a == "lift_up":
                put("lift", 1.0, a)
            elif a == "lift_down":
                put("lift", -1.0, a)
            elif a == "arm_extend":
                put("extension", 1.0, a)
            elif a == "arm_retract":
                put("extension", -1.0, a)
            elif a == "wrist_pitch_up":
                put("wrist_pitch", 1.0, a)
            elif a == "wrist_pitch_down":
                put("wrist_pitch", -1.0, a)
            elif a == "wrist_roll_left":
                put("wrist_roll", 1.0, a)
            elif a == "wrist_roll_right":
                put("wrist_roll", -1.0, a)
            elif a == "gripper_close":
                axes["gripper"] = -1.0
                axis_tier["gripper"] = tiers[a]
                self._gripper_target = None

        if "gripper" not in axes and self._gripper_target is not None:
            err = self._gripper_target - self.state.gripper
            if abs(err) <= _GRIPPER_SEEK_TOL:
                self._gripper_target = None
            else:
                axes["gripper"] = sgn(err)
        if self._yaw_target is not None:
            err = self._yaw_target - self.state.wrist_yaw
            if abs(err) <= _WRIST_SEEK_TOL:
                self._yaw_target = None
            else:
                axes["wrist_yaw"] = sgn(err)

        return MotionCommand(**axes), axis_tier

    def _to_physical(self, u: MotionCommand, axis_tier: dict):
        f = self.config.speeds
        hw = self.model.speeds
        spec = {
            "base_drive": (f.base, hw.v_max),
            "base_rotate": (f.turn, hw.omega_max),
            "lift": (f.lift, hw.lift),
            "extension": (f.arm, hw.extension),
            "wrist_yaw": (f.wrist, hw.wrist),
            "wrist_pitch": (f.wrist, hw.wrist),
            "wrist_roll": (f.wrist, hw.wrist),
            "gripper": (f.gripper, hw.gripper),
        }

        def physical(axis):
            fraction, limit = spec[axis]
            norm = getattr(u, axis) * fraction * axis_tier.get(axis, 1)
            return clamp(norm, -1.0, 1.0) * limit

        v = physical("base_drive")
        omega = physical("base_rotate")
        joint_vel = {}
        for joint in RobotState.JOINTS:
            vel = physical(joint)
            if vel != 0.0:
                joint_vel[joint] = vel
        return v, omega, joint_vel

    # ------------------------------------------------------------ room mode

    def _room_base(self, eff_left: str, t: int) -> tuple[float, float]:
        tracker: PurePursuitTracker = self.nav["tracker"]
        try:
            out = tracker.update(self.state.x, self.state.y, self.state.theta)
        except TrackingError as err:
            self.log.append(t, "degradation", {"stage": "tracker",
                                               "detail": str(err)})
            self._clear_nav(t, "failed")
            return 0.0, 0.0
        if out.goal_reached:
            self._clear_nav(t, "goal_reached")
            return 0.0, 0.0
        fields = {name: 0.0 for name in ("u_f", "u_l", "u_r", "u_b")}
        direction = _ROOM_DIRECTIONS.get(eff_left)
        if direction is not None:
            fields[direction] = 1.0
        v, omega = room_blend(BaseInput(**fields), out.v_nav, out.omega_nav,
                              self.config.k_v, self.config.k_omega)
        hw = self.model.speeds
        return clamp(v, -hw.v_max, hw.v_max), clamp(omega, -hw.omega_max,
                                                    hw.omega_max)

    def _clear_nav(self, t: int, event: str):
        room = self.nav["room"] if self.nav else None
        self.nav = None
        self.log.append(t, "plan", {"event": event, "room": room})
        self._broadcast({"kind": "plan", "t_ms": t, "event": event,
                         "room": room, "waypoints": []})

    def _costmap_for_world(self) -> Costmap:
        if self._costmap is None:
            wmap = self.world.map
            self._costmap = Costmap(
                wmap.grid, wmap.cell_size, wmap.origin,
                inflation_radius_for(self.model.geometry.circumscribed_radius))
        return self._costmap

    def _plan_to_room(self, room: str, t: int) -> str | None:
        """Plan a path to a named room; returns an error message or None."""
        if room not in self.world.map.rooms:
            return f"unknown room {room!r}"
        gx, gy, gtheta = self.world.map.rooms[room]
        costmap = self._costmap_for_world()
        try:
            plan = plan_global(costmap,
                               costmap.world_to_cell(self.state.x, self.state.y),
                               costmap.world_to_cell(gx, gy), gtheta)
        except PlanningError as err:
            self.log.append(t, "plan", {"event": "failed", "room": room,
                                        "detail": str(err)})
            return str(err)
        tracker = PurePursuitTracker(
            plan,
            TrackerConfig(goal_tolerance=self.config.goal_radius),
            bounds=self.world.map.extent(),
        )
        self.nav = {"tracker": tracker, "room": room, "cost": plan.cost}
        self.room_mode = True
        self.log.append(t, "plan", {"event": "planned", "room": room,
                                    "cells": len(plan), "cost": plan.cost})
        step = max(1, len(plan.waypoints) // 40)
        self._broadcast({"kind": "plan", "t_ms": t, "event": "planned",
                         "room": room, "cost": plan.cost,
                         "waypoints": [[round(x, 3), round(y, 3)]
                                       for x, y in plan.waypoints[::step]]})
        return None

    # ------------------------------------------------------------ detection

    def _detect(self, t: int):
        if self.align is None or self._detect_due is None:
            return
        if t < self._detect_due:
            return
        self._detect_due += self.world.detector.period_s * 1000.0
        heading = self._camera_heading()
        if heading is None:
            return
        dets = self.detector.detect(self.scene, self.state.x, self.state.y,
                                    heading, self.align.query, t / 1000.0)
        if not dets:
            return
        best = dets[0]
        cx, cy, cz = best.centroid
        cos_h, sin_h = math.cos(heading), math.sin(heading)
        target = (self.state.x + cx * cos_h - cy * sin_h,
                  self.state.y + cx * sin_h + cy * cos_h,
                  cz)
        self.align.object_id = best.object_id
        self.align.label = best.label
        self.align.target = target
        self.align.confidence = best.confidence
        self.align.det_ms = t
        self.log.append(t, "detection", {
            "id": best.object_id, "label": best.label,
            "confidence": best.confidence, "query": self.align.query,
            "world": [target[0], target[1], target[2]],
        })
        self._broadcast({"kind": "detection", "t_ms": t, "id": best.object_id,
                         "label": best.label, "confidence": best.confidence,
                         "world": list(target), "query": self.align.query})

    def _camera_heading(self) -> float | None:
        """Where the pan camera looks: the tracked target, else the nearest
        object matching the armed query (the operator aims the camera)."""
        a = self.align
        if a.target is not None:
            return math.atan2(a.target[1] - self.state.y,
                              a.target[0] - self.state.x)
        best, best_d = None, self.world.detector.max_range
        for oid in self.detector.matches(self.scene, a.query):
            obj = self.scene.get(oid)
            d = math.hypot(obj.position[0] - self.state.x,
                           obj.position[1] - self.state.y)
            if d <= best_d:
                best, best_d = obj, d
        if best is None:
            return None
        return math.atan2(best.position[1] - self.state.y,
                          best.position[0] - self.state.x)

    def _target_in_base_frame(self, target) -> tuple[float, float, float]:
        dx = target[0] - self.state.x
        dy = target[1] - self.state.y
        ct, st = math.cos(self.state.theta), math.sin(self.state.theta)
        return (dx * ct + dy * st, -dx * st + dy * ct, target[2])

    # ------------------------------------------------------------ inbound

    def _handle_inbound(self, msg: dict, t: int):
        kind = msg.get("kind")
        if kind == "text_command":
            self._handle_text(str(msg.get("text", "")), t)
        elif kind == "keyboard_gesture":
            if self.config.keyboard_enabled:
                self._apply_keyboard(msg)
        elif kind == "task_marker":
            payload = {k: v for k, v in msg.items() if k != "kind"}
            self.log.append(t, "task", {"event": "marker", **payload})
            if msg.get("action") == "start" and msg.get("predicate"):
                spec = TaskSpec(str(msg.get("name", "task")),
                                list(msg["predicate"]), msg.get("timeout_s"))
                self.tasks.append(TaskRun(spec, t))

    def _apply_keyboard(self, msg: dict):
        vocab = {"left": LEFT_GESTURES, "right": RIGHT_GESTURES}
        for arm in ("left", "right"):
            if arm not in msg:
                continue
            label = msg[arm] or REST
            self._held_labels[arm] = label if label in vocab[arm] else REST

    def _handle_text(self, text: str, t: int):
        intent = parse_text(text)
        self.log.append(t, "text", {"dir": "in", "text": text,
                                    "intent": intent.kind, "arg": intent.arg})
        reply, ok = self._apply_intent(intent, t)
        self.log.append(t, "text", {"dir": "out", "ok": ok, "reply": reply})
        self._broadcast({"kind": "log", "t_ms": t,
                         "level": "info" if ok else "warn", "text": reply})

    def _apply_intent(self, intent, t: int) -> tuple[str, bool]:
        kind, arg = intent.kind, intent.arg
        if kind == "start_gesture":
            self.gesture_enabled = True
            return "gesture mode on", True
        if kind == "stop_gesture":
            self.gesture_enabled = False
            self._stop_motion_state()
            return "gesture mode off; motion stopped", True
        if kind == "next_mode":
            self.mode.step(t / 1000.0, REST, REST, next_mode_event=True)
            self._mode_changed(t)
            return f"mode: {self.mode.mode}", True
        if kind == "room_mode":
            self.room_mode = True
            return "room mode on; name a destination", True
        if kind == "exit_room":
            self.room_mode = False
            if self.nav is not None:
                self._clear_nav(t, "cancelled")
            return "room mode off", True
        if kind == "go_room":
            err = self._plan_to_room(arg, t)
            if err is not None:
                return err, False
            return f"heading to the {arg}; hold forward to move", True
        if kind == "align":
            if not self.config.assist_enabled:
                return "alignment assistance is disabled", False
            if not self.detector.matches(self.scene, arg):
                return f"no object matching {arg!r}", False
            self.align = AlignState(arg)
            self._detect_due = float(t)
            return f"aligning with {arg!r}", True
        if kind == "stop_align":
            self.align = None
            self._detect_due = None
            return "alignment off", True
        if kind == "photo":
            self.log.append(t, "photo", {
                "pose": [self.state.x, self.state.y, self.state.theta]})
            return "photo captured", True
        if kind == "status":
            held = self.held_object()
            return (f"mode {self.mode.mode}; gesture "
                    f"{'on' if self.gesture_enabled else 'off'}; "
                    f"pose ({self.state.x:.2f}, {self.state.y:.2f}); "
                    f"holding {held.id if held else 'nothing'}"), True
        return f"unrecognized command: {arg}", False

    def _stop_motion_state(self):
        self.align = None
        self._detect_due = None
        self._gripper_target = None
        self._yaw_target = None
        self._prev_actions = set()
        self.holds = HoldTracker()
        self._motion = (0.0, 0.0, {})

    def _mode_changed(self, t: int):
        self.log.append(t, "mode", {"mode": self.mode.mode})
        self._broadcast(self._mode_message(t))

    def _mode_message(self, t: int = 0) -> dict:
        table = {mode: {f"{arm}:{label}": action
                        for (arm, label), action in entries.items()}
                 for mode, entries in self.action_table.items()}
        return {"kind": "mode", "t_ms": t, "mode": self.mode.mode,
                "cycle": list(MODE_CYCLE), "table": table}

    def _world_message(self, t: int = 0) -> dict:
        wmap = self.world.map
        return {
            "kind": "world", "t_ms": t,
            "extent": [round(v, 3) for v in wmap.extent()],
            "cell_size": wmap.cell_size,
            "rooms": {name: [round(v, 4) for v in pose]
                      for name, pose in wmap.rooms.items()},
            "obstacles": [[round(v, 3) for v in rect]
                          for rect in wmap.obstacle_rects()],
            "objects": [{"id": o.id, "label": o.label,
                         "position": [round(v, 4) for v in o.position],
                         "radius": o.radius}
                        for o in self.scene.objects],
        }

    def snapshot_messages(self) -> list[dict]:
        """Current standing state for a newly attached console channel."""
        return [self._mode_message(self.t_ms), self._world_message(self.t_ms)]

    # ------------------------------------------------------------ tasks

    def _update_tasks(self, t: int):
        for run in self.tasks:
            was_out = run.timed_out
            if run.update(t, self):
                self.log.append(t, "task", {
                    "event": "completed", "name": run.spec.name,
                    "elapsed_s": run.elapsed_s,
                    "elapsed_ticks": (run.completed_at_ms - run.armed_at_ms)
                    // TICK_PERIOD_MS,
                })
            elif run.timed_out and not was_out:
                self.log.append(t, "task", {"event": "timeout",
                                            "name": run.spec.name})

    # ------------------------------------------------------------ console feed

    def _broadcast_state(self, t, cmd: GestureCommand, authority, v, omega, mu,
                         proximity: bool):
        if not self.listeners:
            return
        s = self.state
        held = self.held_object()
        self._broadcast({
            "kind": "state", "t_ms": t,
            "x": round(s.x, 4), "y": round(s.y, 4), "theta": round(s.theta, 4),
            "lift": round(s.lift, 4), "extension": round(s.extension, 4),
            "wrist_yaw": round(s.wrist_yaw, 3),
            "wrist_pitch": round(s.wrist_pitch, 3),
            "wrist_roll": round(s.wrist_roll, 3),
            "gripper": round(s.gripper, 4),
            "held": held.id if held else None,
            "mode": self.mode.mode,
            "gesture_enabled": self.gesture_enabled,
            "room_mode": self.room_mode,
            "authority": authority,
            "v": round(v, 4), "w": round(omega, 4), "mu": round(mu, 3),
            "tier": cmd.tier, "stale": cmd.stale, "proximity": proximity,
        })

    def _surrogate_heatmap(self, label: str) -> list:
        """A label-correlated 8x16 activity pattern for the console; purely
        cosmetic (keyboard sessions have no physical EMG to downsample)."""
        grid = self._heat_rng.uniform(0.0, 0.05, (8, 16))
        if label != REST:
            idx = hash(label) % 10
            r0, c0 = 1 + (idx % 4), 2 + idx
            grid[r0:r0 + 3, c0:c0 + 4] += 0.6
        return np.round(grid, 3).tolist()


# ---------------------------------------------------------------- replay

class LogScenario:
    """Feeds a recorded session's inputs back into a fresh engine."""

    def __init__(self, records: list[dict]):
        self._labels: dict[int, dict[str, str]] = {}
        events = []
        for rec in records:
            kind, t, p = rec["kind"], rec["t_ms"], rec["payload"]
            if kind == "window":
                self._labels.setdefault(t, {})[p["arm"]] = p["in"]
            elif kind == "text" and p.get("dir") == "in":
                events.append((t, {"kind": "text_command", "text": p["text"]}))
            elif kind == "task" and p.get("event") == "marker":
                msg = {k: v for k, v in p.items() if k != "event"}
                events.append((t, {"kind": "task_marker", **msg}))
        self._events = sorted(events, key=lambda e: e[0])
        self._i = 0

    def labels(self, t_ms: int, engine) -> dict | None:
        return self._labels.get(t_ms)

    def events(self, t_ms: int) -> list[dict]:
        out = []
        while self._i < len(self._events) and self._events[self._i][0] <= t_ms:
            out.append(self._events[self._i][1])
            self._i += 1
        return out


def replay(records: list[dict], world: World | None = None,
           log_path=None) -> TeleopEngine:
    """Re-run a recorded session; returns the finished engine.

    ``world`` defaults to whatever the recorded config names (its world
    file, or the built-in home map).  Refuses to run when the hash chain is
    broken or the world does not hash to the value recorded at session
    start.
    """
    bad = verify_chain(records)
    if bad is not None:
        raise LogError(f"log hash chain broken at record {bad}")
    if not records or records[0]["kind"] != "session_start":
        raise LogError("log does not begin with a session_start record")
    head = records[0]["payload"]
    if world is None:
        world_file = head["config"].get("world_file")
        world = World.load(world_file) if world_file else default_home()
    if world_hash(world) != head["world_sha256"]:
        raise LogError("world hash mismatch; replay refused")
    if records[-1]["kind"] != "session_end":
        raise LogError("log has no session_end record")
    duration = records[-1]["payload"]["duration_ms"]

    from .config import config_from_dict

    engine = TeleopEngine(
        config=config_from_dict(head["config"]),
        world=world,
        scenario=LogScenario(records),
        log_path=log_path,
        start=head["start"],
        replay_mode=True,
    )
    engine.run_ms(duration)
    engine.finish()
    return engine
