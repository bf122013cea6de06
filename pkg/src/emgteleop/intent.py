"""Debounced gesture intent: EMA smoothing, confidence gating, majority
voting, mode cycling, action mapping, and 10 Hz command emission.

Per-window probabilities are smoothed (alpha = 0.5), gated at 0.75
confidence (below -> Rest), then majority-voted over the last 11 labels
with a 6-of-11 quorum. The effective dwell from a clean Rest state is
240-440 ms. Commands leave as compact JSON datagrams.
"""

from __future__ import annotations

import json
import socket
from collections import Counter, deque
from dataclasses import dataclass, field

import numpy as np

REST = "rest"

EMA_ALPHA = 0.5
GATE_THRESHOLD = 0.75
VOTE_WINDOW = 11
VOTE_QUORUM = 6

MODE_CYCLE = ("ArmDrive", "ArmGripper", "Wrist")
MODE_HOLD_S = 0.2        # dual wrist-back hold to cycle modes
FAST_AFTER_S = 3.0       # sustained-command threshold for the fast tier

COMMAND_PERIOD_MS = 100  # 10 Hz
STALE_AFTER_MS = 500

MAX_DATAGRAM = 512


def ema_update(prev: np.ndarray, raw: np.ndarray, alpha: float = EMA_ALPHA) -> np.ndarray:
    """out = alpha * raw + (1 - alpha) * prev; convex, so still a distribution."""
    prev = np.asarray(prev, dtype=np.float64)
    raw = np.asarray(raw, dtype=np.float64)
    if prev.shape != raw.shape:
        raise ValueError(f"shape mismatch {prev.shape} vs {raw.shape}")
    return alpha * raw + (1.0 - alpha) * prev


def gate(probs: np.ndarray, labels, threshold: float = GATE_THRESHOLD,
         rest: str = REST) -> str:
    """Winning label if its probability reaches the threshold, else Rest."""
    probs = np.asarray(probs, dtype=np.float64)
    i = int(np.argmax(probs))
    return labels[i] if probs[i] >= threshold else rest


class VoteBuffer:
    """Ring of the last 11 labels; quorum is 6 agreeing."""

    def __init__(self, size: int = VOTE_WINDOW, quorum: int = VOTE_QUORUM):
        self.size = size
        self.quorum = quorum
        self._ring: deque[str] = deque(maxlen=size)

    def push(self, label: str) -> str | None:
        self._ring.append(label)
        return self.vote()

    def vote(self) -> str | None:
        if len(self._ring) < self.size:
            return None
        label, count = Counter(self._ring).most_common(1)[0]
        return label if count >= self.quorum else None

    def fill(self, label: str):
        for _ in range(self.size):
            self._ring.append(label)

    def __len__(self) -> int:
        return len(self._ring)


class ArmPipeline:
    """EMA -> gate -> vote for one arm.

    Probabilities enter through `push_probs`; already-gated labels (e.g. a
    keyboard driver standing in for the classifier) enter through
    `push_label`, joining at the vote stage. Output is the voted label, with
    no-quorum treated as Rest.
    """

    def __init__(self, labels, rest: str = REST):
        self.labels = tuple(labels)
        self.rest = rest
        self._ema: np.ndarray | None = None
        self._votes = VoteBuffer()
        self._votes.fill(rest)
        self.voted = rest
        self.last_push = rest

    def push_probs(self, probs: np.ndarray) -> str:
        probs = np.asarray(probs, dtype=np.float64)
        self._ema = probs if self._ema is None else ema_update(self._ema, probs)
        return self.push_label(gate(self._ema, self.labels, rest=self.rest))

    def push_label(self, label: str) -> str:
        # recorded as the vote-stage input, so a replay that re-pushes it
        # reproduces the vote stream no matter which entrance was used live
        self.last_push = label
        self.voted = self._votes.push(label) or self.rest
        return self.voted

    def reset(self):
        self._ema = None
        self._votes = VoteBuffer()
        self._votes.fill(self.rest)
        self.voted = self.rest
        self.last_push = self.rest


class ModeMachine:
    """Cycles ArmDrive -> ArmGripper -> Wrist on dual wrist-back or voice.

    The gesture trigger is edge-triggered: both arms must hold wrist-back
    for 0.2 s, and must release before the next cycle can arm again.
    """

    def __init__(self, hold_s: float = MODE_HOLD_S, trigger_label: str = "wrist_back"):
        self.mode = MODE_CYCLE[0]
        self.hold_s = hold_s
        self.trigger_label = trigger_label
        self._dual_since: float | None = None
        self._armed = True

    def advance(self) -> str:
        self.mode = MODE_CYCLE[(MODE_CYCLE.index(self.mode) + 1) % len(MODE_CYCLE)]
        return self.mode

    def step(self, t: float, left: str, right: str, next_mode_event: bool = False) -> bool:
        """Returns True when the mode changed this step."""
        changed = False
        if next_mode_event:
            self.advance()
            changed = True
        dual = left == self.trigger_label and right == self.trigger_label
        if dual:
            if self._dual_since is None:
                self._dual_since = t
            if self._armed and t - self._dual_since >= self.hold_s:
                self.advance()
                self._armed = False
                changed = True
        else:
            self._dual_since = None
            self._armed = True
        return changed


# Default gesture -> action table, overridable from configuration. Actions
# are (category, token) pairs; category selects the fast-tier multiplier.
ACTION_CATEGORIES = ("base_translation", "base_rotation", "lift", "arm", "wrist",
                     "gripper")

DEFAULT_ACTION_TABLE = {
    "ArmDrive": {
        ("left", "wrist_forward"): "base_forward",
        ("left", "wrist_back"): "base_backward",
        ("left", "wrist_supination"): "base_turn_left",
        ("left", "wrist_pronation"): "base_turn_right",
        ("right", "wrist_back"): "arm_direction_toggle",
    },
    "ArmGripper": {
        ("left", "wrist_forward"): "lift_up",
        ("left", "wrist_back"): "lift_down",
        ("left", "wrist_supination"): "arm_extend",
        ("left", "wrist_pronation"): "arm_retract",
        ("right", "wrist_back"): "gripper_toggle",
        ("right", "wrist_supination"): "gripper_close",
    },
    "Wrist": {
        ("left", "wrist_forward"): "wrist_pitch_up",
        ("left", "wrist_back"): "wrist_pitch_down",
        ("left", "wrist_supination"): "wrist_roll_left",
        ("left", "wrist_pronation"): "wrist_roll_right",
        ("right", "wrist_back"): "wrist_yaw_toggle",
    },
}

ACTION_CATEGORY = {
    "base_forward": "base_translation",
    "base_backward": "base_translation",
    "base_turn_left": "base_rotation",
    "base_turn_right": "base_rotation",
    "lift_up": "lift",
    "lift_down": "lift",
    "arm_extend": "arm",
    "arm_retract": "arm",
    "arm_direction_toggle": "arm",
    "gripper_toggle": "gripper",
    "gripper_close": "gripper",
    "wrist_pitch_up": "wrist",
    "wrist_pitch_down": "wrist",
    "wrist_roll_left": "wrist",
    "wrist_roll_right": "wrist",
    "wrist_yaw_toggle": "wrist",
}


@dataclass
class ActionSet:
    actions: tuple[str, ...]
    warnings: tuple[str, ...] = ()


def map_action(mode: str, left: str, right: str, table=None, rest: str = REST,
               ) -> ActionSet:
    """Actions for the current (mode, left, right) labels; Rest maps to none."""
    table = table if table is not None else DEFAULT_ACTION_TABLE
    if mode not in table:
        return ActionSet((), (f"unknown mode {mode!r}",))
    actions = []
    warnings = []
    for arm, label in (("left", left), ("right", right)):
        if label == rest:
            continue
        action = table[mode].get((arm, label))
        if action is None:
            warnings.append(f"unmapped label {label!r} on {arm} in {mode}")
        else:
            actions.append(action)
    return ActionSet(tuple(actions), tuple(warnings))


def speed_tier(action: str, hold_s: float) -> int:
    """1x for holds up to 3 s, then 2x (4x for base rotation)."""
    if hold_s <= FAST_AFTER_S:
        return 1
    return 4 if ACTION_CATEGORY.get(action) == "base_rotation" else 2


class HoldTracker:
    """Continuous-hold durations per action; any interruption resets."""

    def __init__(self):
        self._since: dict[str, float] = {}

    def update(self, t: float, actions) -> dict[str, float]:
        actions = set(actions)
        for a in list(self._since):
            if a not in actions:
                del self._since[a]
        for a in actions:
            self._since.setdefault(a, t)
        return {a: t - self._since[a] for a in actions}


@dataclass
class GestureCommand:
    seq: int
    t_ms: int
    mode: str
    left: str
    right: str
    tier: int
    stale: bool = False

    def encode(self) -> bytes:
        blob = json.dumps(
            {"seq": self.seq, "t_ms": self.t_ms, "mode": self.mode,
             "left": self.left, "right": self.right, "tier": self.tier,
             "stale": self.stale},
            separators=(",", ":")).encode()
        if len(blob) > MAX_DATAGRAM:
            raise ValueError(f"command datagram {len(blob)} bytes > {MAX_DATAGRAM}")
        return blob

    @classmethod
    def decode(cls, blob: bytes) -> "GestureCommand":
        d = json.loads(blob)
        return cls(d["seq"], d["t_ms"], d["mode"], d["left"], d["right"],
                   d["tier"], d.get("stale", False))


class CommandEmitter:
    """Assembles the 10 Hz command stream with staleness protection.

    `note_window(t_ms)` marks classifier freshness; when no window has
    arrived for 500 ms the emitted command reverts to Rest and is flagged.
    """

    def __init__(self, stale_after_ms: int = STALE_AFTER_MS, rest: str = REST):
        self.stale_after_ms = stale_after_ms
        self.rest = rest
        self.seq = 0
        self._last_window_ms: int | None = None

    def note_window(self, t_ms: int):
        self._last_window_ms = t_ms

    def is_stale(self, t_ms: int) -> bool:
        return (self._last_window_ms is None
                or t_ms - self._last_window_ms > self.stale_after_ms)

    def tick(self, t_ms: int, mode: str, left: str, right: str, tier: int,
             ) -> GestureCommand:
        self.seq += 1
        if self.is_stale(t_ms):
            return GestureCommand(self.seq, t_ms, mode, self.rest, self.rest, 1,
                                  stale=True)
        return GestureCommand(self.seq, t_ms, mode, left, right, tier)


class UdpCommandSender:
    def __init__(self, endpoint: str):
        host, _, port = endpoint.rpartition(":")
        self._addr = (host or "127.0.0.1", int(port))
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)

    def send(self, cmd: GestureCommand):
        self._sock.sendto(cmd.encode(), self._addr)

    def close(self):
        self._sock.close()


class UdpCommandReceiver:
    def __init__(self, endpoint: str, timeout: float | None = 1.0):
        host, _, port = endpoint.rpartition(":")
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.bind((host or "127.0.0.1", int(port)))
        self._sock.settimeout(timeout)

    @property
    def port(self) -> int:
        return self._sock.getsockname()[1]

    def recv(self) -> GestureCommand:
        blob, _ = self._sock.recvfrom(MAX_DATAGRAM)
        return GestureCommand.decode(blob)

    def close(self):
        self._sock.close()
