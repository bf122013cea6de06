"""Task specifications: named goal predicates evaluated over live world state.

A predicate is a list of atoms that must all hold at the same tick:

  * ``grasped:<object_id>``          — the object is held
  * ``released:<object_id>``         — the object is not held
  * ``in_room:<room>[:radius]``      — base within radius of the room goal
  * ``near:<x>,<y>[,radius]``        — base within radius of a point
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

DEFAULT_ROOM_RADIUS = 0.8
DEFAULT_POINT_RADIUS = 0.3


class TaskError(Exception):
    pass


@dataclass
class TaskSpec:
    name: str
    predicate: list[str]
    timeout_s: float | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> "TaskSpec":
        pred = doc.get("predicate")
        if isinstance(pred, str):
            pred = [pred]
        if not pred:
            raise TaskError(f"task {doc.get('name')!r} has no predicate")
        return cls(doc["name"], list(pred), doc.get("timeout_s"))


def atom_holds(atom: str, engine) -> bool:
    head, _, rest = atom.partition(":")
    if head == "grasped":
        obj = engine.scene.get(rest)
        return obj.grasped
    if head == "released":
        return not engine.scene.get(rest).grasped
    if head == "in_room":
        room, _, radius = rest.partition(":")
        if room not in engine.world.map.rooms:
            raise TaskError(f"unknown room {room!r} in predicate")
        gx, gy, _ = engine.world.map.rooms[room]
        r = _number(radius, atom) if radius else DEFAULT_ROOM_RADIUS
        return math.hypot(engine.state.x - gx, engine.state.y - gy) <= r
    if head == "near":
        parts = rest.split(",")
        if len(parts) not in (2, 3):
            raise TaskError(f"bad near atom {atom!r}")
        x, y = _number(parts[0], atom), _number(parts[1], atom)
        r = _number(parts[2], atom) if len(parts) == 3 else DEFAULT_POINT_RADIUS
        return math.hypot(engine.state.x - x, engine.state.y - y) <= r
    raise TaskError(f"unknown predicate atom {atom!r}")


def _number(text: str, atom: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise TaskError(f"bad number {text!r} in atom {atom!r}") from None


def predicate_holds(predicate: list[str], engine) -> bool:
    return all(atom_holds(a, engine) for a in predicate)


@dataclass
class TaskRun:
    """Timer from arming to the first tick where the predicate holds."""

    spec: TaskSpec
    armed_at_ms: int
    completed_at_ms: int | None = None
    timed_out: bool = False

    @property
    def done(self) -> bool:
        return self.completed_at_ms is not None or self.timed_out

    @property
    def elapsed_s(self) -> float | None:
        if self.completed_at_ms is None:
            return None
        return (self.completed_at_ms - self.armed_at_ms) / 1000.0

    def update(self, t_ms: int, engine) -> bool:
        """Evaluate once; returns True the tick the task completes."""
        if self.done:
            return False
        if predicate_holds(self.spec.predicate, engine):
            self.completed_at_ms = t_ms
            return True
        if (self.spec.timeout_s is not None
                and t_ms - self.armed_at_ms > self.spec.timeout_s * 1000.0):
            self.timed_out = True
        return False
