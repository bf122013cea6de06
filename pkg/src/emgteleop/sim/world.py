"""Occupancy-grid home world: map, rooms, scene objects, serialization.

Grid convention: row r covers y in [origin_y + r*cell, origin_y + (r+1)*cell),
column c likewise along x — row 0 is the southern edge.  World files store
the grid as strings ('#' occupied, '.' free) with row 0 first.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np


class WorldError(Exception):
    pass


@dataclass
class SceneObject:
    """A graspable item: label text, 3-D position, and bounding radius."""

    id: str
    label: str
    position: tuple[float, float, float]
    radius: float = 0.05
    grasped: bool = False

    def copy(self) -> "SceneObject":
        return SceneObject(self.id, self.label, tuple(self.position),
                           self.radius, self.grasped)


class Scene:
    """The set of scene objects plus the label alias table."""

    def __init__(self, objects: list[SceneObject] | None = None,
                 aliases: dict[str, str] | None = None):
        self.objects = list(objects or [])
        self.aliases = dict(aliases or {})
        ids = [o.id for o in self.objects]
        if len(ids) != len(set(ids)):
            raise WorldError("duplicate object ids in scene")

    def get(self, object_id: str) -> SceneObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)

    def grasped_object(self) -> SceneObject | None:
        held = [o for o in self.objects if o.grasped]
        if len(held) > 1:
            raise WorldError("more than one object marked grasped")
        return held[0] if held else None

    def copy(self) -> "Scene":
        return Scene([o.copy() for o in self.objects], dict(self.aliases))


class WorldMap:
    """Static occupancy grid with named room goal poses."""

    def __init__(self, grid: np.ndarray, cell_size: float,
                 origin: tuple[float, float] = (0.0, 0.0),
                 rooms: dict[str, tuple[float, float, float]] | None = None):
        self.grid = np.asarray(grid, dtype=bool)
        if self.grid.ndim != 2:
            raise WorldError("grid must be 2-D")
        self.cell_size = float(cell_size)
        self.origin = (float(origin[0]), float(origin[1]))
        self.rooms = {k: tuple(map(float, v)) for k, v in (rooms or {}).items()}

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape

    def extent(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the mapped area."""
        rows, cols = self.grid.shape
        x0, y0 = self.origin
        return (x0, y0, x0 + cols * self.cell_size, y0 + rows * self.cell_size)

    def cell_at(self, x: float, y: float) -> tuple[int, int]:
        c = int(math.floor((x - self.origin[0]) / self.cell_size))
        r = int(math.floor((y - self.origin[1]) / self.cell_size))
        return (r, c)

    def obstacle_rects(self) -> list[tuple[float, float, float, float]]:
        """Occupied area as merged (xmin, ymin, xmax, ymax) rectangles.

        Row runs of occupied cells are merged vertically while their column
        span repeats, which collapses the axis-aligned walls and furniture
        this map is built from into a short displayable list.
        """
        x0, y0 = self.origin
        cs = self.cell_size
        rects: list[tuple[float, float, float, float]] = []
        open_runs: dict[tuple[int, int], int] = {}  # (c0, c1) -> first row

        def close(span: tuple[int, int], r0: int, r1: int):
            c0, c1 = span
            rects.append((x0 + c0 * cs, y0 + r0 * cs,
                          x0 + c1 * cs, y0 + r1 * cs))

        for r in range(self.grid.shape[0] + 1):
            spans = set()
            if r < self.grid.shape[0]:
                row = self.grid[r]
                c = 0
                while c < row.size:
                    if row[c]:
                        c1 = c
                        while c1 < row.size and row[c1]:
                            c1 += 1
                        spans.add((c, c1))
                        c = c1
                    else:
                        c += 1
            for span in list(open_runs):
                if span not in spans:
                    close(span, open_runs.pop(span), r)
            for span in spans:
                open_runs.setdefault(span, r)
        return sorted(rects)

    def cell_center(self, cell: tuple[int, int]) -> tuple[float, float]:
        r, c = cell
        return (self.origin[0] + (c + 0.5) * self.cell_size,
                self.origin[1] + (r + 0.5) * self.cell_size)

    def occupied_at(self, x: float, y: float) -> bool:
        """Occupancy lookup; everything off the map counts as occupied."""
        r, c = self.cell_at(x, y)
        if not (0 <= r < self.grid.shape[0] and 0 <= c < self.grid.shape[1]):
            return True
        return bool(self.grid[r, c])

    def fill_rect(self, x0: float, y0: float, x1: float, y1: float) -> None:
        """Mark cells whose centers fall inside the rectangle as occupied."""
        rows, cols = self.grid.shape
        r0, c0 = self.cell_at(x0, y0)
        r1, c1 = self.cell_at(x1, y1)
        r0, r1 = max(0, min(r0, r1)), min(rows - 1, max(r0, r1))
        c0, c1 = max(0, min(c0, c1)), min(cols - 1, max(c0, c1))
        for r in range(r0, r1 + 1):
            for c in range(c0, c1 + 1):
                cx, cy = self.cell_center((r, c))
                if x0 <= cx <= x1 and y0 <= cy <= y1:
                    self.grid[r, c] = True

    def grid_strings(self) -> list[str]:
        return ["".join("#" if v else "." for v in row) for row in self.grid]


@dataclass
class DetectorParams:
    """Object-detector surrogate parameters (kept with the world file)."""

    fov_deg: float = 69.0
    period_s: float = 1.0 / 1.5
    base_confidence: float = 0.9
    distance_penalty: float = 0.1
    noise_sigma: float = 0.03
    centroid_sigma: float = 0.0
    max_range: float = 4.0
    threshold: float = 0.3
    ambiguous: dict[str, str] = field(default_factory=dict)


@dataclass
class World:
    """Map + scene + detector parameters: everything a session loads."""

    map: WorldMap
    scene: Scene
    detector: DetectorParams

    def to_json(self) -> str:
        doc = {
            "cell_size": self.map.cell_size,
            "origin": list(self.map.origin),
            "grid": self.map.grid_strings(),
            "rooms": {k: list(v) for k, v in self.map.rooms.items()},
            "objects": [
                {"id": o.id, "label": o.label, "position": list(o.position),
                 "radius": o.radius}
                for o in self.scene.objects
            ],
            "aliases": self.scene.aliases,
            "detector": asdict(self.detector),
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "World":
        doc = json.loads(text)
        rows = doc["grid"]
        grid = np.array([[ch == "#" for ch in row] for row in rows], dtype=bool)
        wmap = WorldMap(grid, doc["cell_size"], tuple(doc["origin"]),
                        {k: tuple(v) for k, v in doc.get("rooms", {}).items()})
        scene = Scene(
            [SceneObject(o["id"], o["label"], tuple(o["position"]),
                         o.get("radius", 0.05))
             for o in doc.get("objects", [])],
            doc.get("aliases", {}),
        )
        det = DetectorParams(**doc.get("detector", {}))
        return cls(wmap, scene, det)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "World":
        with open(path) as fh:
            return cls.from_json(fh.read())


def default_home(cell_size: float = 0.05) -> World:
    """Two rooms joined by a narrow hallway, with a counter, a bed, and
    a few graspable objects — the stock scenario world.

    Kitchen on the west side, bedroom on the east, hallway opening between
    them.  The cup sits on the kitchen counter's south edge so a base parked
    against the counter can reach it.
    """
    width_m, height_m = 10.0, 6.0
    cols = int(round(width_m / cell_size))
    rows = int(round(height_m / cell_size))
    grid = np.zeros((rows, cols), dtype=bool)
    wmap = WorldMap(grid, cell_size, origin=(0.0, 0.0))

    t = cell_size  # wall thickness: one cell
    wmap.fill_rect(0, 0, width_m, t)                    # south wall
    wmap.fill_rect(0, height_m - t, width_m, height_m)  # north wall
    wmap.fill_rect(0, 0, t, height_m)                   # west wall
    wmap.fill_rect(width_m - t, 0, width_m, height_m)   # east wall

    # room divider: a 1 m deep wall band with a 1.4 m wide hallway opening
    wmap.fill_rect(4.5, 0, 5.5, 2.3)
    wmap.fill_rect(4.5, 3.7, 5.5, height_m)

    # kitchen counter along the north wall
    wmap.fill_rect(0.6, 5.1, 2.8, 5.9)
    # bedroom furniture: bed and a nightstand
    wmap.fill_rect(7.4, 0.2, 9.6, 1.6)
    wmap.fill_rect(9.2, 2.2, 9.8, 2.8)

    wmap.rooms = {
        "kitchen": (2.0, 3.4, math.pi / 2),
        "bedroom": (7.6, 3.0, math.pi / 2),
    }

    scene = Scene(
        objects=[
            SceneObject("cup1", "cup", (1.4, 5.2, 0.85), radius=0.04),
            SceneObject("lid1", "lid", (2.0, 5.2, 0.82), radius=0.05),
            SceneObject("can1", "can", (9.3, 2.5, 0.55), radius=0.03),
        ],
        aliases={
            "energy drink": "can1",
            "drink": "cup1",
            "cup with lid": "lid1",
        },
    )
    return World(wmap, scene, DetectorParams())
