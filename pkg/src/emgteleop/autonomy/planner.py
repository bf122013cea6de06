"""Grid costmap, Dijkstra global planning, and a pure-pursuit local tracker.

The planner works on an occupancy grid inflated by the robot's circumscribed
radius plus a safety margin.  Cells inside the inflation radius are lethal;
a soft penalty band beyond it keeps paths away from walls without forbidding
narrow passages.  Edge weights are metric: cell_size (or cell_size * sqrt(2)
diagonally) plus the destination cell's penalty, so path costs are in meters
on obstacle-free maps.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .laws import clamp, wrap_angle

INFLATION_MARGIN = 0.05  # added to the circumscribed radius

# Soft penalty band beyond the lethal radius: linear falloff over this width,
# weighted so hugging a wall costs more than a modest detour.
SOFT_BAND_M = 0.2
SOFT_WEIGHT = 2.0

_NEIGHBORS = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1),           (0, 1),
    (1, -1),  (1, 0),  (1, 1),
)


class PlanningError(Exception):
    """Raised when no collision-free path exists for a planning request."""


class TrackingError(Exception):
    """Raised when the local tracker is given a pose it cannot serve."""


def inflation_radius_for(circumscribed_radius: float) -> float:
    return circumscribed_radius + INFLATION_MARGIN


class Costmap:
    """Occupancy grid with lethal inflation and a soft proximity penalty."""

    def __init__(
        self,
        occupancy: np.ndarray,
        cell_size: float,
        origin: tuple[float, float] = (0.0, 0.0),
        inflation_radius: float = 0.0,
        soft_band: float = SOFT_BAND_M,
        soft_weight: float = SOFT_WEIGHT,
    ):
        occ = np.asarray(occupancy, dtype=bool)
        if occ.ndim != 2:
            raise ValueError("occupancy grid must be 2-D")
        if cell_size <= 0:
            raise ValueError("cell_size must be positive")
        self.occupancy = occ
        self.cell_size = float(cell_size)
        self.origin = (float(origin[0]), float(origin[1]))
        self.inflation_radius = float(inflation_radius)
        dist = _obstacle_distance_m(occ, self.cell_size)
        self.lethal = dist <= self.inflation_radius
        band_edge = self.inflation_radius + soft_band
        with np.errstate(invalid="ignore"):
            frac = (band_edge - dist) / soft_band if soft_band > 0 else None
        if frac is None:
            self.penalty = np.zeros_like(dist)
        else:
            self.penalty = soft_weight * self.cell_size * np.clip(frac, 0.0, 1.0)
        self.penalty[self.lethal] = 0.0  # lethal cells are never entered

    @property
    def shape(self) -> tuple[int, int]:
        return self.occupancy.shape

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        r, c = cell
        return 0 <= r < self.shape[0] and 0 <= c < self.shape[1]

    def is_free(self, cell: tuple[int, int]) -> bool:
        return self.in_bounds(cell) and not self.lethal[cell]

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        col = int(math.floor((x - self.origin[0]) / self.cell_size))
        row = int(math.floor((y - self.origin[1]) / self.cell_size))
        return (row, col)

    def cell_to_world(self, cell: tuple[int, int]) -> tuple[float, float]:
        r, c = cell
        return (
            self.origin[0] + (c + 0.5) * self.cell_size,
            self.origin[1] + (r + 0.5) * self.cell_size,
        )

    def step_cost(self, to_cell: tuple[int, int], diagonal: bool) -> float:
        base = self.cell_size * (math.sqrt(2.0) if diagonal else 1.0)
        return base + float(self.penalty[to_cell])


def _obstacle_distance_m(occ: np.ndarray, cell_size: float) -> np.ndarray:
    """Euclidean distance (m) from each cell center to the nearest occupied cell."""
    if not occ.any():
        return np.full(occ.shape, np.inf)
    try:
        from scipy import ndimage

        return ndimage.distance_transform_edt(~occ) * cell_size
    except ImportError:  # pragma: no cover - scipy is a hard dependency elsewhere
        rows, cols = np.nonzero(occ)
        rr, cc = np.meshgrid(
            np.arange(occ.shape[0]), np.arange(occ.shape[1]), indexing="ij"
        )
        d2 = np.full(occ.shape, np.inf)
        for r, c in zip(rows, cols):
            d2 = np.minimum(d2, (rr - r) ** 2 + (cc - c) ** 2)
        return np.sqrt(d2) * cell_size


@dataclass
class CostmapPlan:
    """A planned path: grid cells, world waypoints, and total metric cost."""

    cells: list[tuple[int, int]]
    waypoints: list[tuple[float, float]]
    cost: float
    goal_pose: tuple[float, float, float]

    def __len__(self) -> int:
        return len(self.cells)


def plan_global(
    costmap: Costmap,
    start: tuple[int, int],
    goal: tuple[int, int],
    goal_heading: float = 0.0,
) -> CostmapPlan:
    """Minimum-cost 8-connected path from start to goal cell via Dijkstra.

    Ties are broken deterministically by expanding (cost, row, col) in
    lexicographic order; equal-cost relaxations keep the first parent.
    """
    start = (int(start[0]), int(start[1]))
    goal = (int(goal[0]), int(goal[1]))
    if not costmap.in_bounds(start) or not costmap.in_bounds(goal):
        raise PlanningError(f"start {start} or goal {goal} outside the map")
    if not costmap.is_free(start):
        raise PlanningError(f"start cell {start} is inside an obstacle after inflation")
    if not costmap.is_free(goal):
        raise PlanningError(f"goal cell {goal} is inside an obstacle after inflation")

    dist: dict[tuple[int, int], float] = {start: 0.0}
    parent: dict[tuple[int, int], tuple[int, int]] = {}
    done: set[tuple[int, int]] = set()
    frontier: list[tuple[float, int, int]] = [(0.0, start[0], start[1])]
    while frontier:
        d, r, c = heapq.heappop(frontier)
        cell = (r, c)
        if cell in done:
            continue
        done.add(cell)
        if cell == goal:
            break
        for dr, dc in _NEIGHBORS:
            nxt = (r + dr, c + dc)
            if not costmap.is_free(nxt) or nxt in done:
                continue
            nd = d + costmap.step_cost(nxt, diagonal=(dr != 0 and dc != 0))
            if nd < dist.get(nxt, math.inf):
                dist[nxt] = nd
                parent[nxt] = cell
                heapq.heappush(frontier, (nd, nxt[0], nxt[1]))
    if goal not in done:
        raise PlanningError(f"no path from {start} to {goal}")

    cells = [goal]
    while cells[-1] != start:
        cells.append(parent[cells[-1]])
    cells.reverse()
    waypoints = [costmap.cell_to_world(cell) for cell in cells]
    gx, gy = waypoints[-1]
    return CostmapPlan(
        cells=cells,
        waypoints=waypoints,
        cost=dist[goal],
        goal_pose=(gx, gy, float(goal_heading)),
    )


@dataclass
class TrackerConfig:
    lookahead: float = 0.4
    k_heading: float = 2.0
    v_max: float = 0.3
    omega_max: float = 1.0
    goal_tolerance: float = 0.15


@dataclass
class TrackerOutput:
    v_nav: float
    omega_nav: float
    goal_reached: bool
    target: tuple[float, float]


class PurePursuitTracker:
    """Follow a planned path by steering at a lookahead point.

    The angular command is proportional to the heading error (saturated);
    the linear command scales with cos(error) so the base slows through
    turns and stops rather than driving away from the path.  Progress along
    the path is monotonic, which keeps the tracker stable when the path
    loops back near itself.
    """

    def __init__(self, plan: CostmapPlan, config: TrackerConfig | None = None,
                 bounds: tuple[float, float, float, float] | None = None):
        if not plan.waypoints:
            raise ValueError("plan has no waypoints")
        self.plan = plan
        self.config = config or TrackerConfig()
        self.bounds = bounds  # (xmin, ymin, xmax, ymax) world extent, if known
        self._progress = 0

    def update(self, x: float, y: float, theta: float) -> TrackerOutput:
        cfg = self.config
        if self.bounds is not None:
            xmin, ymin, xmax, ymax = self.bounds
            if not (xmin <= x <= xmax and ymin <= y <= ymax):
                raise TrackingError(f"pose ({x:.2f}, {y:.2f}) is off the map")
        wps = self.plan.waypoints
        gx, gy = wps[-1]
        if math.hypot(gx - x, gy - y) <= cfg.goal_tolerance:
            return TrackerOutput(0.0, 0.0, True, (gx, gy))

        # advance progress to the nearest waypoint at or after the last one
        best = self._progress
        best_d = math.inf
        for i in range(self._progress, len(wps)):
            d = math.hypot(wps[i][0] - x, wps[i][1] - y)
            if d < best_d:
                best, best_d = i, d
        self._progress = best

        target = wps[-1]
        for i in range(best, len(wps)):
            if math.hypot(wps[i][0] - x, wps[i][1] - y) >= cfg.lookahead:
                target = wps[i]
                break
        err = wrap_angle(math.atan2(target[1] - y, target[0] - x) - theta)
        omega = clamp(cfg.k_heading * err, -cfg.omega_max, cfg.omega_max)
        v = cfg.v_max * max(0.0, math.cos(err))
        return TrackerOutput(v, omega, False, target)
