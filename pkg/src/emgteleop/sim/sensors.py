"""Raycast LiDAR and the open-vocabulary detector surrogate.

The LiDAR marches each beam through the occupancy grid in half-cell steps,
so reported ranges are accurate to half a cell.  The detector matches a text
query against object labels (exactly, through the alias table, or through a
scripted ambiguity entry), applies a field-of-view and range check, and
returns confidence-scored detections with optional centroid noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..autonomy.laws import wrap_angle
from .world import DetectorParams, Scene, WorldMap

LIDAR_BEAMS = 180
LIDAR_MAX_RANGE = 8.0


def lidar(wmap: WorldMap, x: float, y: float, theta: float,
          n_beams: int = LIDAR_BEAMS,
          max_range: float = LIDAR_MAX_RANGE) -> np.ndarray:
    """Per-beam first-hit distance; ``max_range`` where nothing is hit.

    Beams are equally spaced over the full circle starting at the heading.
    A pose inside an obstacle returns all zeros.
    """
    if wmap.occupied_at(x, y):
        return np.zeros(n_beams)
    step = wmap.cell_size / 2.0
    n_steps = int(math.ceil(max_range / step))
    angles = theta + 2.0 * math.pi * np.arange(n_beams) / n_beams
    dx = np.cos(angles) * step
    dy = np.sin(angles) * step
    px = np.full(n_beams, x)
    py = np.full(n_beams, y)
    ranges = np.full(n_beams, max_range)
    alive = np.ones(n_beams, dtype=bool)

    x0, y0 = wmap.origin
    rows, cols = wmap.shape
    grid = wmap.grid
    for i in range(1, n_steps + 1):
        px[alive] += dx[alive]
        py[alive] += dy[alive]
        r = np.floor((py - y0) / wmap.cell_size).astype(int)
        c = np.floor((px - x0) / wmap.cell_size).astype(int)
        inside = (r >= 0) & (r < rows) & (c >= 0) & (c < cols)
        hit = alive & (~inside | grid[np.clip(r, 0, rows - 1),
                                      np.clip(c, 0, cols - 1)])
        if hit.any():
            ranges[hit] = np.minimum(i * step, max_range)
            alive &= ~hit
            if not alive.any():
                break
    return ranges


def scan_points(ranges: np.ndarray,
                max_range: float = LIDAR_MAX_RANGE) -> list[tuple[float, float]]:
    """Convert a range array to robot-frame (x, y) points, dropping misses."""
    n = len(ranges)
    pts = []
    for k, rng in enumerate(ranges):
        if rng >= max_range:
            continue
        a = 2.0 * math.pi * k / n
        pts.append((float(rng * math.cos(a)), float(rng * math.sin(a))))
    return pts


@dataclass(frozen=True)
class Detection:
    object_id: str
    label: str
    centroid: tuple[float, float, float]  # robot frame
    confidence: float
    t: float


class Detector:
    """Fixed-rate detector surrogate with deterministic seeded noise."""

    def __init__(self, params: DetectorParams | None = None, seed: int = 0):
        self.params = params or DetectorParams()
        self.rng = np.random.default_rng(seed)

    def matches(self, scene: Scene, query: str) -> list[str]:
        """Object ids a query resolves to: exact label, alias, then any
        scripted ambiguity decoy."""
        ids = [o.id for o in scene.objects if o.label == query]
        alias = scene.aliases.get(query)
        if alias is not None and alias not in ids:
            ids.append(alias)
        decoy = self.params.ambiguous.get(query)
        if decoy is not None and decoy not in ids:
            ids.append(decoy)
        return ids

    def detect(self, scene: Scene, x: float, y: float, theta: float,
               query: str, t: float) -> list[Detection]:
        """One detector tick: matching objects inside the view cone, scored
        and noise-perturbed; low-confidence hits are suppressed."""
        p = self.params
        half_fov = math.radians(p.fov_deg) / 2.0
        out: list[Detection] = []
        for oid in self.matches(scene, query):
            obj = scene.get(oid)
            ox, oy, oz = obj.position
            dx, dy = ox - x, oy - y
            dist = math.hypot(dx, dy)
            if dist > p.max_range:
                continue
            if abs(wrap_angle(math.atan2(dy, dx) - theta)) > half_fov:
                continue
            conf = p.base_confidence - p.distance_penalty * dist
            if p.noise_sigma > 0:
                conf += self.rng.normal(0.0, p.noise_sigma)
            conf = min(1.0, max(0.0, conf))
            if conf < p.threshold:
                continue
            ct, st = math.cos(theta), math.sin(theta)
            local = [dx * ct + dy * st, -dx * st + dy * ct, oz]
            if p.centroid_sigma > 0:
                local = list(np.array(local)
                             + self.rng.normal(0.0, p.centroid_sigma, 3))
            out.append(Detection(obj.id, obj.label,
                                 (float(local[0]), float(local[1]),
                                  float(local[2])), conf, t))
        out.sort(key=lambda d: -d.confidence)
        return out
