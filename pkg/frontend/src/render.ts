/**
 * Pure renderers: console state in, primitive draw ops out.
 *
 * Nothing here touches the DOM or a canvas context — the browser shell
 * executes the ops, tests assert on them. All geometry comes from server
 * messages; the only client-side math is coordinate projection.
 */

import type { ConsoleState } from "./state.js";
import type { ModeMsg } from "./messages.js";

export type DrawOp =
  | { op: "clear"; w: number; h: number; fill: string }
  | { op: "rect"; x: number; y: number; w: number; h: number; fill: string }
  | {
      op: "circle";
      x: number;
      y: number;
      r: number;
      fill?: string;
      stroke?: string;
    }
  | { op: "poly"; pts: Array<[number, number]>; stroke: string; width: number }
  | { op: "line"; x1: number; y1: number; x2: number; y2: number; stroke: string; width: number }
  | { op: "text"; x: number; y: number; text: string; fill: string; size: number };

export interface Viewport {
  w: number;
  h: number;
}

export interface WorldTransform {
  scale: number;
  /** world (x, y) -> canvas pixels, y flipped (canvas y grows downward) */
  toPx(x: number, y: number): [number, number];
}

export function worldTransform(extent: number[], vp: Viewport): WorldTransform {
  const [xmin = 0, ymin = 0, xmax = 1, ymax = 1] = extent;
  const scale = Math.min(vp.w / (xmax - xmin), vp.h / (ymax - ymin));
  const ox = (vp.w - (xmax - xmin) * scale) / 2;
  const oy = (vp.h - (ymax - ymin) * scale) / 2;
  return {
    scale,
    toPx(x: number, y: number): [number, number] {
      return [ox + (x - xmin) * scale, oy + (ymax - y) * scale];
    },
  };
}

const PALETTE = {
  floor: "#14181d",
  wall: "#3c4454",
  room: "#8a93a6",
  object: "#c9a227",
  held: "#7ee081",
  plan: "#39c2d7",
  robot: "#e8eaf0",
  robotSlow: "#e0b341",
  robotBlocked: "#e0524d",
  detection: "#7ee081",
  text: "#aab3c5",
};

export function worldView(s: ConsoleState, vp: Viewport): DrawOp[] {
  const ops: DrawOp[] = [{ op: "clear", w: vp.w, h: vp.h, fill: PALETTE.floor }];
  if (!s.world) {
    ops.push({
      op: "text",
      x: vp.w / 2,
      y: vp.h / 2,
      text: "waiting for world snapshot",
      fill: PALETTE.text,
      size: 14,
    });
    return ops;
  }
  const tf = worldTransform(s.world.extent, vp);

  for (const rect of s.world.obstacles) {
    const [x0 = 0, y0 = 0, x1 = 0, y1 = 0] = rect;
    const [px, py] = tf.toPx(x0, y1); // top-left pixel = max-y corner
    ops.push({
      op: "rect",
      x: px,
      y: py,
      w: (x1 - x0) * tf.scale,
      h: (y1 - y0) * tf.scale,
      fill: PALETTE.wall,
    });
  }

  for (const [name, pose] of Object.entries(s.world.rooms)) {
    const [rx = 0, ry = 0] = pose;
    const [px, py] = tf.toPx(rx, ry);
    ops.push({ op: "circle", x: px, y: py, r: 4, stroke: PALETTE.room });
    ops.push({ op: "text", x: px + 7, y: py, text: name, fill: PALETTE.room, size: 12 });
  }

  const heldId = s.robot?.held ?? null;
  for (const obj of s.world.objects) {
    if (obj.id === heldId) {
      continue; // drawn at the robot below
    }
    const [x = 0, y = 0] = obj.position;
    const [px, py] = tf.toPx(x, y);
    ops.push({
      op: "circle",
      x: px,
      y: py,
      r: Math.max(3, obj.radius * tf.scale),
      fill: PALETTE.object,
    });
  }

  if (s.plan && s.plan.waypoints.length > 1) {
    ops.push({
      op: "poly",
      pts: s.plan.waypoints.map(([x = 0, y = 0]) => tf.toPx(x, y)),
      stroke: PALETTE.plan,
      width: 2,
    });
  }

  for (const det of Object.values(s.detections)) {
    const [x = 0, y = 0] = det.world;
    const [px, py] = tf.toPx(x, y);
    ops.push({ op: "circle", x: px, y: py, r: 6, stroke: PALETTE.detection });
    ops.push({
      op: "text",
      x: px + 8,
      y: py,
      text: `${det.label} ${det.confidence.toFixed(2)}`,
      fill: PALETTE.detection,
      size: 11,
    });
  }

  if (s.robot) {
    const { x, y, theta, mu, proximity } = s.robot;
    const [px, py] = tf.toPx(x, y);
    const color = proximity
      ? PALETTE.robotBlocked
      : mu < 1
        ? PALETTE.robotSlow
        : PALETTE.robot;
    const r = Math.max(5, 0.17 * tf.scale); // base footprint radius
    ops.push({ op: "circle", x: px, y: py, r, stroke: color });
    const [hx, hy] = tf.toPx(x + 0.3 * Math.cos(theta), y + 0.3 * Math.sin(theta));
    ops.push({ op: "line", x1: px, y1: py, x2: hx, y2: hy, stroke: color, width: 2 });
    if (heldId) {
      ops.push({ op: "circle", x: px, y: py, r: 3, fill: PALETTE.held });
    }
  }
  return ops;
}

/**
 * Gripper-frame side view: mast height vs. reach, with every detection
 * shaded by its 3-D distance to the gripper point (near = bright).
 */
export function gripperView(s: ConsoleState, vp: Viewport): DrawOp[] {
  const ops: DrawOp[] = [{ op: "clear", w: vp.w, h: vp.h, fill: PALETTE.floor }];
  if (!s.robot) {
    return ops;
  }
  const reachSpan = 1.0; // meters shown on the x axis
  const heightSpan = 1.4; // meters shown on the y axis
  const px = (reach: number) => 30 + (reach / reachSpan) * (vp.w - 60);
  const py = (height: number) => vp.h - 20 - (height / heightSpan) * (vp.h - 40);

  const { lift, extension, gripper, wrist_yaw } = s.robot;
  ops.push({ op: "line", x1: px(0), y1: py(0), x2: px(0), y2: py(1.2), stroke: PALETTE.wall, width: 4 });
  ops.push({ op: "line", x1: px(0), y1: py(lift), x2: px(extension), y2: py(lift), stroke: PALETTE.robot, width: 3 });

  // jaws: aperture opens vertically in this projection
  const jaw = Math.max(2, gripper * 300);
  const tipX = px(extension);
  ops.push({ op: "line", x1: tipX, y1: py(lift) - jaw, x2: tipX + 12, y2: py(lift) - jaw, stroke: PALETTE.robot, width: 2 });
  ops.push({ op: "line", x1: tipX, y1: py(lift) + jaw, x2: tipX + 12, y2: py(lift) + jaw, stroke: PALETTE.robot, width: 2 });
  ops.push({
    op: "text",
    x: tipX,
    y: py(lift) - jaw - 8,
    text: `yaw ${wrist_yaw.toFixed(2)}`,
    fill: PALETTE.text,
    size: 10,
  });

  for (const det of Object.values(s.detections)) {
    const [tx = 0, ty = 0, tz = 0] = det.world;
    const radial = Math.hypot(tx - s.robot.x, ty - s.robot.y);
    const d = Math.hypot(radial - extension, tz - lift);
    ops.push({
      op: "circle",
      x: px(Math.min(radial, reachSpan)),
      y: py(Math.min(Math.max(tz, 0), heightSpan)),
      r: 5,
      fill: depthShade(d),
    });
  }

  if (s.robot.held) {
    ops.push({ op: "circle", x: tipX + 6, y: py(lift), r: 4, fill: PALETTE.held });
  }
  return ops;
}

/** Near targets render bright, far ones fade toward the background. */
export function depthShade(distanceM: number): string {
  const near = Math.max(0, Math.min(1, 1 - distanceM / 1.5));
  const level = Math.round(60 + 190 * near);
  return `rgb(${Math.round(level * 0.45)},${level},${Math.round(level * 0.55)})`;
}

/** Amplitude grid -> RGBA image data (row-major, one pixel per channel). */
export function heatmapImage(grid: number[][], maxUv = 60): Uint8ClampedArray<ArrayBuffer> {
  const rows = grid.length;
  const cols = grid[0]?.length ?? 0;
  const rgba = new Uint8ClampedArray(rows * cols * 4);
  for (let r = 0; r < rows; r++) {
    const row = grid[r] ?? [];
    for (let c = 0; c < cols; c++) {
      const v = Math.max(0, Math.min(1, (row[c] ?? 0) / maxUv));
      const at = (r * cols + c) * 4;
      // dark blue -> teal -> warm yellow ramp
      rgba[at] = Math.round(250 * v * v);
      rgba[at + 1] = Math.round(40 + 200 * v);
      rgba[at + 2] = Math.round(70 + 110 * (1 - v));
      rgba[at + 3] = 255;
    }
  }
  return rgba;
}

export interface ModeMapRow {
  gesture: string;
  left: string;
  right: string;
}

export interface ModeMapView {
  mode: string;
  active: boolean;
  rows: ModeMapRow[];
}

/** Mode/gesture/action table straight from the server's config echo. */
export function modeMap(mode: ModeMsg | null): ModeMapView[] {
  if (!mode) {
    return [];
  }
  return mode.cycle.map((name) => {
    const entries = mode.table[name] ?? {};
    const gestures = new Map<string, ModeMapRow>();
    for (const [key, action] of Object.entries(entries)) {
      const sep = key.indexOf(":");
      const arm = key.slice(0, sep);
      const gesture = key.slice(sep + 1);
      const row = gestures.get(gesture) ?? { gesture, left: "", right: "" };
      if (arm === "left" || arm === "right") {
        row[arm] = action;
      }
      gestures.set(gesture, row);
    }
    return {
      mode: name,
      active: name === mode.mode,
      rows: [...gestures.values()].sort((a, b) =>
        a.gesture.localeCompare(b.gesture),
      ),
    };
  });
}

/** One-line session summary for the header strip. */
export function statusLine(s: ConsoleState): string {
  if (!s.robot) {
    return "no telemetry yet";
  }
  const r = s.robot;
  const parts = [
    `t ${(r.t_ms / 1000).toFixed(1)}s`,
    `mode ${r.mode}`,
    r.gesture_enabled ? "gestures on" : "gestures off",
    `authority ${r.authority}`,
    `v ${r.v.toFixed(2)}`,
    `w ${r.w.toFixed(2)}`,
  ];
  if (r.mu < 1) {
    parts.push(`governor ${r.mu.toFixed(2)}`);
  }
  if (r.stale) {
    parts.push("STALE STREAM");
  }
  if (r.held) {
    parts.push(`holding ${r.held}`);
  }
  return parts.join("  ·  ");
}
