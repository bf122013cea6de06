/**
 * Wire types for the teleop service console channel.
 *
 * The server speaks newline-delimited JSON objects (over raw TCP or as
 * WebSocket text frames), each tagged with a `kind`. The console sends
 * exactly three message shapes and nothing else — it is a thin client.
 */

export interface ModeMsg {
  kind: "mode";
  t_ms: number;
  mode: string;
  cycle: string[];
  /** mode -> "arm:label" -> action token; rendered, never hard-coded. */
  table: Record<string, Record<string, string>>;
}

export interface WorldMsg {
  kind: "world";
  t_ms: number;
  /** [xmin, ymin, xmax, ymax] in meters. */
  extent: number[];
  cell_size: number;
  rooms: Record<string, number[]>;
  /** merged [xmin, ymin, xmax, ymax] obstacle rectangles. */
  obstacles: number[][];
  objects: SceneObjectMsg[];
}

export interface SceneObjectMsg {
  id: string;
  label: string;
  position: number[];
  radius: number;
}

export interface StateMsg {
  kind: "state";
  t_ms: number;
  x: number;
  y: number;
  theta: number;
  lift: number;
  extension: number;
  wrist_yaw: number;
  wrist_pitch: number;
  wrist_roll: number;
  gripper: number;
  held: string | null;
  mode: string;
  gesture_enabled: boolean;
  room_mode: boolean;
  authority: string;
  v: number;
  w: number;
  mu: number;
  tier: number;
  stale: boolean;
  proximity: boolean;
}

export interface PredictionMsg {
  kind: "prediction";
  t_ms: number;
  left: string;
  right: string;
}

export interface HeatmapMsg {
  kind: "heatmap";
  t_ms: number;
  left: number[][];
  right: number[][];
}

export interface CommandEchoMsg {
  kind: "command_echo";
  t_ms: number;
  seq: number;
  mode: string;
  left: string;
  right: string;
  tier: number;
  stale: boolean;
}

export interface PlanMsg {
  kind: "plan";
  t_ms: number;
  event: string;
  room: string;
  cost?: number;
  waypoints?: number[][];
}

export interface DetectionMsg {
  kind: "detection";
  t_ms: number;
  id: string;
  label: string;
  confidence: number;
  world: number[];
  query: string;
}

export interface LogMsg {
  kind: "log";
  t_ms: number;
  level?: string;
  text: string;
}

export type ServerMessage =
  | ModeMsg
  | WorldMsg
  | StateMsg
  | PredictionMsg
  | HeatmapMsg
  | CommandEchoMsg
  | PlanMsg
  | DetectionMsg
  | LogMsg;

const SERVER_KINDS = new Set([
  "mode",
  "world",
  "state",
  "prediction",
  "heatmap",
  "command_echo",
  "plan",
  "detection",
  "log",
]);

/**
 * Parse one NDJSON line. Unknown kinds and malformed lines come back null:
 * the console tolerates a newer server, it never guesses.
 */
export function parseServerMessage(line: string): ServerMessage | null {
  let value: unknown;
  try {
    value = JSON.parse(line);
  } catch {
    return null;
  }
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    return null;
  }
  const kind = (value as { kind?: unknown }).kind;
  if (typeof kind !== "string" || !SERVER_KINDS.has(kind)) {
    return null;
  }
  return value as ServerMessage;
}

/** The only three messages a console is allowed to send. */
export type Outbound =
  | { kind: "text_command"; text: string }
  | { kind: "keyboard_gesture"; left?: string; right?: string }
  | {
      kind: "task_marker";
      action: "start" | "finish";
      name: string;
      predicate: string[];
      timeout_s?: number;
    };

export function encodeOutbound(msg: Outbound): string {
  return JSON.stringify(msg) + "\n";
}
