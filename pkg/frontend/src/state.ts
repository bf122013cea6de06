/**
 * Console state: a latest-wins snapshot of everything the server has said.
 *
 * `apply` is a pure reducer over server messages — the console never
 * computes control decisions, it only remembers what it was told. Time is
 * server time (`t_ms`); the single wall-clock concern (staleness) lives in
 * the caller, which stamps `lastHeardWallMs`.
 */

import type {
  CommandEchoMsg,
  DetectionMsg,
  HeatmapMsg,
  ModeMsg,
  PredictionMsg,
  ServerMessage,
  StateMsg,
  WorldMsg,
} from "./messages.js";

export interface FeedLine {
  t_ms: number;
  level: string;
  text: string;
}

export interface TaskTimer {
  name: string;
  /** server time when the first state after arming arrived; null = waiting */
  startedTms: number | null;
}

export interface ConsoleState {
  mode: ModeMsg | null;
  world: WorldMsg | null;
  robot: StateMsg | null;
  prediction: PredictionMsg | null;
  heatmap: HeatmapMsg | null;
  plan: { room: string; waypoints: number[][] } | null;
  /** latest detection per object id */
  detections: Record<string, DetectionMsg>;
  lastEcho: CommandEchoMsg | null;
  feed: FeedLine[];
  task: TaskTimer | null;
}

export const FEED_LIMIT = 100;

export function initialState(): ConsoleState {
  return {
    mode: null,
    world: null,
    robot: null,
    prediction: null,
    heatmap: null,
    plan: null,
    detections: {},
    lastEcho: null,
    feed: [],
    task: null,
  };
}

function pushFeed(
  feed: FeedLine[],
  t_ms: number,
  level: string,
  text: string,
): FeedLine[] {
  const next = [...feed, { t_ms, level, text }];
  return next.length > FEED_LIMIT ? next.slice(next.length - FEED_LIMIT) : next;
}

export function apply(s: ConsoleState, m: ServerMessage): ConsoleState {
  switch (m.kind) {
    case "mode":
      return { ...s, mode: m };
    case "world":
      return { ...s, world: m };
    case "state": {
      const task =
        s.task && s.task.startedTms === null
          ? { ...s.task, startedTms: m.t_ms }
          : s.task;
      return { ...s, robot: m, task };
    }
    case "prediction":
      return { ...s, prediction: m };
    case "heatmap":
      return { ...s, heatmap: m };
    case "command_echo":
      return { ...s, lastEcho: m };
    case "plan": {
      const feed = pushFeed(
        s.feed,
        m.t_ms,
        "info",
        `plan ${m.event}: ${m.room}`,
      );
      if (m.event === "planned") {
        return { ...s, plan: { room: m.room, waypoints: m.waypoints ?? [] }, feed };
      }
      // goal_reached / cancelled / failed all retire the overlay
      return { ...s, plan: null, feed };
    }
    case "detection":
      return {
        ...s,
        detections: { ...s.detections, [m.id]: m },
        feed: pushFeed(
          s.feed,
          m.t_ms,
          "info",
          `detected ${m.label} (${m.confidence.toFixed(2)})`,
        ),
      };
    case "log":
      return { ...s, feed: pushFeed(s.feed, m.t_ms, m.level ?? "info", m.text) };
  }
}

/** Arm the task timer; it anchors to the next state message's server time. */
export function armTask(s: ConsoleState, name: string): ConsoleState {
  return { ...s, task: { name, startedTms: null } };
}

/** Drop the task timer (the finish marker itself is server-side only). */
export function clearTask(s: ConsoleState): ConsoleState {
  return { ...s, task: null };
}

/** Elapsed server time of the armed task, in seconds. */
export function taskElapsedS(s: ConsoleState): number | null {
  if (!s.task || s.task.startedTms === null || !s.robot) {
    return null;
  }
  return Math.max(0, (s.robot.t_ms - s.task.startedTms) / 1000);
}

/** True once nothing has been heard for over a second of wall time. */
export function isStale(lastHeardWallMs: number | null, nowWallMs: number): boolean {
  return lastHeardWallMs === null || nowWallMs - lastHeardWallMs > 1000;
}
