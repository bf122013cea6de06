import { readFileSync } from "node:fs";

import type {
  DetectionMsg,
  ModeMsg,
  PlanMsg,
  ServerMessage,
  StateMsg,
} from "../src/messages.js";
import { parseServerMessage } from "../src/messages.js";

export function fixtureLines(): string[] {
  const raw = readFileSync(new URL("./fixtures/session.ndjson", import.meta.url), "utf8");
  return raw.split("\n").filter((l) => l.trim().length > 0);
}

export function fixtureMessages(): ServerMessage[] {
  return fixtureLines().map((l) => {
    const m = parseServerMessage(l);
    if (!m) {
      throw new Error(`fixture line did not parse: ${l.slice(0, 80)}`);
    }
    return m;
  });
}

export function stateMsg(over: Partial<StateMsg> = {}): StateMsg {
  return {
    kind: "state",
    t_ms: 0,
    x: 5,
    y: 3,
    theta: 0,
    lift: 0.5,
    extension: 0.1,
    wrist_yaw: 0,
    wrist_pitch: 0,
    wrist_roll: 0,
    gripper: 0.05,
    held: null,
    mode: "ArmDrive",
    gesture_enabled: true,
    room_mode: false,
    authority: "direct",
    v: 0,
    w: 0,
    mu: 1,
    tier: 1,
    stale: false,
    proximity: false,
    ...over,
  };
}

export function modeMsg(over: Partial<ModeMsg> = {}): ModeMsg {
  return {
    kind: "mode",
    t_ms: 0,
    mode: "ArmDrive",
    cycle: ["ArmDrive", "ArmGripper"],
    table: {
      ArmDrive: {
        "left:wrist_forward": "base_forward",
        "left:wrist_back": "base_backward",
        "right:wrist_back": "lift_down",
      },
      ArmGripper: {
        "left:wrist_forward": "extend_out",
        "right:wrist_supination": "gripper_open",
      },
    },
    ...over,
  };
}

export function planMsg(over: Partial<PlanMsg> = {}): PlanMsg {
  return {
    kind: "plan",
    t_ms: 0,
    event: "planned",
    room: "kitchen",
    cost: 7.3,
    waypoints: [
      [8.7, 2.0],
      [5.0, 3.0],
      [2.0, 3.4],
    ],
    ...over,
  };
}

export function detectionMsg(over: Partial<DetectionMsg> = {}): DetectionMsg {
  return {
    kind: "detection",
    t_ms: 0,
    id: "can1",
    label: "can",
    confidence: 0.83,
    world: [9.3, 2.5, 0.55],
    query: "energy drink",
    ...over,
  };
}
