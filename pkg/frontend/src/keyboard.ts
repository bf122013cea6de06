/**
 * Keyboard gesture injection: key holds become per-arm label streams.
 *
 * Injection enters the server at the label stage, so dwell and vote
 * semantics apply to a key exactly as they would to a classified gesture.
 * While anything is held the tracker re-sends the current labels at the
 * 25 Hz window cadence (the `heartbeat`), matching the classifier rate.
 */

import type { Outbound } from "./messages.js";

export type Arm = "left" | "right";

export interface KeyBinding {
  arm: Arm;
  label: string;
}

export const DEFAULT_BINDINGS: Record<string, KeyBinding> = {
  w: { arm: "left", label: "wrist_forward" },
  s: { arm: "left", label: "wrist_back" },
  a: { arm: "left", label: "wrist_supination" },
  d: { arm: "left", label: "wrist_pronation" },
  j: { arm: "right", label: "wrist_supination" },
  k: { arm: "right", label: "wrist_back" },
};

export const HEARTBEAT_MS = 40;

const REST = "rest";

export class KeyTracker {
  private bindings: Record<string, KeyBinding>;
  /** pressed keys per arm, oldest first; the newest press wins the arm */
  private pressed: { left: string[]; right: string[] } = { left: [], right: [] };
  private lastSent: { left: string; right: string } = { left: REST, right: REST };

  constructor(bindings: Record<string, KeyBinding> = DEFAULT_BINDINGS) {
    this.bindings = bindings;
  }

  held(): { left: string; right: string } {
    return { left: this.armLabel("left"), right: this.armLabel("right") };
  }

  private armLabel(arm: Arm): string {
    const keys = this.pressed[arm];
    const top = keys[keys.length - 1];
    if (top === undefined) {
      return REST;
    }
    const binding = this.bindings[top];
    return binding ? binding.label : REST;
  }

  keyDown(key: string): Outbound | null {
    const binding = this.bindings[key];
    if (!binding) {
      return null;
    }
    const keys = this.pressed[binding.arm];
    if (!keys.includes(key)) {
      keys.push(key);
    }
    return this.emitIfChanged();
  }

  keyUp(key: string): Outbound | null {
    const binding = this.bindings[key];
    if (!binding) {
      return null;
    }
    const keys = this.pressed[binding.arm];
    const at = keys.indexOf(key);
    if (at >= 0) {
      keys.splice(at, 1);
    }
    return this.emitIfChanged();
  }

  /** Called every 40 ms; repeats the held labels, silent when all-rest. */
  heartbeat(): Outbound | null {
    const { left, right } = this.held();
    if (left === REST && right === REST) {
      return null;
    }
    return { kind: "keyboard_gesture", left, right };
  }

  /** One final rest on teardown so the robot never inherits a held key. */
  releaseAll(): Outbound | null {
    this.pressed = { left: [], right: [] };
    return this.emitIfChanged();
  }

  private emitIfChanged(): Outbound | null {
    const now = this.held();
    if (now.left === this.lastSent.left && now.right === this.lastSent.right) {
      return null;
    }
    this.lastSent = now;
    return { kind: "keyboard_gesture", left: now.left, right: now.right };
  }
}
