import { expect, test } from "vitest";

import { DEFAULT_BINDINGS, KeyTracker } from "../src/keyboard.js";

test("a key press emits the full per-arm label pair", () => {
  const kt = new KeyTracker();
  expect(kt.keyDown("w")).toEqual({
    kind: "keyboard_gesture",
    left: "wrist_forward",
    right: "rest",
  });
  expect(kt.keyDown("k")).toEqual({
    kind: "keyboard_gesture",
    left: "wrist_forward",
    right: "wrist_back",
  });
});

test("unbound keys and repeated presses emit nothing", () => {
  const kt = new KeyTracker();
  expect(kt.keyDown("q")).toBeNull();
  expect(kt.keyUp("q")).toBeNull();
  expect(kt.keyDown("w")).not.toBeNull();
  expect(kt.keyDown("w")).toBeNull(); // already held, nothing changed
  expect(kt.keyUp("s")).toBeNull(); // releasing a key that was never down
});

test("the newest press wins an arm and release falls back", () => {
  const kt = new KeyTracker();
  kt.keyDown("w");
  expect(kt.keyDown("s")?.kind === "keyboard_gesture" && kt.held().left).toBe(
    "wrist_back",
  );
  // releasing the newer key hands the arm back to the older hold
  expect(kt.keyUp("s")).toEqual({
    kind: "keyboard_gesture",
    left: "wrist_forward",
    right: "rest",
  });
  expect(kt.keyUp("w")).toEqual({
    kind: "keyboard_gesture",
    left: "rest",
    right: "rest",
  });
});

test("arms are independent: a right-hand release leaves the left hold alone", () => {
  const kt = new KeyTracker();
  kt.keyDown("w");
  kt.keyDown("j");
  expect(kt.keyUp("j")).toEqual({
    kind: "keyboard_gesture",
    left: "wrist_forward",
    right: "rest",
  });
  expect(kt.held().left).toBe("wrist_forward");
});

test("heartbeat repeats held labels and stays silent at rest", () => {
  const kt = new KeyTracker();
  expect(kt.heartbeat()).toBeNull();
  kt.keyDown("w");
  expect(kt.heartbeat()).toEqual({
    kind: "keyboard_gesture",
    left: "wrist_forward",
    right: "rest",
  });
  expect(kt.heartbeat()).toEqual(kt.heartbeat()); // steady while held
  kt.keyUp("w");
  expect(kt.heartbeat()).toBeNull();
});

test("releaseAll sends one final all-rest and is then idempotent", () => {
  const kt = new KeyTracker();
  kt.keyDown("w");
  kt.keyDown("k");
  expect(kt.releaseAll()).toEqual({
    kind: "keyboard_gesture",
    left: "rest",
    right: "rest",
  });
  expect(kt.releaseAll()).toBeNull();
});

test("the mode-switch chord is both wrist-back labels at once", () => {
  const kt = new KeyTracker();
  kt.keyDown("s");
  expect(kt.keyDown("k")).toEqual({
    kind: "keyboard_gesture",
    left: "wrist_back",
    right: "wrist_back",
  });
});

test("custom bindings replace the defaults", () => {
  const kt = new KeyTracker({ x: { arm: "right", label: "wrist_pronation" } });
  expect(kt.keyDown("w")).toBeNull(); // default binding not present
  expect(kt.keyDown("x")).toEqual({
    kind: "keyboard_gesture",
    left: "rest",
    right: "wrist_pronation",
  });
});

test("default bindings cover both arms", () => {
  const arms = new Set(Object.values(DEFAULT_BINDINGS).map((b) => b.arm));
  expect(arms).toEqual(new Set(["left", "right"]));
});
