/**
 * Browser shell: wires the socket, keyboard, and canvases together.
 *
 * Everything stateful lives in the pure reducer (`state.ts`); this module
 * only moves bytes and pixels. Rendering samples the latest state on each
 * animation frame, so a burst of telemetry never queues stale frames.
 */

import { WebSocketTransport, type Transport, type WebSocketLike } from "./transport.js";
import { HEARTBEAT_MS, KeyTracker } from "./keyboard.js";
import {
  apply,
  armTask,
  clearTask,
  initialState,
  isStale,
  taskElapsedS,
  type ConsoleState,
} from "./state.js";
import {
  gripperView,
  heatmapImage,
  modeMap,
  statusLine,
  worldView,
  type DrawOp,
} from "./render.js";
import type { ModeMsg, Outbound } from "./messages.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`console page is missing #${id}`);
  }
  return node as T;
}

function canvas2d(id: string): [HTMLCanvasElement, CanvasRenderingContext2D] {
  const c = el<HTMLCanvasElement>(id);
  const ctx = c.getContext("2d");
  if (!ctx) {
    throw new Error(`no 2d context for #${id}`);
  }
  return [c, ctx];
}

function paint(ctx: CanvasRenderingContext2D, ops: DrawOp[]): void {
  for (const op of ops) {
    switch (op.op) {
      case "clear":
        ctx.fillStyle = op.fill;
        ctx.fillRect(0, 0, op.w, op.h);
        break;
      case "rect":
        ctx.fillStyle = op.fill;
        ctx.fillRect(op.x, op.y, op.w, op.h);
        break;
      case "circle":
        ctx.beginPath();
        ctx.arc(op.x, op.y, op.r, 0, 2 * Math.PI);
        if (op.fill) {
          ctx.fillStyle = op.fill;
          ctx.fill();
        }
        if (op.stroke) {
          ctx.strokeStyle = op.stroke;
          ctx.lineWidth = 1.5;
          ctx.stroke();
        }
        break;
      case "poly": {
        const [first, ...rest] = op.pts;
        if (!first) {
          break;
        }
        ctx.beginPath();
        ctx.moveTo(first[0], first[1]);
        for (const [x, y] of rest) {
          ctx.lineTo(x, y);
        }
        ctx.strokeStyle = op.stroke;
        ctx.lineWidth = op.width;
        ctx.stroke();
        break;
      }
      case "line":
        ctx.beginPath();
        ctx.moveTo(op.x1, op.y1);
        ctx.lineTo(op.x2, op.y2);
        ctx.strokeStyle = op.stroke;
        ctx.lineWidth = op.width;
        ctx.stroke();
        break;
      case "text":
        ctx.fillStyle = op.fill;
        ctx.font = `${op.size}px ui-monospace, monospace`;
        ctx.fillText(op.text, op.x, op.y);
        break;
    }
  }
}

/**
 * Adapt a browser WebSocket to the injectable shape the transport expects
 * (the native handler types are not structurally compatible under strict
 * function-type checking, so the bridge is explicit).
 */
function wrapBrowserSocket(ws: WebSocket): WebSocketLike {
  const like: WebSocketLike = {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    onopen: null,
    onclose: null,
    onmessage: null,
  };
  ws.onopen = () => like.onopen?.();
  ws.onclose = () => like.onclose?.();
  ws.onerror = () => like.onclose?.();
  ws.onmessage = (ev) => like.onmessage?.({ data: ev.data });
  return like;
}

function drawHeatmap(
  display: HTMLCanvasElement,
  buffer: HTMLCanvasElement,
  grid: number[][],
): void {
  const rows = grid.length;
  const cols = grid[0]?.length ?? 0;
  if (rows === 0 || cols === 0) {
    return;
  }
  buffer.width = cols;
  buffer.height = rows;
  const bctx = buffer.getContext("2d");
  const dctx = display.getContext("2d");
  if (!bctx || !dctx) {
    return;
  }
  bctx.putImageData(new ImageData(heatmapImage(grid), cols, rows), 0, 0);
  dctx.imageSmoothingEnabled = false;
  dctx.drawImage(buffer, 0, 0, display.width, display.height);
}

function renderModeMap(container: HTMLElement, mode: ModeMsg | null): void {
  container.textContent = "";
  for (const view of modeMap(mode)) {
    const block = document.createElement("div");
    block.className = view.active ? "mode active" : "mode";
    const title = document.createElement("h3");
    title.textContent = view.active ? `▶ ${view.mode}` : view.mode;
    block.appendChild(title);
    const table = document.createElement("table");
    const head = table.insertRow();
    for (const label of ["gesture", "left", "right"]) {
      const th = document.createElement("th");
      th.textContent = label;
      head.appendChild(th);
    }
    for (const row of view.rows) {
      const tr = table.insertRow();
      tr.insertCell().textContent = row.gesture;
      tr.insertCell().textContent = row.left || "·";
      tr.insertCell().textContent = row.right || "·";
    }
    block.appendChild(table);
    container.appendChild(block);
  }
}

export function main(): void {
  const [worldCanvas, worldCtx] = canvas2d("world");
  const [gripCanvas, gripCtx] = canvas2d("gripper");
  const heatLeft = el<HTMLCanvasElement>("heat-left");
  const heatRight = el<HTMLCanvasElement>("heat-right");
  const heatBufL = document.createElement("canvas");
  const heatBufR = document.createElement("canvas");
  const modeBox = el<HTMLDivElement>("mode-map");
  const feedBox = el<HTMLPreElement>("feed");
  const status = el<HTMLDivElement>("status");
  const banner = el<HTMLDivElement>("stale-banner");
  const conn = el<HTMLSpanElement>("conn");
  const predLeft = el<HTMLSpanElement>("pred-left");
  const predRight = el<HTMLSpanElement>("pred-right");
  const taskClock = el<HTMLSpanElement>("task-clock");
  const textInput = el<HTMLInputElement>("text-command");
  const taskName = el<HTMLInputElement>("task-name");
  const taskPredicate = el<HTMLInputElement>("task-predicate");
  const taskStart = el<HTMLButtonElement>("task-start");
  const taskFinish = el<HTMLButtonElement>("task-finish");

  let state: ConsoleState = initialState();
  let lastHeardWallMs: number | null = null;
  let connected = false;
  let transport: Transport | null = null;
  let closing = false;
  let renderedMode: ModeMsg | null = null;
  const tracker = new KeyTracker();

  const send = (msg: Outbound | null): void => {
    if (msg && transport && connected) {
      transport.send(msg);
    }
  };

  const params = new URLSearchParams(location.search);
  const host = params.get("host") ?? location.hostname ?? "127.0.0.1";
  const port = params.get("port") ?? "8765";
  const url = `ws://${host}:${port}/`;

  function connect(): void {
    const ws = new WebSocket(url);
    const t = new WebSocketTransport(wrapBrowserSocket(ws));
    t.onMessage((m) => {
      state = apply(state, m);
      lastHeardWallMs = Date.now();
    });
    t.onStatus((up) => {
      connected = up;
      conn.textContent = up ? `connected ${url}` : "disconnected";
      conn.className = up ? "ok" : "bad";
      if (!up && !closing) {
        transport = null;
        tracker.releaseAll();
        setTimeout(connect, 1000);
      }
    });
    transport = t;
  }

  // Keyboard: immediate edges plus a heartbeat while anything is held, so
  // the label stream stays in step with the server's window cadence.
  window.addEventListener("keydown", (ev) => {
    if (ev.repeat || document.activeElement instanceof HTMLInputElement) {
      return;
    }
    send(tracker.keyDown(ev.key.toLowerCase()));
  });
  window.addEventListener("keyup", (ev) => {
    if (document.activeElement instanceof HTMLInputElement) {
      return;
    }
    send(tracker.keyUp(ev.key.toLowerCase()));
  });
  window.addEventListener("blur", () => {
    send(tracker.releaseAll());
  });
  setInterval(() => {
    send(tracker.heartbeat());
  }, HEARTBEAT_MS);

  textInput.addEventListener("keydown", (ev) => {
    if (ev.key !== "Enter") {
      return;
    }
    const text = textInput.value.trim();
    if (text) {
      send({ kind: "text_command", text });
      textInput.value = "";
    }
  });

  taskStart.addEventListener("click", () => {
    const name = taskName.value.trim() || "task";
    const predicate = taskPredicate.value
      .split(",")
      .map((p) => p.trim())
      .filter((p) => p.length > 0);
    send({ kind: "task_marker", action: "start", name, predicate });
    state = armTask(state, name);
  });

  taskFinish.addEventListener("click", () => {
    const name = state.task?.name ?? (taskName.value.trim() || "task");
    send({ kind: "task_marker", action: "finish", name, predicate: [] });
    state = clearTask(state);
  });

  function frame(): void {
    worldCanvas.width = worldCanvas.clientWidth || worldCanvas.width;
    worldCanvas.height = worldCanvas.clientHeight || worldCanvas.height;
    paint(worldCtx, worldView(state, { w: worldCanvas.width, h: worldCanvas.height }));
    paint(gripCtx, gripperView(state, { w: gripCanvas.width, h: gripCanvas.height }));
    if (state.heatmap) {
      drawHeatmap(heatLeft, heatBufL, state.heatmap.left);
      drawHeatmap(heatRight, heatBufR, state.heatmap.right);
    }
    if (state.mode !== renderedMode) {
      renderedMode = state.mode;
      renderModeMap(modeBox, state.mode);
    }
    status.textContent = statusLine(state);
    predLeft.textContent = state.prediction?.left ?? "—";
    predRight.textContent = state.prediction?.right ?? "—";
    const stale = !connected || isStale(lastHeardWallMs, Date.now());
    banner.style.display = stale ? "block" : "none";
    banner.textContent = connected
      ? "TELEMETRY STALE — last update over 1 s ago"
      : "DISCONNECTED — reconnecting…";
    const elapsed = taskElapsedS(state);
    taskClock.textContent =
      state.task && elapsed !== null
        ? `${state.task.name}: ${elapsed.toFixed(1)} s`
        : state.task
          ? `${state.task.name}: waiting for telemetry`
          : "no task armed";
    feedBox.textContent = state.feed
      .map((l) => `[${(l.t_ms / 1000).toFixed(2)}] ${l.level}: ${l.text}`)
      .join("\n");
    feedBox.scrollTop = feedBox.scrollHeight;
    requestAnimationFrame(frame);
  }

  window.addEventListener("beforeunload", () => {
    closing = true;
    transport?.close();
  });

  connect();
  requestAnimationFrame(frame);
}

main();
