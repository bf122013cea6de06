/**
 * Transports: how console bytes reach the service and come back.
 *
 * The browser uses `WebSocketTransport`; tests and terminal tooling use the
 * raw NDJSON TCP socket (see nodetcp.ts). Both surface the same interface
 * and both may only carry the three outbound message shapes.
 */

import { encodeOutbound, parseServerMessage } from "./messages.js";
import type { Outbound, ServerMessage } from "./messages.js";

export interface Transport {
  send(msg: Outbound): void;
  onMessage(fn: (m: ServerMessage) => void): void;
  onStatus(fn: (connected: boolean) => void): void;
  close(): void;
}

/** Buffered newline framing; tolerates CRLF and partial chunks. */
export class LineSplitter {
  private buf = "";

  feed(chunk: string): string[] {
    this.buf += chunk;
    const lines: string[] = [];
    for (;;) {
      const nl = this.buf.indexOf("\n");
      if (nl < 0) {
        break;
      }
      let line = this.buf.slice(0, nl);
      if (line.endsWith("\r")) {
        line = line.slice(0, -1);
      }
      this.buf = this.buf.slice(nl + 1);
      if (line.length > 0) {
        lines.push(line);
      }
    }
    return lines;
  }

  pending(): number {
    return this.buf.length;
  }
}

/** The slice of the WebSocket API the transport needs; injectable in tests. */
export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export class WebSocketTransport implements Transport {
  private ws: WebSocketLike;
  private messageFns: Array<(m: ServerMessage) => void> = [];
  private statusFns: Array<(connected: boolean) => void> = [];
  private open = false;
  private queue: string[] = [];

  constructor(socket: WebSocketLike) {
    this.ws = socket;
    this.ws.onopen = () => {
      this.open = true;
      for (const line of this.queue.splice(0)) {
        this.ws.send(line);
      }
      this.emitStatus(true);
    };
    this.ws.onclose = () => {
      this.open = false;
      this.emitStatus(false);
    };
    this.ws.onmessage = (ev) => {
      if (typeof ev.data !== "string") {
        return;
      }
      const msg = parseServerMessage(ev.data);
      if (msg) {
        for (const fn of this.messageFns) {
          fn(msg);
        }
      }
    };
  }

  send(msg: Outbound): void {
    // WS framing already delimits messages; the trailing \n is NDJSON-only
    const line = encodeOutbound(msg).trimEnd();
    if (this.open) {
      this.ws.send(line);
    } else {
      this.queue.push(line);
    }
  }

  onMessage(fn: (m: ServerMessage) => void): void {
    this.messageFns.push(fn);
  }

  onStatus(fn: (connected: boolean) => void): void {
    this.statusFns.push(fn);
  }

  close(): void {
    this.ws.close();
  }

  private emitStatus(connected: boolean): void {
    for (const fn of this.statusFns) {
      fn(connected);
    }
  }
}
