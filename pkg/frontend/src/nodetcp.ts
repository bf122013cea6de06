/**
 * Raw NDJSON transport over TCP for Node contexts (tests, terminal tools).
 *
 * The service sniffs its first bytes to tell WebSocket from NDJSON and a
 * silent peer is never classified, so the client announces itself with a
 * bare newline on connect.
 */

import net from "node:net";

import { encodeOutbound, parseServerMessage } from "./messages.js";
import type { Outbound, ServerMessage } from "./messages.js";
import { LineSplitter } from "./transport.js";
import type { Transport } from "./transport.js";

export class TcpTransport implements Transport {
  private sock: net.Socket;
  private splitter = new LineSplitter();
  private messageFns: Array<(m: ServerMessage) => void> = [];
  private statusFns: Array<(connected: boolean) => void> = [];

  constructor(host: string, port: number) {
    this.sock = net.createConnection({ host, port }, () => {
      this.sock.write("\n"); // hello: lets the server classify the protocol
      for (const fn of this.statusFns) {
        fn(true);
      }
    });
    this.sock.setNoDelay(true);
    this.sock.on("data", (chunk: Buffer) => {
      for (const line of this.splitter.feed(chunk.toString("utf8"))) {
        const msg = parseServerMessage(line);
        if (msg) {
          for (const fn of this.messageFns) {
            fn(msg);
          }
        }
      }
    });
    const down = () => {
      for (const fn of this.statusFns) {
        fn(false);
      }
    };
    this.sock.on("close", down);
    this.sock.on("error", down);
  }

  send(msg: Outbound): void {
    this.sock.write(encodeOutbound(msg));
  }

  onMessage(fn: (m: ServerMessage) => void): void {
    this.messageFns.push(fn);
  }

  onStatus(fn: (connected: boolean) => void): void {
    this.statusFns.push(fn);
  }

  close(): void {
    this.sock.end();
    this.sock.destroy();
  }
}
