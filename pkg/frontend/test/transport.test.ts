import net from "node:net";
import { once } from "node:events";

import { expect, test } from "vitest";

import { LineSplitter, WebSocketTransport } from "../src/transport.js";
import type { WebSocketLike } from "../src/transport.js";
import { TcpTransport } from "../src/nodetcp.js";
import type { ServerMessage } from "../src/messages.js";
import { stateMsg } from "./util.js";

// ----------------------------------------------------------- LineSplitter

test("splitter reassembles lines across arbitrary chunk boundaries", () => {
  const sp = new LineSplitter();
  expect(sp.feed('{"a":')).toEqual([]);
  expect(sp.pending()).toBe(5);
  expect(sp.feed('1}\n{"b":2}\n{"c"')).toEqual(['{"a":1}', '{"b":2}']);
  expect(sp.feed(":3}\n")).toEqual(['{"c":3}']);
  expect(sp.pending()).toBe(0);
});

test("splitter tolerates CRLF and skips blank lines", () => {
  const sp = new LineSplitter();
  expect(sp.feed("one\r\n\r\n\ntwo\n")).toEqual(["one", "two"]);
});

// ------------------------------------------------------ WebSocketTransport

class FakeSocket implements WebSocketLike {
  sent: string[] = [];
  closed = false;
  onopen: ((ev?: unknown) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
  }
}

test("sends queue until the socket opens, then flush in order", () => {
  const sock = new FakeSocket();
  const t = new WebSocketTransport(sock);
  const status: boolean[] = [];
  t.onStatus((up) => status.push(up));

  t.send({ kind: "text_command", text: "first" });
  t.send({ kind: "keyboard_gesture", left: "wrist_forward", right: "rest" });
  expect(sock.sent).toEqual([]); // nothing leaves before the handshake

  sock.onopen?.();
  expect(status).toEqual([true]);
  expect(sock.sent.map((s) => JSON.parse(s).kind)).toEqual([
    "text_command",
    "keyboard_gesture",
  ]);
  // websocket frames carry no newline framing
  expect(sock.sent.every((s) => !s.includes("\n"))).toBe(true);

  t.send({ kind: "text_command", text: "second" });
  expect(sock.sent.length).toBe(3);
});

test("incoming frames are parsed and filtered before listeners see them", () => {
  const sock = new FakeSocket();
  const t = new WebSocketTransport(sock);
  const seen: ServerMessage[] = [];
  t.onMessage((m) => seen.push(m));
  sock.onopen?.();

  sock.onmessage?.({ data: JSON.stringify(stateMsg({ t_ms: 700 })) });
  sock.onmessage?.({ data: "garbage {" });
  sock.onmessage?.({ data: 12345 }); // non-string frames are ignored
  sock.onmessage?.({ data: '{"kind":"future_kind"}' });

  expect(seen.length).toBe(1);
  expect(seen[0]?.kind).toBe("state");
  expect(seen[0]?.t_ms).toBe(700);
});

test("close reaches the socket and the drop is reported", () => {
  const sock = new FakeSocket();
  const t = new WebSocketTransport(sock);
  const status: boolean[] = [];
  t.onStatus((up) => status.push(up));
  sock.onopen?.();
  t.close();
  expect(sock.closed).toBe(true);
  sock.onclose?.();
  expect(status).toEqual([true, false]);
});

// ----------------------------------------------------------- TcpTransport

async function withServer(
  fn: (port: number, conns: net.Socket[], received: { data: string }) => Promise<void>,
): Promise<void> {
  const conns: net.Socket[] = [];
  const received = { data: "" };
  const server = net.createServer((sock) => {
    conns.push(sock);
    sock.on("data", (b) => {
      received.data += b.toString("utf8");
    });
  });
  server.listen(0, "127.0.0.1");
  await once(server, "listening");
  const addr = server.address() as net.AddressInfo;
  try {
    await fn(addr.port, conns, received);
  } finally {
    for (const c of conns) {
      c.destroy();
    }
    server.close();
  }
}

function until<T>(probe: () => T | null, ms = 2000): Promise<T> {
  return new Promise((resolve, reject) => {
    const started = Date.now();
    const tick = () => {
      const got = probe();
      if (got !== null) {
        resolve(got);
      } else if (Date.now() - started > ms) {
        reject(new Error("timed out waiting for condition"));
      } else {
        setTimeout(tick, 5);
      }
    };
    tick();
  });
}

test("tcp transport announces itself with a bare newline on connect", async () => {
  await withServer(async (port, _conns, received) => {
    const t = new TcpTransport("127.0.0.1", port);
    try {
      await until(() => (received.data.length > 0 ? received.data : null));
      // the hello must lead so the server can classify a quiet client
      expect(received.data[0]).toBe("\n");
    } finally {
      t.close();
    }
  });
});

test("outbound messages arrive as single NDJSON lines", async () => {
  await withServer(async (port, _conns, received) => {
    const t = new TcpTransport("127.0.0.1", port);
    try {
      t.send({ kind: "text_command", text: "hey robot, status" });
      t.send({ kind: "keyboard_gesture", left: "wrist_back", right: "wrist_back" });
      const text = await until(() => {
        const lines = received.data.split("\n").filter((l) => l.length > 0);
        return lines.length >= 2 ? lines : null;
      });
      expect(JSON.parse(text[0]!)).toEqual({
        kind: "text_command",
        text: "hey robot, status",
      });
      expect(JSON.parse(text[1]!)).toEqual({
        kind: "keyboard_gesture",
        left: "wrist_back",
        right: "wrist_back",
      });
    } finally {
      t.close();
    }
  });
});

test("server lines are parsed even when fragmented mid-object", async () => {
  await withServer(async (port, conns, _received) => {
    const t = new TcpTransport("127.0.0.1", port);
    const seen: ServerMessage[] = [];
    t.onMessage((m) => seen.push(m));
    try {
      const conn = await until(() => conns[0] ?? null);
      const line = JSON.stringify(stateMsg({ t_ms: 4242 })) + "\n";
      conn.write(line.slice(0, 25));
      await new Promise((r) => setTimeout(r, 20));
      conn.write(line.slice(25));
      conn.write('{"kind":"log","t_ms":1,"text":"hi"}\nnot json\n');
      await until(() => (seen.length >= 2 ? seen : null));
      expect(seen[0]?.kind).toBe("state");
      expect(seen[0]?.t_ms).toBe(4242);
      expect(seen[1]?.kind).toBe("log");
      expect(seen.length).toBe(2); // the junk line was dropped silently
    } finally {
      t.close();
    }
  });
});

test("a dropped connection reports disconnected status", async () => {
  await withServer(async (port, conns) => {
    const t = new TcpTransport("127.0.0.1", port);
    const status: boolean[] = [];
    t.onStatus((up) => status.push(up));
    try {
      const conn = await until(() => conns[0] ?? null);
      await until(() => (status.includes(true) ? true : null));
      conn.destroy();
      await until(() => (status.includes(false) ? true : null));
      expect(status[status.length - 1]).toBe(false);
    } finally {
      t.close();
    }
  });
});
