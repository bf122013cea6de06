"""Console channel: engine snapshots out, operator messages in, over one port.

Clients may speak either newline-delimited JSON or a WebSocket (RFC 6455);
the protocol is sniffed from the first bytes of the connection, so scripted
drivers, ``nc``, and browsers all use the same endpoint.  The server runs on
its own thread; the engine interacts through two thread-safe hooks:

  * :meth:`ConsoleServer.broadcast` — called by the engine for every outbound
    snapshot message (fire-and-forget, slow clients are dropped);
  * :meth:`ConsoleServer.drain`     — called by the engine once per control
    tick to collect inbound messages.

New clients immediately receive the latest ``mode`` and ``state`` snapshots
so their UI converges without waiting for the next tick.
"""

from __future__ import annotations

import base64
import hashlib
import json
import selectors
import socket
import struct
import threading
from collections import deque

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
MAX_OUTBUF = 4 * 1024 * 1024
MAX_INBUF = 1 * 1024 * 1024
SNAPSHOT_KINDS = ("mode", "world", "state")


def ws_accept_key(key: str) -> str:
    digest = hashlib.sha1((key + WS_GUID).encode()).digest()
    return base64.b64encode(digest).decode()


def ws_text_frame(payload: bytes) -> bytes:
    n = len(payload)
    if n < 126:
        head = struct.pack("!BB", 0x81, n)
    elif n < 65536:
        head = struct.pack("!BBH", 0x81, 126, n)
    else:
        head = struct.pack("!BBQ", 0x81, 127, n)
    return head + payload


def _ws_control_frame(opcode: int, payload: bytes = b"") -> bytes:
    return struct.pack("!BB", 0x80 | opcode, len(payload)) + payload


class _Client:
    __slots__ = ("sock", "mode", "inbuf", "outbuf", "frag_op", "frag_buf")

    def __init__(self, sock):
        self.sock = sock
        self.mode = None  # None while sniffing, then "ndjson" | "ws"
        self.inbuf = b""
        self.outbuf = b""
        self.frag_op = None
        self.frag_buf = b""


class ConsoleServer:
    def __init__(self, port: int = 0, host: str = "127.0.0.1"):
        self._srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._srv.bind((host, port))
        self._srv.listen(8)
        self._srv.setblocking(False)
        self.host = host
        self.port = self._srv.getsockname()[1]

        self._sel = selectors.DefaultSelector()
        self._sel.register(self._srv, selectors.EVENT_READ)
        self._clients: dict[socket.socket, _Client] = {}
        self._inbound: deque[dict] = deque()
        self._snapshots: dict[str, bytes] = {}
        self._lock = threading.Lock()
        self._running = True
        self._thread = threading.Thread(target=self._loop, daemon=True,
                                        name="console-server")
        self._thread.start()

    # ------------------------------------------------------------ engine side

    def attach(self, engine):
        engine.add_listener(self.broadcast)
        engine.add_inbound_source(self.drain)
        for msg in engine.snapshot_messages():
            self.broadcast(msg)

    def broadcast(self, msg: dict):
        line = json.dumps(msg, separators=(",", ":")).encode()
        with self._lock:
            kind = msg.get("kind")
            if kind in SNAPSHOT_KINDS:
                self._snapshots[kind] = line
            for client in self._clients.values():
                self._enqueue(client, line)

    def drain(self) -> list[dict]:
        with self._lock:
            msgs = list(self._inbound)
            self._inbound.clear()
        return msgs

    def client_count(self) -> int:
        with self._lock:
            return sum(1 for c in self._clients.values() if c.mode)

    def close(self):
        self._running = False
        self._thread.join(timeout=2.0)
        with self._lock:
            for client in list(self._clients.values()):
                self._drop_locked(client)
            self._sel.unregister(self._srv)
        self._srv.close()
        self._sel.close()

    # ------------------------------------------------------------ serving

    def _enqueue(self, client: _Client, line: bytes):
        if client.mode == "ws":
            client.outbuf += ws_text_frame(line)
        elif client.mode == "ndjson":
            client.outbuf += line + b"\n"
        # still sniffing: skip; snapshots arrive once the mode is known
        if len(client.outbuf) > MAX_OUTBUF:
            self._drop_locked(client)

    def _drop_locked(self, client: _Client):
        self._clients.pop(client.sock, None)
        try:
            self._sel.unregister(client.sock)
        except (KeyError, ValueError):
            pass
        try:
            client.sock.close()
        except OSError:
            pass

    def _loop(self):
        while self._running:
            for key, _mask in self._sel.select(timeout=0.02):
                if key.fileobj is self._srv:
                    self._accept()
                else:
                    self._read(key.fileobj)
            self._flush()

    def _accept(self):
        try:
            sock, _addr = self._srv.accept()
        except OSError:
            return
        sock.setblocking(False)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        client = _Client(sock)
        with self._lock:
            self._clients[sock] = client
        self._sel.register(sock, selectors.EVENT_READ)

    def _read(self, sock):
        with self._lock:
            client = self._clients.get(sock)
        if client is None:
            return
        try:
            data = sock.recv(65536)
        except BlockingIOError:
            return
        except OSError:
            data = b""
        if not data:
            with self._lock:
                self._drop_locked(client)
            return
        client.inbuf += data
        if len(client.inbuf) > MAX_INBUF:
            with self._lock:
                self._drop_locked(client)
            return
        if client.mode is None:
            self._sniff(client)
        if client.mode == "ndjson":
            self._read_lines(client)
        elif client.mode == "ws":
            self._read_frames(client)

    def _sniff(self, client: _Client):
        if len(client.inbuf) < 4 and b"\n" not in client.inbuf:
            return  # a line break this early can't be an HTTP preamble
        if client.inbuf[:4] == b"GET ":
            self._try_handshake(client)
        else:
            client.mode = "ndjson"
            self._send_snapshots(client)

    def _try_handshake(self, client: _Client):
        end = client.inbuf.find(b"\r\n\r\n")
        if end < 0:
            return
        head = client.inbuf[:end].decode("latin-1")
        client.inbuf = client.inbuf[end + 4:]
        key = None
        for line in head.split("\r\n")[1:]:
            name, _, value = line.partition(":")
            if name.strip().lower() == "sec-websocket-key":
                key = value.strip()
        if key is None:
            with self._lock:
                self._drop_locked(client)
            return
        response = (
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {ws_accept_key(key)}\r\n\r\n"
        ).encode("latin-1")
        with self._lock:
            client.outbuf += response
            client.mode = "ws"
        self._send_snapshots(client)

    def _send_snapshots(self, client: _Client):
        with self._lock:
            for kind in SNAPSHOT_KINDS:
                line = self._snapshots.get(kind)
                if line is not None:
                    self._enqueue(client, line)

    def _read_lines(self, client: _Client):
        while b"\n" in client.inbuf:
            line, _, client.inbuf = client.inbuf.partition(b"\n")
            self._take_message(line)

    def _read_frames(self, client: _Client):
        while True:
            frame = self._pop_frame(client)
            if frame is None:
                return
            fin, opcode, payload = frame
            if opcode in (0x1, 0x2):  # text/binary, possibly fragmented
                if fin:
                    self._take_message(payload)
                else:
                    client.frag_op, client.frag_buf = opcode, payload
            elif opcode == 0x0 and client.frag_op is not None:
                client.frag_buf += payload
                if fin:
                    self._take_message(client.frag_buf)
                    client.frag_op, client.frag_buf = None, b""
            elif opcode == 0x8:  # close
                with self._lock:
                    client.outbuf += _ws_control_frame(0x8, payload[:125])
                    self._flush_client(client)
                    self._drop_locked(client)
                return
            elif opcode == 0x9:  # ping -> pong
                with self._lock:
                    client.outbuf += _ws_control_frame(0xA, payload[:125])

    def _pop_frame(self, client: _Client):
        buf = client.inbuf
        if len(buf) < 2:
            return None
        b0, b1 = buf[0], buf[1]
        fin = bool(b0 & 0x80)
        opcode = b0 & 0x0F
        masked = bool(b1 & 0x80)
        length = b1 & 0x7F
        pos = 2
        if length == 126:
            if len(buf) < pos + 2:
                return None
            length = struct.unpack_from("!H", buf, pos)[0]
            pos += 2
        elif length == 127:
            if len(buf) < pos + 8:
                return None
            length = struct.unpack_from("!Q", buf, pos)[0]
            pos += 8
        mask = b""
        if masked:
            if len(buf) < pos + 4:
                return None
            mask = buf[pos:pos + 4]
            pos += 4
        if len(buf) < pos + length:
            return None
        payload = buf[pos:pos + length]
        client.inbuf = buf[pos + length:]
        if masked:
            payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        return fin, opcode, payload

    def _take_message(self, raw: bytes):
        raw = raw.strip()
        if not raw:
            return
        try:
            msg = json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError):
            return
        if isinstance(msg, dict):
            with self._lock:
                self._inbound.append(msg)

    def _flush(self):
        with self._lock:
            for client in list(self._clients.values()):
                self._flush_client(client)

    def _flush_client(self, client: _Client):
        if not client.outbuf:
            return
        try:
            sent = client.sock.send(client.outbuf)
            client.outbuf = client.outbuf[sent:]
        except BlockingIOError:
            pass
        except OSError:
            self._drop_locked(client)
