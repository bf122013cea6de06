"""TCP transport for EMG frame streams.

The producer writes encoded frames back to back; the consumer reassembles
them with the incremental parser and reports sample-index gaps as dropout
events. Real-time mode paces one 40-sample frame per 10 ms; headless mode
pushes as fast as the socket allows.
"""

from __future__ import annotations

import logging
import socket
import time
from dataclasses import dataclass
from typing import Iterable, Iterator

from emgteleop.stream.frames import EmgFrame, FrameParser, encode_frame, FRAME_PERIOD_S

log = logging.getLogger(__name__)


@dataclass
class Dropout:
    expected_index: int
    got_index: int

    @property
    def missing_samples(self) -> int:
        return self.got_index - self.expected_index


def parse_endpoint(endpoint: str) -> tuple[str, int]:
    host, _, port = endpoint.rpartition(":")
    return host or "127.0.0.1", int(port)


def serve_stream(frames: Iterable[EmgFrame], endpoint: str, realtime: bool = True,
                 ready=None) -> int:
    """Serve one client, blocking. Returns frames sent."""
    host, port = parse_endpoint(endpoint)
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as srv:
        srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        srv.bind((host, port))
        srv.listen(1)
        if ready is not None:
            ready.set()
        conn, addr = srv.accept()
        log.info("stream client connected from %s", addr)
        sent = 0
        t0 = time.monotonic()
        with conn:
            try:
                for frame in frames:
                    if realtime:
                        due = t0 + sent * FRAME_PERIOD_S
                        delay = due - time.monotonic()
                        if delay > 0:
                            time.sleep(delay)
                    conn.sendall(encode_frame(frame))
                    sent += 1
            except (BrokenPipeError, ConnectionResetError):
                log.info("stream client disconnected after %d frames", sent)
        return sent


def consume_stream(endpoint: str, on_dropout=None, connect_timeout: float = 5.0,
                   ) -> Iterator[EmgFrame]:
    """Yield frames from a serving endpoint until the stream ends.

    A gap in sample indices is reported through `on_dropout` (if given) and
    the stream continues. Connection loss after the last full frame ends the
    iterator normally; it never stalls silently.
    """
    host, port = parse_endpoint(endpoint)
    sock = socket.create_connection((host, port), timeout=connect_timeout)
    sock.settimeout(None)
    parser = FrameParser()
    expected = None
    try:
        while True:
            try:
                data = sock.recv(1 << 16)
            except ConnectionResetError:
                log.info("producer died; stream ended after last full frame")
                break
            if not data:
                break
            for frame in parser.feed(data):
                if expected is not None and frame.sample_index != expected:
                    drop = Dropout(expected, frame.sample_index)
                    log.warning("dropout: expected sample %d got %d", expected, frame.sample_index)
                    if on_dropout is not None:
                        on_dropout(drop)
                expected = frame.sample_index + frame.n_samples
                yield frame
        if parser.pending_bytes:
            log.warning("stream ended mid-frame; %d bytes discarded", parser.pending_bytes)
    finally:
        sock.close()
