"""Wire framing and session recording for raw EMG streams.

Frame layout, all little-endian:

    magic        u32   0x454D47F0
    session_id   u32
    sample_index u64   index of the frame's first sample since session start
    n_channels   u16   always 256
    n_samples    u16   40 per frame (10 ms at 4 kHz)
    payload      i16 x n_samples x n_channels, sample-major
                 (channels 0-127 left arm, 128-255 right arm, row-major grid order)

Raw counts convert to microvolts at 0.195 uV/LSB. A session file is one
JSON header line followed by the encoded frames back to back.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from emgteleop.stream.layout import N_CHANNELS

FRAME_MAGIC = 0x454D47F0
HEADER_STRUCT = struct.Struct("<IIQHH")
HEADER_SIZE = HEADER_STRUCT.size  # 20 bytes
SAMPLES_PER_FRAME = 40
SAMPLE_RATE_HZ = 4000
FRAME_PERIOD_S = SAMPLES_PER_FRAME / SAMPLE_RATE_HZ  # 10 ms
UV_PER_LSB = 0.195

SESSION_FILE_MAGIC = "emg-session"


class FrameError(ValueError):
    """Malformed frame bytes. Carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (byte offset {offset})")
        self.reason = message
        self.offset = offset


class IncompleteFrame(FrameError):
    """Buffer ends before the frame does; more bytes may still arrive."""


@dataclass
class EmgFrame:
    session_id: int
    sample_index: int
    samples: np.ndarray  # (n_samples, 256) int16 raw counts

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.int16)
        if self.samples.ndim != 2 or self.samples.shape[1] != N_CHANNELS:
            raise ValueError(f"samples must be (n, {N_CHANNELS}), got {self.samples.shape}")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    def microvolts(self) -> np.ndarray:
        return self.samples.astype(np.float64) * UV_PER_LSB

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, EmgFrame)
            and self.session_id == other.session_id
            and self.sample_index == other.sample_index
            and np.array_equal(self.samples, other.samples)
        )


def encode_frame(frame: EmgFrame) -> bytes:
    header = HEADER_STRUCT.pack(
        FRAME_MAGIC, frame.session_id, frame.sample_index, N_CHANNELS, frame.n_samples
    )
    payload = np.ascontiguousarray(frame.samples, dtype="<i2").tobytes()
    return header + payload


def decode_frame(buf: bytes | memoryview, offset: int = 0) -> tuple[EmgFrame, int]:
    """Decode one frame starting at `offset`. Returns (frame, bytes consumed)."""
    view = memoryview(buf)[offset:]
    if len(view) < HEADER_SIZE:
        raise IncompleteFrame("buffer shorter than frame header", offset)
    magic, session_id, sample_index, n_channels, n_samples = HEADER_STRUCT.unpack_from(view, 0)
    if magic != FRAME_MAGIC:
        raise FrameError(f"bad magic 0x{magic:08X}", offset)
    if n_channels != N_CHANNELS:
        raise FrameError(f"n_channels {n_channels} != {N_CHANNELS}", offset + 16)
    payload_len = 2 * n_samples * n_channels
    if len(view) < HEADER_SIZE + payload_len:
        raise IncompleteFrame("buffer truncated mid-payload", offset + HEADER_SIZE)
    samples = np.frombuffer(view, dtype="<i2", count=n_samples * n_channels, offset=HEADER_SIZE)
    frame = EmgFrame(session_id, sample_index, samples.reshape(n_samples, n_channels).copy())
    return frame, HEADER_SIZE + payload_len


def frame_size(n_samples: int = SAMPLES_PER_FRAME) -> int:
    return HEADER_SIZE + 2 * n_samples * N_CHANNELS


class FrameParser:
    """Incremental parser for a byte stream of concatenated frames."""

    def __init__(self):
        self._buf = bytearray()
        self.bytes_consumed = 0

    def feed(self, data: bytes) -> Iterator[EmgFrame]:
        """Yield the complete frames now available; frames already yielded are
        committed, so corruption raises exactly at the offending frame."""
        self._buf.extend(data)
        while True:
            try:
                frame, used = decode_frame(self._buf)
            except IncompleteFrame:
                return  # wait for more bytes
            except FrameError as err:
                raise FrameError(err.reason, self.bytes_consumed + err.offset) from None
            del self._buf[:used]
            self.bytes_consumed += used
            yield frame

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)


class SessionWriter:
    """Writes a session file: JSON header line, then raw frames."""

    def __init__(self, path, session_id: int, schedule=None, meta: dict | None = None):
        self._fh = open(path, "wb")
        header = {
            "magic": SESSION_FILE_MAGIC,
            "version": 1,
            "session_id": session_id,
            "fs": SAMPLE_RATE_HZ,
            "start_time": time.time(),
            "schedule": schedule or [],
        }
        if meta:
            header.update(meta)
        self._fh.write(json.dumps(header).encode() + b"\n")
        self.header = header

    def write(self, frame: EmgFrame):
        self._fh.write(encode_frame(frame))

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def record_session(frames: Iterable[EmgFrame], path, session_id: int | None = None,
                   schedule=None, meta: dict | None = None) -> int:
    """Record a frame sequence to `path`. Returns the number of frames written."""
    frames = iter(frames)
    first = next(frames, None)
    sid = session_id if session_id is not None else (first.session_id if first else 0)
    n = 0
    with SessionWriter(path, sid, schedule=schedule, meta=meta) as w:
        if first is not None:
            w.write(first)
            n = 1
        for frame in frames:
            w.write(frame)
            n += 1
    return n


def read_session_header(path) -> dict:
    with open(path, "rb") as fh:
        line = fh.readline()
    header = json.loads(line)
    if header.get("magic") != SESSION_FILE_MAGIC:
        raise FrameError("not a session file: bad header magic")
    return header


def playback(path) -> Iterator[EmgFrame]:
    """Yield the recorded frames byte-identically. Raises FrameError naming the
    first bad frame index on corruption."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        header = json.loads(header_line)
        if header.get("magic") != SESSION_FILE_MAGIC:
            raise FrameError("not a session file: bad header magic")
        parser = FrameParser()
        index = 0
        while True:
            chunk = fh.read(1 << 16)
            if not chunk:
                break
            try:
                for frame in parser.feed(chunk):
                    yield frame
                    index += 1
            except FrameError as err:
                raise FrameError(f"corrupt frame {index}: {err.reason}", err.offset) from None
        if parser.pending_bytes:
            raise FrameError(f"corrupt frame {index}: trailing partial frame",
                             parser.bytes_consumed)
