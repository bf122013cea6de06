import numpy as np
import pytest

from emgteleop.stream import (
    EmgFrame,
    FrameError,
    FrameParser,
    HEADER_SIZE,
    IncompleteFrame,
    decode_frame,
    encode_frame,
    playback,
    read_session_header,
    record_session,
)
from emgteleop.stream.frames import FRAME_MAGIC, HEADER_STRUCT


def make_frame(rng, sample_index=0, n=40, session_id=7):
    samples = rng.integers(-2000, 2000, size=(n, 256), dtype=np.int16)
    return EmgFrame(session_id, sample_index, samples)


def test_zero_frame_wire_size():
    f = EmgFrame(1, 0, np.zeros((40, 256), dtype=np.int16))
    buf = encode_frame(f)
    assert len(buf) == HEADER_SIZE + 20480
    assert buf[HEADER_SIZE:] == b"\x00" * 20480


def test_roundtrip_identity():
    rng = np.random.default_rng(42)
    f = make_frame(rng, sample_index=123456789)
    g, used = decode_frame(encode_frame(f))
    assert used == len(encode_frame(f))
    assert g == f
    assert g.samples.dtype == np.int16


def test_bad_magic_rejected():
    buf = bytearray(encode_frame(make_frame(np.random.default_rng(0))))
    buf[0] ^= 0xFF
    with pytest.raises(FrameError, match="magic"):
        decode_frame(bytes(buf))


def test_bad_channel_count_rejected():
    buf = HEADER_STRUCT.pack(FRAME_MAGIC, 1, 0, 64, 40) + b"\x00" * (2 * 40 * 64)
    with pytest.raises(FrameError, match="n_channels"):
        decode_frame(buf)


def test_truncated_payload():
    buf = encode_frame(make_frame(np.random.default_rng(1)))
    with pytest.raises(IncompleteFrame):
        decode_frame(buf[:-1])
    with pytest.raises(IncompleteFrame):
        decode_frame(buf[: HEADER_SIZE - 3])


def test_decode_at_offset():
    rng = np.random.default_rng(2)
    a, b = make_frame(rng, 0), make_frame(rng, 40)
    buf = encode_frame(a) + encode_frame(b)
    f0, used = decode_frame(buf, 0)
    f1, _ = decode_frame(buf, used)
    assert f0 == a and f1 == b


def test_parser_handles_arbitrary_chunking():
    rng = np.random.default_rng(3)
    frames = [make_frame(rng, 40 * i) for i in range(5)]
    stream = b"".join(encode_frame(f) for f in frames)
    parser = FrameParser()
    got = []
    # deliberately awkward chunk sizes
    for i in range(0, len(stream), 997):
        got.extend(parser.feed(stream[i : i + 997]))
    assert got == frames
    assert parser.pending_bytes == 0


def test_parser_reports_corruption_with_absolute_offset():
    rng = np.random.default_rng(4)
    good = encode_frame(make_frame(rng, 0))
    bad = bytearray(encode_frame(make_frame(rng, 40)))
    bad[0] ^= 0x01
    parser = FrameParser()
    assert len(list(parser.feed(good))) == 1
    with pytest.raises(FrameError) as exc:
        list(parser.feed(bytes(bad)))
    assert exc.value.offset == len(good)


def test_record_playback_identity(tmp_path):
    rng = np.random.default_rng(5)
    frames = [make_frame(rng, 40 * i, session_id=99) for i in range(20)]
    path = tmp_path / "session.emg"
    n = record_session(frames, path, schedule=[{"gesture": "rest", "duration_s": 0.2}])
    assert n == 20
    header = read_session_header(path)
    assert header["session_id"] == 99
    assert header["fs"] == 4000
    assert list(playback(path)) == frames


def test_playback_empty_session(tmp_path):
    path = tmp_path / "empty.emg"
    assert record_session([], path, session_id=1) == 0
    assert read_session_header(path)["session_id"] == 1
    assert list(playback(path)) == []


def test_playback_names_first_bad_frame(tmp_path):
    rng = np.random.default_rng(6)
    frames = [make_frame(rng, 40 * i) for i in range(4)]
    path = tmp_path / "corrupt.emg"
    record_session(frames, path)
    raw = bytearray(path.read_bytes())
    header_len = raw.index(b"\n") + 1
    frame_len = len(encode_frame(frames[0]))
    raw[header_len + 2 * frame_len] ^= 0xFF  # clobber magic of frame 2
    path.write_bytes(bytes(raw))
    with pytest.raises(FrameError, match="frame 2"):
        list(playback(path))


def test_playback_trailing_partial_frame(tmp_path):
    rng = np.random.default_rng(7)
    path = tmp_path / "torn.emg"
    record_session([make_frame(rng, 0)], path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-10])
    with pytest.raises(FrameError, match="partial"):
        list(playback(path))


def test_microvolt_scale():
    samples = np.zeros((40, 256), dtype=np.int16)
    samples[0, 0] = 1000
    f = EmgFrame(1, 0, samples)
    assert f.microvolts()[0, 0] == pytest.approx(195.0)
