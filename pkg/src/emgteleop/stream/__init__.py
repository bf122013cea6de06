"""EMG sample streams: sleeve layout, wire framing, synthesis, transport, recording."""

from emgteleop.stream.layout import SleeveLayout, LEFT, RIGHT, N_CHANNELS, GRID_ROWS, GRID_COLS
from emgteleop.stream.frames import (
    EmgFrame,
    FrameError,
    IncompleteFrame,
    FrameParser,
    encode_frame,
    decode_frame,
    FRAME_MAGIC,
    HEADER_SIZE,
    SAMPLES_PER_FRAME,
    SAMPLE_RATE_HZ,
    UV_PER_LSB,
    SessionWriter,
    playback,
    record_session,
    read_session_header,
)
from emgteleop.stream.synth import (
    GestureProfile,
    ScheduleEntry,
    NoiseSpec,
    SyntheticEmg,
    default_profiles,
    ScheduleError,
)
from emgteleop.stream.net import serve_stream, consume_stream, Dropout
