"""Raw EMG to calibrated RMS heatmaps.

Chain: 60 Hz notch (2nd-order IIR, Q=30) and 20 Hz high-pass (4th-order
Butterworth), both causal with per-channel state, then 80 ms windows with
a 40 ms stride, then per-channel RMS arranged on the 8x16 electrode grid.
MVC calibration uses the nearest-rank 90th percentile across the 128
per-channel RMS values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from scipy import signal

from emgteleop.stream.layout import (
    ARMS,
    CHANNELS_PER_ARM,
    DEFAULT_LAYOUT,
    GRID_COLS,
    GRID_ROWS,
    SleeveLayout,
)

SAMPLE_RATE_HZ = 4000
WINDOW_SAMPLES = 320   # 80 ms
WINDOW_STRIDE = 160    # 40 ms

HIGHPASS_HZ = 20.0
HIGHPASS_ORDER = 4
NOTCH_HZ = 60.0
NOTCH_Q = 30.0


class CalibrationError(ValueError):
    pass


def nearest_rank_percentile(values: np.ndarray, pct: float) -> float:
    """Nearest-rank percentile: the ceil(pct/100 * n)-th smallest value."""
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if v.size == 0:
        raise ValueError("empty value set")
    rank = max(1, math.ceil(pct / 100.0 * v.size))
    return float(v[rank - 1])


class FilterChain:
    """Causal notch + high-pass, independent state per channel.

    Stateless between `reset()` calls: the same input always produces the
    same output. Blocks are (n_samples, n_channels).
    """

    def __init__(self, n_channels: int, fs: float = SAMPLE_RATE_HZ):
        self.n_channels = n_channels
        self.fs = fs
        self._notch_b, self._notch_a = signal.iirnotch(NOTCH_HZ, NOTCH_Q, fs)
        self._hp_sos = signal.butter(HIGHPASS_ORDER, HIGHPASS_HZ, btype="highpass",
                                     output="sos", fs=fs)
        self.reset()

    def reset(self):
        self._notch_zi = np.zeros((len(self._notch_a) - 1, self.n_channels))
        self._hp_zi = np.zeros((self._hp_sos.shape[0], 2, self.n_channels))

    def process(self, block: np.ndarray) -> np.ndarray:
        block = np.asarray(block, dtype=np.float64)
        if block.ndim != 2 or block.shape[1] != self.n_channels:
            raise ValueError(f"expected (n, {self.n_channels}) block, got {block.shape}")
        y, self._notch_zi = signal.lfilter(self._notch_b, self._notch_a, block,
                                           axis=0, zi=self._notch_zi)
        y, self._hp_zi = signal.sosfilt(self._hp_sos, y, axis=0, zi=self._hp_zi)
        return y


@dataclass
class Window:
    """80 ms of filtered samples; invalid windows mark dropout spans."""

    start_index: int
    samples: np.ndarray | None  # (320, n_channels), None when invalid
    valid: bool = True


def window_count(n_samples: int) -> int:
    """Number of full 320-sample windows at stride 160 in n contiguous samples."""
    if n_samples < WINDOW_SAMPLES:
        return 0
    return (n_samples - WINDOW_SAMPLES) // WINDOW_STRIDE + 1


class StreamingWindower:
    """Assembles fixed-grid windows from contiguous sample blocks.

    Window k always spans samples [160k, 160k + 320) of the session, so a
    dropout never shifts the grid; windows overlapping a gap come out
    flagged invalid and carry no samples.
    """

    def __init__(self, n_channels: int):
        self.n_channels = n_channels
        self._buf = np.empty((0, n_channels))
        self._buf_start = 0
        self._next_k = 0
        self._expected = 0
        self.dropouts = 0

    def feed(self, start_index: int, block: np.ndarray) -> list[Window]:
        out: list[Window] = []
        if start_index != self._expected:
            if start_index < self._expected:
                raise ValueError("blocks must arrive in sample order")
            self.dropouts += 1
            while self._next_k * WINDOW_STRIDE < start_index:
                out.append(Window(self._next_k * WINDOW_STRIDE, None, valid=False))
                self._next_k += 1
            self._buf = np.empty((0, self.n_channels))
            self._buf_start = self._next_k * WINDOW_STRIDE
        block = np.asarray(block, dtype=np.float64)
        self._expected = start_index + block.shape[0]
        keep_from = max(0, self._buf_start - start_index)
        self._buf = np.vstack([self._buf, block[keep_from:]]) if self._buf.size else \
            block[keep_from:].copy()
        while True:
            w_start = self._next_k * WINDOW_STRIDE
            rel = w_start - self._buf_start
            if rel + WINDOW_SAMPLES > self._buf.shape[0]:
                break
            out.append(Window(w_start, self._buf[rel : rel + WINDOW_SAMPLES].copy()))
            self._next_k += 1
        # trim samples no future window needs
        trim = self._next_k * WINDOW_STRIDE - self._buf_start
        if trim > 0:
            self._buf = self._buf[trim:]
            self._buf_start += trim
        return out


def iter_windows(samples: np.ndarray) -> Iterator[Window]:
    """Window a complete in-memory (n, channels) array."""
    for k in range(window_count(samples.shape[0])):
        s = k * WINDOW_STRIDE
        yield Window(s, samples[s : s + WINDOW_SAMPLES])


def rms_heatmap(window: Window, arm: str, layout: SleeveLayout = DEFAULT_LAYOUT) -> np.ndarray:
    """Per-channel RMS of one arm's 128 channels arranged on the 8x16 grid, uV."""
    if not window.valid or window.samples is None:
        raise ValueError("cannot compute heatmap of an invalid window")
    arm_samples = window.samples[:, layout.arm_slice(arm)]
    return channel_rms_to_grid(np.sqrt(np.mean(arm_samples**2, axis=0)), layout)


def channel_rms_to_grid(rms: np.ndarray, layout: SleeveLayout = DEFAULT_LAYOUT) -> np.ndarray:
    grid = np.zeros((GRID_ROWS, GRID_COLS))
    for ch in range(CHANNELS_PER_ARM):
        r, c = layout.cell_of(ch)
        grid[r, c] = rms[ch]
    return grid


@dataclass
class CalibrationProfile:
    """Per-arm, per-gesture MVC reference amplitudes (uV)."""

    references: dict = field(default_factory=dict)  # (arm, gesture) -> float

    def set_reference(self, arm: str, gesture: str, value: float):
        self.references[(arm, gesture)] = float(value)

    def reference(self, arm: str, gesture: str) -> float:
        try:
            return self.references[(arm, gesture)]
        except KeyError:
            raise CalibrationError(f"no MVC reference for {arm}/{gesture}") from None

    def is_complete(self, arm: str, gestures) -> bool:
        return all((arm, g) in self.references for g in gestures)


def calibrate_mvc(recordings: dict, layout: SleeveLayout = DEFAULT_LAYOUT,
                  expected_gestures=None) -> CalibrationProfile:
    """Build a calibration profile from MVC attempt recordings.

    `recordings` maps (arm, gesture) to a filtered (n_samples, 128) array of
    that arm's channels during the attempt. The reference is the nearest-rank
    90th percentile of the 128 per-channel RMS values.
    """
    if expected_gestures is not None:
        for arm in ARMS:
            missing = [g for g in expected_gestures if (arm, g) not in recordings]
            if missing:
                raise CalibrationError(f"incomplete profile: missing {arm} MVC for {missing}")
    profile = CalibrationProfile()
    for (arm, gesture), samples in recordings.items():
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[1] != CHANNELS_PER_ARM:
            raise CalibrationError(f"MVC recording for {arm}/{gesture} must be (n, 128)")
        rms = np.sqrt(np.mean(samples**2, axis=0))
        if not np.any(rms > 0):
            raise CalibrationError(f"silent MVC recording for {arm}/{gesture}")
        profile.set_reference(arm, gesture, nearest_rank_percentile(rms, 90.0))
    return profile


def effort_fraction(heatmap: np.ndarray, profile: CalibrationProfile, arm: str,
                    gesture: str) -> float:
    """Activation level relative to the gesture's MVC reference.

    Drives the operator feedback bands (for example the 0.15-0.30 and
    0.20-0.40 target ranges during data collection).
    """
    ref = profile.reference(arm, gesture)
    if ref <= 0:
        raise CalibrationError(f"calibration required: zero reference for {arm}/{gesture}")
    return nearest_rank_percentile(np.asarray(heatmap), 90.0) / ref
