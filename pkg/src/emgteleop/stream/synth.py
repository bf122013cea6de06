"""Synthetic bimanual EMG source.

Models residual forearm activity as template-shaped, effort-scaled
band-limited noise (20-450 Hz) with the nuisance terms a real rig sees:
powerline interference, slow baseline drift, and per-channel DC offset.
Deterministic for a given seed regardless of how the stream is consumed;
noise is always drawn in fixed 4000-sample blocks internally.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy import signal

from emgteleop.stream.frames import (
    EmgFrame,
    SAMPLE_RATE_HZ,
    SAMPLES_PER_FRAME,
    UV_PER_LSB,
)
from emgteleop.stream.layout import GRID_COLS, GRID_ROWS, N_CHANNELS

_CHUNK = 4000  # internal generation block, samples


class ScheduleError(ValueError):
    pass


@dataclass
class GestureProfile:
    """Spatial activation templates for one gesture, unit max per arm."""

    gesture_id: str
    left_template: np.ndarray  # (8, 16) nonnegative, max 1.0 (all zero for rest)
    right_template: np.ndarray
    base_amplitude_uv: float = 120.0

    def __post_init__(self):
        for name in ("left_template", "right_template"):
            t = np.asarray(getattr(self, name), dtype=np.float64)
            if t.shape != (GRID_ROWS, GRID_COLS):
                raise ValueError(f"{name} must be {GRID_ROWS}x{GRID_COLS}")
            if t.min() < 0:
                raise ValueError(f"{name} must be nonnegative")
            peak = t.max()
            if peak > 0 and abs(peak - 1.0) > 1e-9:
                raise ValueError(f"{name} must have unit max (got {peak})")
            setattr(self, name, t)

    def flat256(self) -> np.ndarray:
        """Row-major left channels then right channels, scaled by base amplitude."""
        return self.base_amplitude_uv * np.concatenate(
            [self.left_template.ravel(), self.right_template.ravel()]
        )


@dataclass
class ScheduleEntry:
    gesture: str
    duration_s: float
    effort: float = 0.0  # fraction of MVC, 0..1


@dataclass
class NoiseSpec:
    floor_uv: float = 2.0          # resting noise amplitude (RMS per channel)
    powerline_uv: float = 20.0     # 60 Hz interference amplitude
    powerline_hz: float = 60.0
    drift_uv: float = 150.0        # slow baseline wander amplitude
    dc_uv: float = 500.0           # per-channel constant offset, uniform +-dc
    band_hz: tuple[float, float] = (20.0, 450.0)
    onset_delay_s: float = 0.25    # reaction time before effort ramps
    ramp_s: float = 0.15


def _bump(center_row: float, center_col: float, sr: float = 1.5, sc: float = 2.5) -> np.ndarray:
    r = np.arange(GRID_ROWS)[:, None]
    c = np.arange(GRID_COLS)[None, :]
    t = np.exp(-0.5 * (((r - center_row) / sr) ** 2 + ((c - center_col) / sc) ** 2))
    return t / t.max()


def default_profiles() -> dict[str, GestureProfile]:
    """Five-gesture vocabulary with spatially separated activation bumps."""
    centers = {
        "wrist_forward": (2.5, 4.0),
        "wrist_back": (5.5, 11.0),
        "wrist_supination": (1.5, 11.0),
        "wrist_pronation": (6.0, 4.0),
    }
    profiles = {
        "rest": GestureProfile(
            "rest", np.zeros((GRID_ROWS, GRID_COLS)), np.zeros((GRID_ROWS, GRID_COLS))
        )
    }
    for gid, (cr, cc) in centers.items():
        bump = _bump(cr, cc)
        profiles[gid] = GestureProfile(gid, bump, bump.copy())
    return profiles


def _filter_unit_gain(b: np.ndarray, a: np.ndarray, n: int = 8192) -> float:
    """RMS gain of the filter for unit-variance white input."""
    impulse = np.zeros(n)
    impulse[0] = 1.0
    h = signal.lfilter(b, a, impulse)
    return float(np.sqrt(np.sum(h * h)))


class SyntheticEmg:
    """Deterministic 256-channel EMG sample stream following a gesture schedule."""

    def __init__(
        self,
        profiles: dict[str, GestureProfile],
        schedule: Sequence[ScheduleEntry],
        noise: NoiseSpec | None = None,
        seed: int = 0,
        session_id: int = 1,
    ):
        self.noise = noise or NoiseSpec()
        self.session_id = session_id
        self.fs = SAMPLE_RATE_HZ
        for entry in schedule:
            if entry.gesture not in profiles:
                raise ScheduleError(f"unknown gesture id {entry.gesture!r} in schedule")
        self.gestures = sorted(profiles)
        self.templates = np.stack([profiles[g].flat256() for g in self.gestures])
        self.n_samples = int(round(sum(e.duration_s for e in schedule) * self.fs))

        self._rng = np.random.default_rng(seed)
        self._build_envelopes(schedule)
        self._init_nuisance()

        low, high = self.noise.band_hz
        self._b, self._a = signal.butter(4, [low, high], btype="bandpass", fs=self.fs)
        self._zi = np.zeros((len(self._a) - 1, N_CHANNELS))
        self._gain = _filter_unit_gain(self._b, self._a)
        self._cursor = 0

    def _build_envelopes(self, schedule: Sequence[ScheduleEntry]):
        """Per-sample effort envelopes: the new gesture ramps in after a reaction
        delay while the previous one ramps out, so holds have realistic onsets."""
        n = self.n_samples
        fs = self.fs
        rise = np.zeros(n, dtype=np.float32)
        decay = np.zeros(n, dtype=np.float32)
        cur = np.zeros(n, dtype=np.int16)
        prev = np.zeros(n, dtype=np.int16)
        delay = int(round(self.noise.onset_delay_s * fs))
        ramp = max(1, int(round(self.noise.ramp_s * fs)))

        t0 = 0
        prev_gesture = None
        prev_effort = 0.0
        for entry in schedule:
            length = int(round(entry.duration_s * fs))
            t1 = min(n, t0 + length)
            seg = np.arange(t1 - t0)
            gi = self.gestures.index(entry.gesture)
            if prev_gesture == entry.gesture or prev_gesture is None:
                # same source: ramp directly between effort levels, no dip
                e = prev_effort + (entry.effort - prev_effort) * np.clip(seg / ramp, 0, 1)
                rise[t0:t1] = e
                cur[t0:t1] = gi
                decay[t0:t1] = 0.0
                prev[t0:t1] = gi
            else:
                r = np.clip((seg - delay) / ramp, 0, 1) * entry.effort
                d = prev_effort * (1.0 - np.clip(seg / ramp, 0, 1))
                rise[t0:t1] = r
                decay[t0:t1] = d
                cur[t0:t1] = gi
                prev[t0:t1] = self.gestures.index(prev_gesture)
            prev_gesture = entry.gesture
            prev_effort = entry.effort
            t0 = t1
        self._rise, self._decay, self._cur, self._prev = rise, decay, cur, prev

    def _init_nuisance(self):
        rng = self._rng
        self._g60 = rng.uniform(0.8, 1.2, N_CHANNELS)
        self._phi60 = rng.uniform(0, 2 * np.pi)
        self._drift_f = rng.uniform(0.05, 0.4, 2)
        self._drift_phi = rng.uniform(0, 2 * np.pi, 2)
        self._drift_g = rng.uniform(0.3, 1.0, (2, N_CHANNELS))
        self._dc = rng.uniform(-self.noise.dc_uv, self.noise.dc_uv, N_CHANNELS)

    def _chunk_uv(self, start: int, stop: int) -> np.ndarray:
        """Microvolt samples for [start, stop), stop-start <= _CHUNK."""
        ns = self.noise
        n = stop - start
        amp = (
            self._rise[start:stop, None] * self.templates[self._cur[start:stop]]
            + self._decay[start:stop, None] * self.templates[self._prev[start:stop]]
            + ns.floor_uv
        )
        white = self._rng.standard_normal((n, N_CHANNELS))
        band, self._zi = signal.lfilter(self._b, self._a, white, axis=0, zi=self._zi)
        x = amp * (band / self._gain)
        t = (start + np.arange(n)) / self.fs
        if ns.powerline_uv > 0:
            line = ns.powerline_uv * np.sin(2 * np.pi * ns.powerline_hz * t + self._phi60)
            x += line[:, None] * self._g60[None, :]
        if ns.drift_uv > 0:
            for k in range(2):
                wave = np.sin(2 * np.pi * self._drift_f[k] * t + self._drift_phi[k])
                x += ns.drift_uv * wave[:, None] * self._drift_g[k][None, :]
        x += self._dc[None, :]
        return x

    def samples_uv(self) -> Iterator[tuple[int, np.ndarray]]:
        """Yield (start_sample_index, microvolt block) in fixed generation blocks."""
        pos = 0
        while pos < self.n_samples:
            stop = min(pos + _CHUNK, self.n_samples)
            yield pos, self._chunk_uv(pos, stop)
            pos = stop

    def frames(self) -> Iterator[EmgFrame]:
        """Yield 40-sample frames quantized to int16 raw counts."""
        leftover = None
        leftover_index = 0
        for start, block in self.samples_uv():
            raw = np.clip(np.round(block / UV_PER_LSB), -32768, 32767).astype(np.int16)
            if leftover is not None:
                raw = np.vstack([leftover, raw])
                start = leftover_index
                leftover = None
            n_full = (raw.shape[0] // SAMPLES_PER_FRAME) * SAMPLES_PER_FRAME
            for i in range(0, n_full, SAMPLES_PER_FRAME):
                yield EmgFrame(self.session_id, start + i, raw[i : i + SAMPLES_PER_FRAME])
            if n_full < raw.shape[0]:
                leftover = raw[n_full:]
                leftover_index = start + n_full
        # trailing partial block shorter than a frame is dropped

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.fs
