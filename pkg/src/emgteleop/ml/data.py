"""Dataset assembly from cue-based collection sessions.

A session is a sequence of trials, each a 3 s visual cue (subject at rest)
followed by a 5 s hold of the cued gesture. Only windows fully inside the
final 4 s of each hold are labeled, which at 4 kHz comes to 99 windows per
trial. The held-out test set is the chronologically last 10% of trials per
gesture; the rest is shuffled 75/25 into train/val at trial granularity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from emgteleop import dsp
from emgteleop.stream.frames import EmgFrame, SAMPLE_RATE_HZ
from emgteleop.stream.layout import DEFAULT_LAYOUT, N_CHANNELS, SleeveLayout
from emgteleop.stream.synth import ScheduleEntry

LEFT_GESTURES = ("rest", "wrist_forward", "wrist_back", "wrist_supination",
                 "wrist_pronation")
RIGHT_GESTURES = ("rest", "wrist_back", "wrist_supination")

LABELED_TAIL_S = 4.0


class DatasetError(ValueError):
    pass


def _microvolt_blocks(frames, target_samples: int = 4000):
    """Coalesce an EmgFrame iterable into contiguous (start, uV block) chunks;
    (start, block) pairs pass through. Keeps per-block filter overhead low."""
    pend: list[np.ndarray] = []
    pend_start = 0
    pend_n = 0
    for item in frames:
        if not isinstance(item, EmgFrame):
            if pend:
                yield pend_start, np.vstack(pend)
                pend, pend_n = [], 0
            yield item
            continue
        if pend and pend_start + pend_n != item.sample_index:
            yield pend_start, np.vstack(pend)  # dropout: flush at the gap
            pend, pend_n = [], 0
        if not pend:
            pend_start = item.sample_index
        pend.append(item.microvolts())
        pend_n += item.n_samples
        if pend_n >= target_samples:
            yield pend_start, np.vstack(pend)
            pend, pend_n = [], 0
    if pend:
        yield pend_start, np.vstack(pend)


@dataclass
class Trial:
    gesture: str
    cue_s: float = 3.0
    hold_s: float = 5.0
    effort: float = 0.25

    @property
    def duration_s(self) -> float:
        return self.cue_s + self.hold_s


@dataclass
class CueSchedule:
    trials: list[Trial] = field(default_factory=list)

    @classmethod
    def standard_session(cls, gestures, sets: int = 5, reps: int = 3,
                         effort_band: tuple[float, float] = (0.15, 0.30),
                         seed: int = 0) -> "CueSchedule":
        """5 sets x 3 reps of each gesture; per-trial effort drawn from the band."""
        rng = np.random.default_rng(seed)
        trials = []
        for _ in range(sets):
            for g in gestures:
                for _ in range(reps):
                    effort = 0.0 if g == "rest" else float(rng.uniform(*effort_band))
                    trials.append(Trial(g, effort=effort))
        return cls(trials)

    @property
    def duration_s(self) -> float:
        return sum(t.duration_s for t in self.trials)

    def generator_entries(self) -> list[ScheduleEntry]:
        """Schedule for the synthetic source: rest during cues, gesture during holds."""
        entries = []
        for t in self.trials:
            entries.append(ScheduleEntry("rest", t.cue_s))
            entries.append(ScheduleEntry(t.gesture, t.hold_s, effort=t.effort))
        return entries

    def labeled_spans(self) -> list[tuple[int, str, int, int]]:
        """(trial_index, gesture, start_sample, end_sample) of each labeled tail."""
        spans = []
        pos = 0.0
        for i, t in enumerate(self.trials):
            hold_start = pos + t.cue_s
            tail_start = hold_start + t.hold_s - LABELED_TAIL_S
            s0 = int(round(tail_start * SAMPLE_RATE_HZ))
            s1 = int(round((hold_start + t.hold_s) * SAMPLE_RATE_HZ))
            spans.append((i, t.gesture, s0, s1))
            pos += t.duration_s
        return spans


@dataclass
class GestureDataset:
    X: np.ndarray          # (n, 8, 16) float32 heatmaps, uV
    y: np.ndarray          # (n,) int64 gesture indices
    trial_id: np.ndarray   # (n,) int64
    gestures: tuple[str, ...]
    arm: str

    def __len__(self) -> int:
        return len(self.y)


@dataclass
class DatasetSplit:
    train: GestureDataset
    val: GestureDataset
    test: GestureDataset


def build_dataset(frames, schedule: CueSchedule, arm: str, gestures=None,
                  layout: SleeveLayout = DEFAULT_LAYOUT) -> GestureDataset:
    """Filter, window, and label a recorded session for one arm.

    `frames` is any EmgFrame iterable (live playback or a generator). Windows
    sit on the session-wide 160-sample grid; a window is labeled when it lies
    fully inside a trial's final-4s span.
    """
    if gestures is None:
        gestures = LEFT_GESTURES if arm == "left" else RIGHT_GESTURES
    index = {g: i for i, g in enumerate(gestures)}
    spans = schedule.labeled_spans()
    for _, g, _, _ in spans:
        if g not in index:
            raise DatasetError(f"schedule gesture {g!r} not in vocabulary {gestures}")

    chain = dsp.FilterChain(N_CHANNELS)
    windower = dsp.StreamingWindower(N_CHANNELS)
    X, y, tid = [], [], []
    span_i = 0
    total = 0

    def take(window: dsp.Window):
        nonlocal span_i
        while span_i < len(spans) and window.start_index + dsp.WINDOW_SAMPLES > spans[span_i][3]:
            span_i += 1
        if span_i == len(spans):
            return
        t, g, s0, s1 = spans[span_i]
        if window.valid and window.start_index >= s0 and \
                window.start_index + dsp.WINDOW_SAMPLES <= s1:
            X.append(dsp.rms_heatmap(window, arm, layout))
            y.append(index[g])
            tid.append(t)

    for start, block in _microvolt_blocks(frames):
        total = max(total, start + block.shape[0])
        for w in windower.feed(start, chain.process(block)):
            take(w)

    expected_end = spans[-1][3] if spans else 0
    if total < expected_end:
        missing = [t for t, _, _, s1 in spans if s1 > total]
        raise DatasetError(
            f"recording ends at sample {total}, before trial {missing[0]}; "
            f"missing trials {missing}")
    return GestureDataset(
        X=np.asarray(X, dtype=np.float32),
        y=np.asarray(y, dtype=np.int64),
        trial_id=np.asarray(tid, dtype=np.int64),
        gestures=tuple(gestures),
        arm=arm,
    )


def subset(ds: GestureDataset, idx: np.ndarray) -> GestureDataset:
    return GestureDataset(ds.X[idx], ds.y[idx], ds.trial_id[idx], ds.gestures, ds.arm)


def split_dataset(ds: GestureDataset, seed: int = 0, min_trials: int = 10) -> DatasetSplit:
    """Chronological test tail per gesture, then seeded 75/25 train/val.

    Per gesture: the last ceil(0.10 n) trials (by trial id) go to test; the
    remainder is shuffled and the first ceil(0.75 m) trials train, rest
    validate. All assignment is at trial granularity.
    """
    rng = np.random.default_rng(seed)
    train_trials, val_trials, test_trials = [], [], []
    for gi in range(len(ds.gestures)):
        trials = np.unique(ds.trial_id[ds.y == gi])
        if len(trials) == 0:
            continue
        if len(trials) < min_trials:
            raise DatasetError(
                f"gesture {ds.gestures[gi]!r} has {len(trials)} trials; "
                f"need at least {min_trials} to split")
        n_test = math.ceil(0.10 * len(trials))
        test_trials.extend(trials[-n_test:])
        rest = trials[:-n_test].copy()
        rng.shuffle(rest)
        n_train = math.ceil(0.75 * len(rest))
        train_trials.extend(rest[:n_train])
        val_trials.extend(rest[n_train:])

    def pick(trials):
        mask = np.isin(ds.trial_id, trials)
        return subset(ds, np.where(mask)[0])

    return DatasetSplit(pick(train_trials), pick(val_trials), pick(test_trials))


def mean_heatmaps(ds: GestureDataset) -> dict[str, np.ndarray]:
    """Per-gesture mean heatmap, the screening representation."""
    out = {}
    for gi, g in enumerate(ds.gestures):
        mask = ds.y == gi
        if mask.any():
            out[g] = ds.X[mask].mean(axis=0)
    return out
