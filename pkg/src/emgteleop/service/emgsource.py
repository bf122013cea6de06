"""Live EMG ingestion: TCP frames -> filters -> windows -> classifier.

A reader thread consumes the 4 kHz frame stream, runs the filter chain and
the fixed-grid windower, and classifies every valid window into per-arm
probability vectors. The session engine samples the newest result at its
own 40 ms push cadence (`take`), so a fast producer never queues stale
windows and a stalled one simply stops feeding the intent filter — the
command emitter's 500 ms watchdog then drops the robot to rest.

Only the arms that have a model file classify; the probability vectors are
re-ordered to the intent filter's gesture vocabulary up front so a model
trained with a different label order cannot silently shuffle actions.
"""

from __future__ import annotations

import threading

import numpy as np

from ..dsp import FilterChain, StreamingWindower, rms_heatmap
from ..ml.model import predict
from ..stream.layout import DEFAULT_LAYOUT
from ..stream.net import consume_stream
from .config import ConfigError

TOTAL_CHANNELS = 256


class EmgGestureSource:
    """Background classifier for a live frame stream."""

    def __init__(self, endpoint: str, models: dict, vocab: dict,
                 layout=DEFAULT_LAYOUT):
        if not models:
            raise ConfigError("an EMG endpoint needs at least one model file")
        self.endpoint = endpoint
        self.layout = layout
        self.models = {}
        self._reorder = {}
        for arm, (net, header) in models.items():
            trained = list(header.get("gestures", []))
            wanted = list(vocab[arm])
            if sorted(trained) != sorted(wanted):
                raise ConfigError(
                    f"{arm} model gestures {trained} do not match the "
                    f"intent vocabulary {wanted}")
            if header.get("arm") not in (None, arm):
                raise ConfigError(
                    f"model for the {arm} arm was trained as "
                    f"{header['arm']!r}")
            self.models[arm] = net
            self._reorder[arm] = [trained.index(g) for g in wanted]

        self._lock = threading.Lock()
        self._latest: dict | None = None   # arm -> (probs, heatmap grid)
        self.windows = 0
        self.dropouts = 0
        self.error: str | None = None
        self._done = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True,
                                        name="emg-source")

    def start(self) -> "EmgGestureSource":
        self._thread.start()
        return self

    # ------------------------------------------------------------- engine side

    def take(self) -> dict | None:
        """Newest unseen classification per arm, or None. Latest wins: a
        producer running ahead of the session clock overwrites, it never
        queues."""
        with self._lock:
            out, self._latest = self._latest, None
        return out

    def finished(self) -> bool:
        return self._done.is_set()

    def join(self, timeout: float | None = None):
        self._thread.join(timeout)

    # ------------------------------------------------------------- reader

    def _run(self):
        filters = FilterChain(TOTAL_CHANNELS)
        windower = StreamingWindower(TOTAL_CHANNELS)
        try:
            for frame in consume_stream(self.endpoint,
                                        on_dropout=self._on_dropout):
                block = filters.process(frame.microvolts())
                for window in windower.feed(frame.sample_index, block):
                    if not window.valid:
                        continue
                    self._classify(window)
        except (OSError, ValueError) as err:
            self.error = str(err)
        finally:
            self._done.set()

    def _on_dropout(self, drop):
        self.dropouts += 1

    def _classify(self, window):
        result = {}
        for arm, net in self.models.items():
            grid = rms_heatmap(window, arm, self.layout)
            probs = predict(net, grid)[self._reorder[arm]]
            result[arm] = (np.asarray(probs, dtype=np.float64), grid)
        self.windows += 1
        with self._lock:
            self._latest = result
