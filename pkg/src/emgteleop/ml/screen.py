"""Gesture screening by cosine similarity of mean activation heatmaps.

Used to pick a personalized, mutually separable gesture subset out of a
candidate vocabulary before committing to a control set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Candidate vocabulary for a screening session.
SCREENING_GESTURES = (
    "wrist_adduction",
    "wrist_abduction",
    "wrist_flexion",
    "wrist_extension",
    "finger_extension",
    "power_grip",
    "rest",
    "wrist_pronation",
    "wrist_supination",
    "tripod_grip",
    "thumb_index_middle_extension",
    "thumb_index_extension",
    "thumb_flexion",
    "thumb_extension",
    "ring_flexion",
    "ring_extension",
    "pinky_flexion",
    "pinky_extension",
    "middle_flexion",
    "middle_extension",
    "index_middle_extension",
    "index_flexion",
    "index_extension",
)


class ScreeningError(ValueError):
    pass


@dataclass
class ScreeningResult:
    labels: tuple[str, ...]
    matrix: np.ndarray       # pairwise cosine similarity, symmetric, unit diagonal
    selected: tuple[str, ...]
    threshold: float

    def similarity(self, a: str, b: str) -> float:
        return float(self.matrix[self.labels.index(a), self.labels.index(b)])


def similarity_matrix(means: dict[str, np.ndarray]) -> tuple[tuple[str, ...], np.ndarray]:
    """Pairwise cosine similarity of mean heatmaps, labels in insertion order."""
    labels = tuple(means)
    if len(labels) < 2:
        raise ScreeningError("need at least two gestures to screen")
    vecs = []
    for g in labels:
        v = np.asarray(means[g], dtype=np.float64).ravel()
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ScreeningError(f"zero-vector mean heatmap for gesture {g!r}")
        vecs.append(v / norm)
    V = np.stack(vecs)
    S = V @ V.T
    np.fill_diagonal(S, 1.0)
    return labels, S


def screen_gestures(means: dict[str, np.ndarray], threshold: float) -> ScreeningResult:
    """Greedy separability selection.

    Repeatedly admit the candidate whose maximum similarity to the admitted
    set is smallest; stop when the next admission would exceed the threshold.
    The first admission is the gesture with the smallest maximum similarity
    to all others. Ties break toward earlier label order.
    """
    labels, S = similarity_matrix(means)
    n = len(labels)
    remaining = list(range(n))

    off_diag_max = [max(S[i, j] for j in range(n) if j != i) for i in range(n)]
    first = min(remaining, key=lambda i: (off_diag_max[i], i))
    admitted = [first]
    remaining.remove(first)

    while remaining:
        best = min(remaining, key=lambda i: (max(S[i, j] for j in admitted), i))
        if max(S[best, j] for j in admitted) > threshold:
            break
        admitted.append(best)
        remaining.remove(best)

    selected = tuple(labels[i] for i in sorted(admitted))
    return ScreeningResult(labels, S, selected, threshold)
