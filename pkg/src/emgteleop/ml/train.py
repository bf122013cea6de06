"""Training and evaluation of the gesture CNN.

Adam at 1e-3, batch 64, exactly 3 epochs; a checkpoint is kept after every
epoch and the one with the lowest validation cross-entropy is returned.
Fully deterministic for a given seed on CPU.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from emgteleop.ml.data import DatasetSplit, GestureDataset
from emgteleop.ml.model import GestureNet


class TrainingError(RuntimeError):
    def __init__(self, message: str, epoch: int):
        super().__init__(f"{message} (epoch {epoch})")
        self.epoch = epoch


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray         # row-normalized, rows = true class
    confusion_counts: np.ndarray
    n: int

    def to_json(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "n": self.n,
            "confusion": self.confusion.tolist(),
            "confusion_counts": self.confusion_counts.tolist(),
        }


@dataclass
class TrainingReport:
    gestures: tuple
    arm: str
    seed: int
    epochs: list = field(default_factory=list)  # per-epoch {train_loss, val_loss}
    selected_epoch: int = -1
    train_accuracy: float = 0.0
    val_accuracy: float = 0.0
    test_accuracy: float | None = None
    test_confusion: list | None = None

    def to_json(self) -> dict:
        return {
            "gestures": list(self.gestures),
            "arm": self.arm,
            "seed": self.seed,
            "epochs": self.epochs,
            "selected_epoch": self.selected_epoch,
            "train_accuracy": self.train_accuracy,
            "val_accuracy": self.val_accuracy,
            "test_accuracy": self.test_accuracy,
            "test_confusion": self.test_confusion,
        }


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for i in range(0, n, batch_size):
        yield order[i : i + batch_size]


def _mean_loss(model: GestureNet, X: torch.Tensor, y: torch.Tensor,
               batch_size: int = 512) -> float:
    loss_fn = nn.CrossEntropyLoss(reduction="sum")
    model.eval()
    total = 0.0
    with torch.no_grad():
        for i in range(0, len(y), batch_size):
            total += loss_fn(model(X[i : i + batch_size]), y[i : i + batch_size]).item()
    return total / len(y)


def _to_tensors(ds: GestureDataset) -> tuple[torch.Tensor, torch.Tensor]:
    return torch.from_numpy(ds.X).unsqueeze(1), torch.from_numpy(ds.y)


def train(split: DatasetSplit, epochs: int = 3, seed: int = 0, batch_size: int = 64,
          lr: float = 1e-3) -> tuple[GestureNet, TrainingReport]:
    if len(split.train) == 0 or len(split.val) == 0:
        raise ValueError("train and val splits must be nonempty")
    torch.manual_seed(seed)
    torch.set_num_threads(1)
    rng = np.random.default_rng(seed)

    n_classes = len(split.train.gestures)
    model = GestureNet(n_classes)
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    loss_fn = nn.CrossEntropyLoss()

    Xtr, ytr = _to_tensors(split.train)
    Xva, yva = _to_tensors(split.val)

    report = TrainingReport(split.train.gestures, split.train.arm, seed)
    checkpoints = []
    for epoch in range(epochs):
        model.train()
        running, seen = 0.0, 0
        for idx in _batches(len(ytr), batch_size, rng):
            bi = torch.from_numpy(idx)
            opt.zero_grad()
            loss = loss_fn(model(Xtr[bi]), ytr[bi])
            if not math.isfinite(loss.item()):
                raise TrainingError("training loss diverged", epoch)
            loss.backward()
            opt.step()
            running += loss.item() * len(idx)
            seen += len(idx)
        val_loss = _mean_loss(model, Xva, yva)
        if not math.isfinite(val_loss):
            raise TrainingError("validation loss diverged", epoch)
        report.epochs.append({"train_loss": running / seen, "val_loss": val_loss})
        checkpoints.append(copy.deepcopy(model.state_dict()))

    best = int(np.argmin([e["val_loss"] for e in report.epochs]))
    report.selected_epoch = best
    model.load_state_dict(checkpoints[best])
    model.eval()

    report.train_accuracy = evaluate(model, split.train).accuracy
    report.val_accuracy = evaluate(model, split.val).accuracy
    if len(split.test):
        test = evaluate(model, split.test)
        report.test_accuracy = test.accuracy
        report.test_confusion = test.confusion.tolist()
    return model, report


def evaluate(model: GestureNet, ds: GestureDataset, batch_size: int = 512) -> EvalResult:
    if len(ds) == 0:
        raise ValueError("cannot evaluate an empty split")
    X, y = _to_tensors(ds)
    n_classes = len(ds.gestures)
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    model.eval()
    with torch.no_grad():
        for i in range(0, len(y), batch_size):
            pred = model(X[i : i + batch_size]).argmax(dim=1).numpy()
            true = y[i : i + batch_size].numpy()
            np.add.at(counts, (true, pred), 1)
    row = counts.sum(axis=1, keepdims=True)
    confusion = np.divide(counts, row, out=np.zeros_like(counts, dtype=np.float64),
                          where=row > 0)
    accuracy = float(np.trace(counts)) / float(counts.sum())
    return EvalResult(accuracy, confusion, counts, int(counts.sum()))
