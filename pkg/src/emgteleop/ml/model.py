"""The per-arm gesture CNN and its on-disk format.

Two 3x3 conv layers of 128 filters with batch norm and ReLU, flatten, a
128-unit fully connected layer with ReLU, and a linear head over the
gesture set. Input is a single 8x16 RMS heatmap in raw microvolts.

Model files are a versioned binary: magic, JSON architecture descriptor,
then the parameter tensors as little-endian raw bytes in descriptor order.
"""

from __future__ import annotations

import json
import struct

import numpy as np
import torch
from torch import nn

GRID_SHAPE = (8, 16)

MODEL_MAGIC = b"EMGM"
MODEL_VERSION = 1

_DTYPES = {"float32": "<f4", "int64": "<i8"}


class ModelFormatError(ValueError):
    pass


class GestureNet(nn.Module):
    def __init__(self, n_classes: int):
        super().__init__()
        self.n_classes = n_classes
        self.conv1 = nn.Conv2d(1, 128, kernel_size=3, padding=1)
        self.bn1 = nn.BatchNorm2d(128)
        self.conv2 = nn.Conv2d(128, 128, kernel_size=3, padding=1)
        self.bn2 = nn.BatchNorm2d(128)
        self.fc1 = nn.Linear(128 * GRID_SHAPE[0] * GRID_SHAPE[1], 128)
        self.head = nn.Linear(128, n_classes)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = torch.relu(self.bn1(self.conv1(x)))
        x = torch.relu(self.bn2(self.conv2(x)))
        x = torch.flatten(x, 1)
        x = torch.relu(self.fc1(x))
        return self.head(x)


def predict(model: GestureNet, heatmap: np.ndarray) -> np.ndarray:
    """Probability vector over the model's gesture set for one 8x16 heatmap."""
    hm = np.asarray(heatmap, dtype=np.float32)
    if hm.shape != GRID_SHAPE:
        raise ValueError(f"heatmap must be {GRID_SHAPE}, got {hm.shape}")
    return predict_batch(model, hm[None])[0]


def predict_batch(model: GestureNet, heatmaps: np.ndarray) -> np.ndarray:
    hm = np.asarray(heatmaps, dtype=np.float32)
    if hm.ndim != 3 or hm.shape[1:] != GRID_SHAPE:
        raise ValueError(f"heatmaps must be (n, 8, 16), got {hm.shape}")
    model.eval()
    with torch.no_grad():
        logits = model(torch.from_numpy(hm).unsqueeze(1))
        probs = torch.softmax(logits, dim=1)
    return probs.numpy()


def save_model(model: GestureNet, path, gestures, arm: str, meta: dict | None = None):
    state = model.state_dict()
    tensors = []
    blobs = []
    for name, t in state.items():
        arr = t.detach().cpu().numpy()
        if arr.dtype == np.float32 or arr.dtype == np.float64:
            arr = arr.astype("<f4")
            dtype = "float32"
        elif arr.dtype == np.int64:
            arr = arr.astype("<i8")
            dtype = "int64"
        else:
            raise ModelFormatError(f"unsupported tensor dtype {arr.dtype} for {name}")
        tensors.append({"name": name, "shape": list(arr.shape), "dtype": dtype})
        blobs.append(arr.tobytes())
    header = {
        "arch": "gesture-cnn",
        "n_classes": model.n_classes,
        "input": list(GRID_SHAPE),
        "gestures": list(gestures),
        "arm": arm,
        "tensors": tensors,
    }
    if meta:
        header["meta"] = meta
    header_bytes = json.dumps(header).encode()
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<II", MODEL_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        for blob in blobs:
            fh.write(blob)


def load_model(path) -> tuple[GestureNet, dict]:
    """Returns (model in eval mode, header dict)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MODEL_MAGIC:
            raise ModelFormatError(f"bad model magic {magic!r}")
        version, header_len = struct.unpack("<II", fh.read(8))
        if version != MODEL_VERSION:
            raise ModelFormatError(f"unsupported model version {version}")
        header = json.loads(fh.read(header_len))
        state = {}
        for spec in header["tensors"]:
            np_dtype = np.dtype(_DTYPES[spec["dtype"]])
            count = int(np.prod(spec["shape"])) if spec["shape"] else 1
            raw = fh.read(count * np_dtype.itemsize)
            if len(raw) != count * np_dtype.itemsize:
                raise ModelFormatError(f"truncated tensor {spec['name']}")
            arr = np.frombuffer(raw, dtype=np_dtype).reshape(spec["shape"]).copy()
            state[spec["name"]] = torch.from_numpy(arr)
    model = GestureNet(header["n_classes"])
    model.load_state_dict(state)
    model.eval()
    return model, header
