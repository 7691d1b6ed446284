"""Named-tensor checkpoint files.

Layout: an 8-byte little-endian header length, a UTF-8 JSON manifest, then a
raw blob of row-major little-endian float64 tensor data. The manifest lists
(name, shape, byte offset) per tensor plus optional optimizer scalars, under
a format version tag.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

FORMAT = "eventseg-checkpoint"
VERSION = 1


def save_tensors(path, tensors: dict[str, np.ndarray], scalars: dict | None = None):
    """Write named float64 tensors (and optional scalar state) to ``path``."""
    manifest = {"format": FORMAT, "version": VERSION, "tensors": [], "scalars": scalars or {}}
    blobs = []
    offset = 0
    for name, arr in tensors.items():
        data = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        manifest["tensors"].append(
            {"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(data)
        offset += len(data)
    header = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for b in blobs:
            fh.write(b)


def load_tensors(path) -> tuple[dict[str, np.ndarray], dict]:
    """Read a checkpoint back as ``(tensors, scalars)``."""
    raw = Path(path).read_bytes()
    (hlen,) = struct.unpack("<Q", raw[:8])
    manifest = json.loads(raw[8:8 + hlen].decode("utf-8"))
    if manifest.get("format") != FORMAT:
        raise ValueError(f"{path}: not an {FORMAT} file")
    if manifest.get("version") != VERSION:
        raise ValueError(f"{path}: unsupported version {manifest.get('version')}")
    blob = raw[8 + hlen:]
    tensors = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=start)
        tensors[entry["name"]] = arr.reshape(shape).astype(np.float64)
    return tensors, manifest.get("scalars", {})


def save_model(path, model, optimizer=None) -> None:
    """Checkpoint a model (anything exposing ``params()``) plus optimizer."""
    tensors = {p.name: p.values for p in model.params()}
    scalars = {}
    if optimizer is not None:
        tensors.update(optimizer.state_tensors())
        scalars["optimizer"] = optimizer.state_scalars()
    save_tensors(path, tensors, scalars)


def load_model(path, model, optimizer=None) -> None:
    """Restore parameters (and optimizer state when present) in place."""
    tensors, scalars = load_tensors(path)
    for p in model.params():
        if p.name not in tensors:
            raise KeyError(f"{path}: missing tensor {p.name}")
        if tuple(tensors[p.name].shape) != p.values.shape:
            raise ValueError(
                f"{path}: tensor {p.name} has shape {tensors[p.name].shape}, "
                f"model expects {p.values.shape}")
        p.values[...] = tensors[p.name]
        p.zero_grad()
    if optimizer is not None:
        opt_scalars = scalars.get("optimizer")
        if opt_scalars is None:
            raise KeyError(f"{path}: checkpoint carries no optimizer state")
        optimizer.load_state(opt_scalars, tensors)
