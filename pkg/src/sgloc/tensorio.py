"""Named-tensor JSON files.

Layout::

    {"format": "...", "config": {...},
     "tensors": [{"name": ..., "shape": [...], "data": [flat row-major values]}, ...]}

Floats are written with ``repr`` precision so a save/load round trip is exact
and identical inputs give byte-identical files.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np


class TensorFileError(ValueError):
    pass


def dumps_named_tensors(tensors: dict[str, np.ndarray], fmt: str, config: dict) -> str:
    entries = []
    for name in sorted(tensors):
        arr = np.asarray(tensors[name], dtype=np.float64)
        entries.append({"name": name, "shape": list(arr.shape), "data": arr.reshape(-1).tolist()})
    return json.dumps({"format": fmt, "config": config, "tensors": entries}, sort_keys=True) + "\n"


def write_named_tensors(path, tensors: dict[str, np.ndarray], fmt: str, config: dict) -> None:
    Path(path).write_text(dumps_named_tensors(tensors, fmt, config))


def read_named_tensors(path, fmt: str, expected_shapes: dict[str, tuple] | None = None):
    """Load a tensor file; returns ``(config, tensors)``.

    When ``expected_shapes`` is given the file must contain exactly those names
    with exactly those shapes.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise TensorFileError(f"{path}: not valid JSON ({exc})") from exc
    if doc.get("format") != fmt:
        raise TensorFileError(f"{path}: expected format {fmt!r}, got {doc.get('format')!r}")
    tensors = {}
    for entry in doc.get("tensors", []):
        name, shape = entry["name"], tuple(entry["shape"])
        data = np.asarray(entry["data"], dtype=np.float64)
        if data.size != int(np.prod(shape, dtype=np.int64)):
            raise TensorFileError(f"{path}: tensor {name!r} has {data.size} values for shape {shape}")
        if not np.isfinite(data).all():
            raise TensorFileError(f"{path}: tensor {name!r} contains non-finite values")
        tensors[name] = data.reshape(shape)
    if expected_shapes is not None:
        missing = sorted(set(expected_shapes) - set(tensors))
        extra = sorted(set(tensors) - set(expected_shapes))
        if missing or extra:
            raise TensorFileError(f"{path}: missing tensors {missing}, unexpected tensors {extra}")
        for name, shape in expected_shapes.items():
            if tensors[name].shape != tuple(shape):
                raise TensorFileError(
                    f"{path}: tensor {name!r} has shape {tensors[name].shape}, expected {tuple(shape)}")
    return doc.get("config", {}), tensors
