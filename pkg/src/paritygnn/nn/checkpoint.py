"""Parameter container.

Layout (version 1):
  line 1   b"PGNN-CHECKPOINT 1\n"
  line 2   one line of UTF-8 JSON: {"meta": {...}, "tensors": [{"name", "shape"}, ...]}
  rest     every tensor's entries as little-endian float64, row-major,
           concatenated in the order of the "tensors" list
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

MAGIC = b"PGNN-CHECKPOINT 1\n"


class CheckpointError(ValueError):
    pass


def dump_params(tensors: dict[str, np.ndarray], meta: dict | None = None) -> bytes:
    header = {
        "meta": meta or {},
        "tensors": [{"name": k, "shape": list(v.shape)} for k, v in tensors.items()],
    }
    chunks = [MAGIC, json.dumps(header, sort_keys=True).encode() + b"\n"]
    chunks += [np.ascontiguousarray(v, dtype="<f8").tobytes() for v in tensors.values()]
    return b"".join(chunks)


def load_params(data: bytes) -> tuple[dict[str, np.ndarray], dict]:
    if not data.startswith(MAGIC):
        raise CheckpointError("not a checkpoint (bad magic line)")
    try:
        end = data.index(b"\n", len(MAGIC))
        header = json.loads(data[len(MAGIC):end])
    except ValueError as exc:
        raise CheckpointError(f"unreadable checkpoint header: {exc}") from exc
    offset = end + 1
    tensors = {}
    for entry in header["tensors"]:
        count = int(np.prod(entry["shape"], dtype=np.int64))
        if offset + 8 * count > len(data):
            raise CheckpointError(f"checkpoint truncated in tensor {entry['name']!r}")
        raw = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        tensors[entry["name"]] = raw.astype(np.float64).reshape(entry["shape"])
        offset += 8 * count
    if offset != len(data):
        raise CheckpointError("checkpoint size does not match its header")
    return tensors, header["meta"]


def save_checkpoint(path, tensors: dict[str, np.ndarray], meta: dict | None = None) -> None:
    Path(path).write_bytes(dump_params(tensors, meta))


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    return load_params(Path(path).read_bytes())
