"""Versioned, checksummed checkpoint container.

Layout (little endian)::

    b"CTRLCKPT"  magic
    uint32       format version
    uint32       header length L
    L bytes      UTF-8 JSON header (sorted keys): user metadata + blob table
    ...          raw float64 blobs in header order
    32 bytes     SHA-256 of everything above

The blob table lists ``name``, ``shape``, ``offset`` and ``nbytes`` for every
array.  Serialisation is deterministic: equal inputs give equal bytes.
"""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"CTRLCKPT"
VERSION = 1


class CheckpointError(ValueError):
    pass


def dumps(header: dict, arrays: dict[str, np.ndarray]) -> bytes:
    table = []
    blobs = []
    offset = 0
    for name, arr in arrays.items():
        data = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        table.append({"name": name, "shape": list(np.shape(arr)), "offset": offset, "nbytes": len(data)})
        blobs.append(data)
        offset += len(data)
    head = json.dumps({"meta": header, "blobs": table}, sort_keys=True, separators=(",", ":")).encode()
    body = MAGIC + struct.pack("<II", VERSION, len(head)) + head + b"".join(blobs)
    return body + hashlib.sha256(body).digest()


def loads(raw: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    if len(raw) < len(MAGIC) + 8 + 32 or raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError("checkpoint checksum mismatch (file is corrupt)")
    version, hlen = struct.unpack_from("<II", body, len(MAGIC))
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    start = len(MAGIC) + 8
    head = json.loads(body[start : start + hlen].decode())
    base = start + hlen
    arrays = {}
    for entry in head["blobs"]:
        lo = base + entry["offset"]
        buf = body[lo : lo + entry["nbytes"]]
        arrays[entry["name"]] = np.frombuffer(buf, dtype="<f8").reshape(entry["shape"]).astype(np.float64)
    return head["meta"], arrays


def save(path, header: dict, arrays: dict[str, np.ndarray]) -> None:
    Path(path).write_bytes(dumps(header, arrays))


def load(path) -> tuple[dict, dict[str, np.ndarray]]:
    return loads(Path(path).read_bytes())
