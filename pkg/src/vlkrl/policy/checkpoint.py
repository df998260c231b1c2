"""Checkpoint file format.

Byte layout (little-endian):
  - magic, 8 bytes: b"VLKRLCP1"
  - header length, uint32
  - header, UTF-8 JSON with sorted keys (architecture descriptor and any
    run metadata the caller supplies)
  - array count, uint32
  - per array: element count uint64, then float64 data

Identical metadata and parameters always produce identical bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"VLKRLCP1"


def save_checkpoint(path: str | Path, meta: dict, arrays: list[np.ndarray]) -> None:
    header = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(struct.pack("<I", len(arrays)))
        for array in arrays:
            flat = np.ascontiguousarray(array, dtype="<f8").ravel()
            fh.write(struct.pack("<Q", flat.size))
            fh.write(flat.tobytes())


def load_checkpoint(path: str | Path) -> tuple[dict, list[np.ndarray]]:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"not a checkpoint file: bad magic {magic!r}")
        (header_len,) = struct.unpack("<I", fh.read(4))
        meta = json.loads(fh.read(header_len).decode("utf-8"))
        (count,) = struct.unpack("<I", fh.read(4))
        arrays = []
        for _ in range(count):
            (size,) = struct.unpack("<Q", fh.read(8))
            data = np.frombuffer(fh.read(8 * size), dtype="<f8")
            arrays.append(data.astype(np.float64))
    return meta, arrays
