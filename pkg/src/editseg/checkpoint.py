"""Single-file binary checkpoints, format tag "run-v1".

Layout: a little-endian uint32 header length, a JSON header mapping array
names to shapes and byte offsets plus free-form metadata, then the raw
float64 little-endian array payloads. Arrays are sorted by name and the
header is canonicalized, so identical state always produces identical bytes
(seeded runs must give bitwise-identical checkpoints).
"""

from __future__ import annotations

import json
import struct

import numpy as np

FORMAT_TAG = "run-v1"


def save_checkpoint(path, arrays: dict[str, np.ndarray], meta: dict | None = None):
    names = sorted(arrays)
    header_arrays = {}
    offset = 0
    for name in names:
        arr = np.asarray(arrays[name], dtype="<f8")
        header_arrays[name] = {"shape": list(arr.shape), "offset": offset}
        offset += arr.nbytes
    header = {"format": FORMAT_TAG, "arrays": header_arrays, "meta": meta or {}}
    blob = json.dumps(header, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode(
        "utf-8"
    )
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for name in names:
            # tobytes() always emits C order, so no contiguity fixup needed
            # (ascontiguousarray would also silently promote 0-d to 1-d).
            fh.write(np.asarray(arrays[name], dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        if header.get("format") != FORMAT_TAG:
            raise ValueError(f"unsupported checkpoint format: {header.get('format')!r}")
        payload = fh.read()
    arrays = {}
    for name, info in header["arrays"].items():
        shape = tuple(info["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = info["offset"]
        arrays[name] = (
            np.frombuffer(payload, dtype="<f8", count=count, offset=start)
            .reshape(shape)
            .astype(np.float64)
        )
    return arrays, header["meta"]
