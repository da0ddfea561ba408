"""Deterministic binary container for fitted pipelines.

Layout (all integers little-endian)::

    magic     16 bytes  b"GEARLINE-BUNDLE\\0"
    version   u32
    hlen      u64       length of the JSON header
    header    hlen bytes, UTF-8 JSON, sorted keys, no whitespace
    plen      u64       length of the array payload
    payload   plen bytes, arrays back to back in header order
    digest    32 bytes  SHA-256 of everything before it

The header carries an ``arrays`` table of {name, dtype, shape, offset,
nbytes}. Only little-endian float64 and int64 arrays are stored. Equal
inputs give equal bytes, which ``np.savez`` (zip timestamps) does not.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"GEARLINE-BUNDLE\0"
VERSION = 1
_DTYPES = {"f8": np.dtype("<f8"), "i8": np.dtype("<i8")}


class BundleError(ValueError):
    pass


def _normalize(arr) -> tuple[str, np.ndarray]:
    arr = np.asarray(arr)
    if arr.dtype.kind == "f":
        return "f8", np.ascontiguousarray(arr, dtype="<f8")
    if arr.dtype.kind in "iub":
        return "i8", np.ascontiguousarray(arr, dtype="<i8")
    raise BundleError(f"cannot store arrays of dtype {arr.dtype}")


def encode(header: dict, arrays: dict[str, np.ndarray]) -> bytes:
    if "arrays" in header:
        raise BundleError("'arrays' is a reserved header key")
    table, chunks, offset = [], [], 0
    for name in sorted(arrays):
        code, arr = _normalize(arrays[name])
        raw = arr.tobytes()
        table.append({"name": name, "dtype": code, "shape": list(arr.shape), "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    head = json.dumps({**header, "arrays": table}, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()
    payload = b"".join(chunks)
    body = MAGIC + struct.pack("<IQ", VERSION, len(head)) + head + struct.pack("<Q", len(payload)) + payload
    return body + hashlib.sha256(body).digest()


def decode(blob: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    if len(blob) < len(MAGIC) + 12 + 8 + 32 or not blob.startswith(MAGIC):
        raise BundleError("not a gearline bundle")
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise BundleError("bundle checksum mismatch (corrupt or truncated)")
    pos = len(MAGIC)
    version, hlen = struct.unpack_from("<IQ", body, pos)
    if version != VERSION:
        raise BundleError(f"unsupported bundle version {version}")
    pos += 12
    header = json.loads(body[pos : pos + hlen].decode())
    pos += hlen
    (plen,) = struct.unpack_from("<Q", body, pos)
    pos += 8
    payload = body[pos : pos + plen]
    if len(payload) != plen:
        raise BundleError("truncated payload")
    arrays = {}
    for entry in header.pop("arrays"):
        dtype = _DTYPES[entry["dtype"]]
        raw = payload[entry["offset"] : entry["offset"] + entry["nbytes"]]
        arrays[entry["name"]] = np.frombuffer(raw, dtype=dtype).reshape(entry["shape"]).copy()
    return header, arrays


def write_bundle(path, header: dict, arrays: dict[str, np.ndarray]) -> None:
    Path(path).write_bytes(encode(header, arrays))


def read_bundle(path) -> tuple[dict, dict[str, np.ndarray]]:
    return decode(Path(path).read_bytes())
