"""Binary checkpoint container shared by all models.

Layout (all integers little-endian):
    magic "LITE" | version u8 | tensor count u32
    per tensor: name_len u16 | name utf-8 | rank u8 | dims u32 each
                | dtype tag u8 (0 = f32, 1 = f64) | raw values LE

Round-trips are bit-exact.
"""
from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

MAGIC = b"LITE"
VERSION = 1

_DTYPE_TAGS = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_TAG_FOR_KIND = {"f4": 0, "f8": 1}


class CheckpointError(ValueError):
    pass


def save_tensors(path, tensors: dict[str, np.ndarray]):
    path = Path(path)
    out = bytearray()
    out += MAGIC
    out += struct.pack("<BI", VERSION, len(tensors))
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        if arr.dtype.str[1:] not in ("f4", "f8"):
            raise CheckpointError(f"unsupported dtype {arr.dtype} for tensor {name!r}")
        tag = _TAG_FOR_KIND[arr.dtype.str[1:]]
        name_b = name.encode("utf-8")
        out += struct.pack("<H", len(name_b))
        out += name_b
        out += struct.pack("<B", arr.ndim)
        out += struct.pack(f"<{arr.ndim}I", *arr.shape) if arr.ndim else b""
        out += struct.pack("<B", tag)
        out += np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<")).tobytes()
    path.write_bytes(bytes(out))


def load_tensors(path) -> dict[str, np.ndarray]:
    buf = Path(path).read_bytes()
    if buf[:4] != MAGIC:
        raise CheckpointError(f"bad magic {buf[:4]!r}, expected {MAGIC!r}")
    version, count = struct.unpack_from("<BI", buf, 4)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    off = 9
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", buf, off)
        off += 2
        name = buf[off:off + name_len].decode("utf-8")
        off += name_len
        (rank,) = struct.unpack_from("<B", buf, off)
        off += 1
        dims = struct.unpack_from(f"<{rank}I", buf, off) if rank else ()
        off += 4 * rank
        (tag,) = struct.unpack_from("<B", buf, off)
        off += 1
        if tag not in _DTYPE_TAGS:
            raise CheckpointError(f"unknown dtype tag {tag} for tensor {name!r}")
        dt = _DTYPE_TAGS[tag]
        n = int(np.prod(dims, dtype=np.int64)) if rank else 1
        nbytes = n * dt.itemsize
        arr = np.frombuffer(buf[off:off + nbytes], dtype=dt).reshape(dims)
        off += nbytes
        tensors[name] = arr.copy()
    return tensors


def digest(tensors: dict[str, np.ndarray]) -> str:
    """Order-independent content digest of a named tensor set."""
    h = hashlib.sha256()
    for name in sorted(tensors):
        arr = np.asarray(tensors[name])
        h.update(name.encode())
        h.update(str(arr.shape).encode())
        h.update(arr.tobytes())
    return h.hexdigest()
