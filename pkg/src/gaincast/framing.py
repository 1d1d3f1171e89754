"""Midhaul frame codec: latent blocks as length-prefixed binary frames.

Frame layout (little-endian):
    version u8 (=1) | msg_type u8 (0 latent, 1 raw) | seq u32
    | n_ap u16 | payload_len u16 (element count) | payload f32 LE

Header is 10 bytes; a 75-element latent frame is 310 bytes on the wire.
Round-trips are bit-exact; NaN payloads are rejected at encode time.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

VERSION = 1
MSG_LATENT = 0
MSG_RAW = 1
HEADER_LEN = 10
_HEADER = struct.Struct("<BBIHH")


class FrameError(ValueError):
    pass


@dataclass
class LatentBlock:
    """A [15,5] latent window plus its provenance."""

    values: np.ndarray
    window_id: int
    normalized: bool = True

    def flat(self) -> np.ndarray:
        return np.ascontiguousarray(self.values, dtype="<f4").reshape(-1)


def encode_frame(payload: np.ndarray, seq: int, n_ap: int,
                 msg_type: int = MSG_LATENT) -> bytes:
    payload = np.ascontiguousarray(payload, dtype="<f4").reshape(-1)
    if payload.size > 0xFFFF:
        raise FrameError(f"payload of {payload.size} elements overflows u16 length")
    if not np.all(np.isfinite(payload)):
        raise FrameError("refusing to encode non-finite payload")
    if msg_type not in (MSG_LATENT, MSG_RAW):
        raise FrameError(f"unknown msg_type {msg_type}")
    header = _HEADER.pack(VERSION, msg_type, seq & 0xFFFFFFFF, n_ap, payload.size)
    return header + payload.tobytes()


def decode_frame(buf: bytes):
    """-> (payload f32 array, seq, n_ap, msg_type)."""
    if len(buf) < HEADER_LEN:
        raise FrameError(f"frame of {len(buf)} bytes shorter than header")
    version, msg_type, seq, n_ap, payload_len = _HEADER.unpack_from(buf)
    if version != VERSION:
        raise FrameError(f"unsupported frame version {version}")
    if msg_type not in (MSG_LATENT, MSG_RAW):
        raise FrameError(f"unknown msg_type {msg_type}")
    expected = HEADER_LEN + 4 * payload_len
    if len(buf) != expected:
        raise FrameError(f"frame length {len(buf)} != declared {expected}")
    payload = np.frombuffer(buf, dtype="<f4", count=payload_len,
                            offset=HEADER_LEN).copy()
    return payload, seq, n_ap, msg_type


def frame_size(payload_elements: int) -> int:
    return HEADER_LEN + 4 * payload_elements
