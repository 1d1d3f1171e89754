import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaincast.framing import (FrameError, HEADER_LEN, LatentBlock, MSG_LATENT,
                              MSG_RAW, decode_frame, encode_frame, frame_size)


def test_latent_frame_is_310_bytes():
    frame = encode_frame(np.zeros(75, np.float32), seq=0, n_ap=8)
    assert len(frame) == 310
    assert frame_size(75) == 310
    assert HEADER_LEN == 10


def test_round_trip_fields():
    payload = np.random.default_rng(0).standard_normal(75).astype(np.float32)
    frame = encode_frame(payload, seq=12345, n_ap=8, msg_type=MSG_LATENT)
    back, seq, n_ap, msg_type = decode_frame(frame)
    np.testing.assert_array_equal(back, payload)
    assert (seq, n_ap, msg_type) == (12345, 8, MSG_LATENT)


@settings(max_examples=200, deadline=None)
@given(
    n=st.integers(0, 400),
    seq=st.integers(0, 2**32 - 1),
    n_ap=st.integers(0, 2**16 - 1),
    msg_type=st.sampled_from([MSG_LATENT, MSG_RAW]),
    seed=st.integers(0, 2**31),
)
def test_round_trip_property(n, seq, n_ap, msg_type, seed):
    payload = np.random.default_rng(seed).standard_normal(n).astype(np.float32)
    frame = encode_frame(payload, seq=seq, n_ap=n_ap, msg_type=msg_type)
    assert len(frame) == frame_size(n)
    back, seq2, ap2, mt2 = decode_frame(frame)
    assert back.tobytes() == payload.tobytes()  # bit-exact
    assert (seq2, ap2, mt2) == (seq, n_ap, msg_type)


def test_non_finite_payload_rejected():
    bad = np.array([1.0, np.nan, 2.0], np.float32)
    with pytest.raises(FrameError, match="non-finite"):
        encode_frame(bad, seq=0, n_ap=8)
    with pytest.raises(FrameError, match="non-finite"):
        encode_frame(np.array([np.inf], np.float32), seq=0, n_ap=8)


def test_oversized_payload_rejected():
    with pytest.raises(FrameError, match="overflows"):
        encode_frame(np.zeros(0x10000, np.float32), seq=0, n_ap=8)


def test_unknown_msg_type_rejected():
    with pytest.raises(FrameError, match="msg_type"):
        encode_frame(np.zeros(4, np.float32), seq=0, n_ap=8, msg_type=7)


def test_short_buffer_rejected():
    with pytest.raises(FrameError, match="shorter"):
        decode_frame(b"\x01\x00\x00")


def test_truncated_payload_rejected():
    frame = encode_frame(np.zeros(10, np.float32), seq=0, n_ap=8)
    with pytest.raises(FrameError, match="length"):
        decode_frame(frame[:-4])
    with pytest.raises(FrameError, match="length"):
        decode_frame(frame + b"\x00")


def test_corrupted_version_rejected():
    frame = bytearray(encode_frame(np.zeros(4, np.float32), seq=0, n_ap=8))
    frame[0] = 9
    with pytest.raises(FrameError, match="version"):
        decode_frame(bytes(frame))


def test_corrupted_msg_type_rejected():
    frame = bytearray(encode_frame(np.zeros(4, np.float32), seq=0, n_ap=8))
    frame[1] = 0xEE
    with pytest.raises(FrameError, match="msg_type"):
        decode_frame(bytes(frame))


def test_seq_wraps_at_u32():
    frame = encode_frame(np.zeros(1, np.float32), seq=2**32 + 5, n_ap=8)
    _, seq, _, _ = decode_frame(frame)
    assert seq == 5


def test_latent_block_flattens_to_75():
    block = LatentBlock(values=np.zeros((15, 5), np.float64), window_id=3)
    flat = block.flat()
    assert flat.shape == (75,)
    assert flat.dtype == np.dtype("<f4")
