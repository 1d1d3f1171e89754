import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaincast.checkpoint import (CheckpointError, digest, load_tensors,
                                 save_tensors)


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    tensors = {
        "a.weight": rng.standard_normal((3, 4, 5)).astype(np.float32),
        "a.bias": rng.standard_normal(7).astype(np.float64),
        "scalar": np.float32(1.5).reshape(()),
    }
    path = tmp_path / "m.ckpt"
    save_tensors(path, tensors)
    back = load_tensors(path)
    assert set(back) == set(tensors)
    for k in tensors:
        assert back[k].dtype == np.asarray(tensors[k]).dtype
        np.testing.assert_array_equal(back[k], tensors[k])


@settings(max_examples=30, deadline=None)
@given(st.lists(
    st.tuples(
        st.text(min_size=1, max_size=20),
        st.lists(st.integers(0, 5), min_size=0, max_size=3),
        st.sampled_from(["f4", "f8"]),
    ),
    min_size=0, max_size=5,
    unique_by=lambda t: t[0],
))
def test_round_trip_property(tmp_path_factory, specs):
    rng = np.random.default_rng(1)
    tensors = {name: rng.standard_normal(shape).astype(kind)
               for name, shape, kind in specs}
    path = tmp_path_factory.mktemp("ckpt") / "m.ckpt"
    save_tensors(path, tensors)
    back = load_tensors(path)
    assert set(back) == set(tensors)
    for k in tensors:
        np.testing.assert_array_equal(back[k], tensors[k])


def test_magic_bytes(tmp_path):
    path = tmp_path / "m.ckpt"
    save_tensors(path, {"x": np.zeros(2, np.float32)})
    assert path.read_bytes()[:4] == b"LITE"


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"NOPE" + bytes(16))
    with pytest.raises(CheckpointError, match="magic"):
        load_tensors(path)


def test_bad_version_rejected(tmp_path):
    path = tmp_path / "m.ckpt"
    save_tensors(path, {"x": np.zeros(2, np.float32)})
    buf = bytearray(path.read_bytes())
    buf[4] = 99
    path.write_bytes(bytes(buf))
    with pytest.raises(CheckpointError, match="version"):
        load_tensors(path)


def test_unsupported_dtype_rejected(tmp_path):
    with pytest.raises(CheckpointError, match="dtype"):
        save_tensors(tmp_path / "m.ckpt", {"x": np.zeros(2, np.int32)})


def test_digest_order_independent():
    a = np.ones((2, 2), np.float32)
    b = np.zeros(3, np.float32)
    assert digest({"a": a, "b": b}) == digest({"b": b, "a": a})


def test_digest_sensitive_to_values_and_names():
    a = np.ones(4, np.float32)
    base = digest({"a": a})
    assert digest({"a": a * 2}) != base
    assert digest({"b": a}) != base


def test_digest_distinguishes_shape():
    flat = np.arange(6, dtype=np.float32)
    assert digest({"x": flat}) != digest({"x": flat.reshape(2, 3)})
