import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rtsms.files import (
    FormatError,
    ingest_raw,
    parse_tensor,
    parse_tucker,
    peek,
    read_tensor,
    read_tucker,
    tensor_bytes,
    tucker_bytes,
    write_tensor,
    write_tucker,
)

from conftest import random_tucker


def test_tensor_layout_by_hand():
    t = np.arange(1, 9, dtype=float).reshape((2, 2, 2), order="F")
    buf = tensor_bytes(t)
    assert buf[:6] == b"RTEN\x01\x03"
    assert struct.unpack("<3Q", buf[6:30]) == (2, 2, 2)
    assert struct.unpack("<8d", buf[30:]) == tuple(range(1, 9))
    assert len(buf) == 30 + 64


@settings(max_examples=40, deadline=None)
@given(dims=st.lists(st.integers(1, 4), min_size=1, max_size=4), seed=st.integers(0, 999))
def test_tensor_roundtrip_bitwise(dims, seed):
    t = np.random.default_rng(seed).standard_normal(dims)
    assert np.array_equal(parse_tensor(tensor_bytes(t)), t)


def test_tucker_roundtrip(tmp_path, rng):
    dec = random_tucker((6, 5, 4), (3, 2, 2), rng)
    write_tucker(tmp_path / "a.rtuk", dec)
    back = read_tucker(tmp_path / "a.rtuk")
    assert np.array_equal(back.core, dec.core)
    assert all(np.array_equal(x, y) for x, y in zip(back.factors, dec.factors))
    info = peek(tmp_path / "a.rtuk")
    assert info == {"kind": "tucker", "version": 1, "dims": [6, 5, 4], "core_dims": [3, 2, 2]}
    assert not list(tmp_path.glob("*.tmp*"))


def test_file_roundtrip(tmp_path, rng):
    t = rng.standard_normal((3, 4))
    write_tensor(tmp_path / "t.rten", t)
    assert np.array_equal(read_tensor(tmp_path / "t.rten"), t)
    assert peek(tmp_path / "t.rten") == {"kind": "tensor", "version": 1, "dims": [3, 4]}


@pytest.mark.parametrize("mutate", [
    lambda b: b"XXXX" + b[4:],
    lambda b: b[:4] + b"\x02" + b[5:],
    lambda b: b[:-1],
    lambda b: b + b"\x00",
    lambda b: b[:10],
])
def test_malformed_tensor(mutate):
    buf = tensor_bytes(np.ones((2, 3)))
    with pytest.raises(FormatError):
        parse_tensor(mutate(buf))


def test_malformed_tucker(rng):
    buf = tucker_bytes(random_tucker((4, 3), (2, 2), rng))
    with pytest.raises(FormatError):
        parse_tucker(buf[:-8])
    with pytest.raises(FormatError):
        parse_tucker(tensor_bytes(np.ones(3)))


def test_ingest_f32_big_endian_upcasts_exactly():
    vals = np.array([1.5, -2.25, 3.0e-3, 7.0, 0.1, 9.0], dtype=">f4")
    t = ingest_raw(vals.tobytes(), (2, 3), "f32", "be")
    assert t.dtype == np.float64
    assert np.array_equal(t.ravel(order="F"), vals.astype(np.float64))


def test_ingest_c_layout():
    c = np.arange(24.0).reshape(2, 3, 4)
    assert np.array_equal(ingest_raw(c.astype("<f8").tobytes(), (2, 3, 4), layout="C"), c)


def test_ingest_size_mismatch():
    with pytest.raises(FormatError):
        ingest_raw(b"\x00" * 40, (2, 3))
    with pytest.raises(ValueError):
        ingest_raw(b"", (0,), "f16")
