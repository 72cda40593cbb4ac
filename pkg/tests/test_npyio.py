"""NPY interchange: format fixtures, error taxonomy, bit-exact round trips."""

import struct

import numpy as np
import pytest

from motioneval.errors import (
    FortranOrderUnsupported,
    MagicMismatch,
    MissingFile,
    ShapeHeaderMalformed,
    UnsupportedDtype,
)
from motioneval.npyio import load_npy, save_npy


def write_raw(path, header, payload):
    header_bytes = header.encode("ascii")
    with open(path, "wb") as fh:
        fh.write(b"\x93NUMPY\x01\x00")
        fh.write(struct.pack("<H", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(payload)


class TestLoad:
    def test_minimal_f4_file(self, tmp_path):
        path = tmp_path / "a.npy"
        payload = np.arange(6, dtype="<f4").tobytes()
        write_raw(path, "{'descr':'<f4','fortran_order':False,'shape':(2,3)}", payload)
        arr = load_npy(path)
        assert arr.shape == (2, 3)
        assert arr.dtype == np.dtype("<f4")
        np.testing.assert_array_equal(arr, np.arange(6, dtype="<f4").reshape(2, 3))

    def test_payload_shorter_than_shape(self, tmp_path):
        path = tmp_path / "short.npy"
        write_raw(path, "{'descr':'<f4','fortran_order':False,'shape':(2,3)}", b"\x00" * 20)
        with pytest.raises(ShapeHeaderMalformed):
            load_npy(path)

    def test_payload_longer_than_shape(self, tmp_path):
        path = tmp_path / "long.npy"
        write_raw(path, "{'descr':'<f4','fortran_order':False,'shape':(2,3)}", b"\x00" * 28)
        with pytest.raises(ShapeHeaderMalformed):
            load_npy(path)

    def test_big_endian_rejected(self, tmp_path):
        path = tmp_path / "be.npy"
        write_raw(path, "{'descr':'>f4','fortran_order':False,'shape':(2,3)}", b"\x00" * 24)
        with pytest.raises(UnsupportedDtype):
            load_npy(path)

    def test_int_dtype_rejected(self, tmp_path):
        path = tmp_path / "int.npy"
        write_raw(path, "{'descr':'<i4','fortran_order':False,'shape':(6,)}", b"\x00" * 24)
        with pytest.raises(UnsupportedDtype):
            load_npy(path)

    def test_fortran_order_rejected(self, tmp_path):
        path = tmp_path / "f.npy"
        write_raw(path, "{'descr':'<f4','fortran_order':True,'shape':(2,3)}", b"\x00" * 24)
        with pytest.raises(FortranOrderUnsupported):
            load_npy(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.npy"
        path.write_bytes(b"NOTNPY\x01\x00" + b"\x00" * 32)
        with pytest.raises(MagicMismatch):
            load_npy(path)

    def test_v2_rejected(self, tmp_path):
        path = tmp_path / "v2.npy"
        path.write_bytes(b"\x93NUMPY\x02\x00" + b"\x00" * 32)
        with pytest.raises(MagicMismatch):
            load_npy(path)

    def test_garbage_header(self, tmp_path):
        path = tmp_path / "g.npy"
        write_raw(path, "not a dict at all", b"")
        with pytest.raises(ShapeHeaderMalformed):
            load_npy(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFile):
            load_npy(tmp_path / "absent.npy")


class TestRoundTrip:
    @pytest.mark.parametrize("dtype", [np.float32, np.float64])
    def test_payload_bit_identical(self, tmp_path, dtype):
        rng = np.random.default_rng(7)
        arr = rng.standard_normal((5, 22, 3)).astype(dtype)
        p1 = tmp_path / "a.npy"
        p2 = tmp_path / "b.npy"
        save_npy(p1, arr)
        loaded = load_npy(p1)
        save_npy(p2, loaded)
        assert p1.read_bytes() == p2.read_bytes()
        assert loaded.tobytes() == arr.tobytes()

    def test_numpy_can_read_ours(self, tmp_path):
        arr = np.linspace(0, 1, 12).reshape(3, 4)
        path = tmp_path / "ours.npy"
        save_npy(path, arr)
        np.testing.assert_array_equal(np.load(path), arr)

    def test_we_can_read_numpys(self, tmp_path):
        arr = np.linspace(0, 1, 12, dtype=np.float32).reshape(4, 3)
        path = tmp_path / "theirs.npy"
        np.save(path, arr)
        np.testing.assert_array_equal(load_npy(path), arr)

    def test_one_dimensional_shape(self, tmp_path):
        arr = np.array([1.5, 2.5], dtype=np.float32)
        path = tmp_path / "vec.npy"
        save_npy(path, arr)
        np.testing.assert_array_equal(load_npy(path), arr)

    def test_loaded_array_is_readonly(self, tmp_path):
        path = tmp_path / "ro.npy"
        save_npy(path, np.zeros((2, 2)))
        arr = load_npy(path)
        with pytest.raises(ValueError):
            arr[0, 0] = 1.0

    def test_integer_array_rejected_on_save(self, tmp_path):
        with pytest.raises(UnsupportedDtype):
            save_npy(tmp_path / "i.npy", np.zeros((2, 2), dtype=np.int64))
