"""Bit-exact NPY v1.0 reader/writer for the interchange contract.

Only little-endian float32/float64, C-order payloads are accepted; anything
else is an interchange error, not data to be coerced. Writing then reloading
an array reproduces the payload bytes exactly.
"""

import ast
import struct
from pathlib import Path

import numpy as np

from .errors import (
    FortranOrderUnsupported,
    MagicMismatch,
    MissingFile,
    ShapeHeaderMalformed,
    UnsupportedDtype,
)

MAGIC = b"\x93NUMPY"
VERSION = b"\x01\x00"

_DESCR_TO_DTYPE = {"<f4": np.dtype("<f4"), "<f8": np.dtype("<f8")}

# magic(6) + version(2) + header-length field(2)
_PREFIX_LEN = 10


def load_npy(path):
    """Read a dense float array from an NPY v1.0 file.

    Returns a read-only ndarray with the header-declared shape.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    raw = path.read_bytes()

    if len(raw) < _PREFIX_LEN or raw[:6] != MAGIC:
        raise MagicMismatch(f"{path}: not an NPY file")
    if raw[6:8] != VERSION:
        raise MagicMismatch(f"{path}: NPY version {raw[6]}.{raw[7]} (only 1.0 supported)")

    (header_len,) = struct.unpack("<H", raw[8:_PREFIX_LEN])
    header_end = _PREFIX_LEN + header_len
    if len(raw) < header_end:
        raise ShapeHeaderMalformed(f"{path}: truncated header")

    try:
        header = ast.literal_eval(raw[_PREFIX_LEN:header_end].decode("ascii"))
    except (ValueError, SyntaxError, UnicodeDecodeError) as exc:
        raise ShapeHeaderMalformed(f"{path}: unparseable header ({exc})") from exc
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise ShapeHeaderMalformed(f"{path}: header keys {sorted(header) if isinstance(header, dict) else header}")

    descr = header["descr"]
    if descr not in _DESCR_TO_DTYPE:
        raise UnsupportedDtype(f"{path}: descr {descr!r} (need '<f4' or '<f8')")
    if header["fortran_order"] is True:
        raise FortranOrderUnsupported(str(path))
    if header["fortran_order"] is not False:
        raise ShapeHeaderMalformed(f"{path}: fortran_order {header['fortran_order']!r}")

    shape = header["shape"]
    if not isinstance(shape, tuple) or not all(isinstance(d, int) and d >= 0 for d in shape):
        raise ShapeHeaderMalformed(f"{path}: bad shape {shape!r}")

    dtype = _DESCR_TO_DTYPE[descr]
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    payload = raw[header_end:]
    if len(payload) != expected:
        raise ShapeHeaderMalformed(
            f"{path}: shape {shape} declares {expected} payload bytes, found {len(payload)}"
        )

    arr = np.frombuffer(payload, dtype=dtype).reshape(shape)
    # frombuffer over bytes is already non-writable; loaded containers stay immutable
    return arr


def save_npy(path, array):
    """Write a float32/float64 array as NPY v1.0, C order, little endian."""
    array = np.asarray(array)
    if array.dtype == np.float32:
        descr = "<f4"
    elif array.dtype == np.float64:
        descr = "<f8"
    else:
        raise UnsupportedDtype(f"cannot write dtype {array.dtype} (float32/float64 only)")

    header = "{'descr': '%s', 'fortran_order': False, 'shape': %s, }" % (
        descr,
        str(array.shape),
    )
    # pad with spaces, newline-terminated, so payload starts 64-byte aligned
    total = _PREFIX_LEN + len(header) + 1
    pad = (64 - total % 64) % 64
    header_bytes = (header + " " * pad + "\n").encode("ascii")

    payload = np.ascontiguousarray(array).tobytes("C")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(VERSION)
        fh.write(struct.pack("<H", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(payload)
