"""Reader and writer for the tensor dump format.

The format is the plain binary one ubiquitous in numerics tooling: a magic
string, a version pair, a little-endian header length, an ASCII dict header
padded so the payload starts on a 64-byte boundary, then the raw C-order
little-endian payload.  Only version 1.0 with ``<f4`` or ``|u1`` payloads is
accepted; everything else is rejected with a typed error rather than parsed
permissively, since dumps cross a language boundary and silent coercion there
is how shape bugs hide.
"""

from __future__ import annotations

import ast
import struct
from pathlib import Path

import numpy as np

from .errors import (
    MalformedHeaderError,
    ShapeOverflowError,
    TruncatedPayloadError,
    UnsupportedDtypeError,
)
from .types import FeatureMap, LabelMask, as_label_mask
from .validation import check_soft_weights

MAGIC = b"\x93NUMPY"
HEADER_ALIGN = 64

# descr strings this codebase emits and accepts
_DESCRS = {"<f4": np.dtype("<f4"), "|u1": np.dtype("u1")}

# any tensor larger than this is assumed to be a corrupt header, not data
MAX_ELEMENTS = 2**40


def write_tensor(path, array) -> None:
    """Write an array as a version 1.0 dump.

    Float arrays are stored as little-endian float32, integer and bool arrays
    as uint8 (values outside [0, 255] are refused).
    """
    arr = np.asarray(array)
    if arr.dtype.kind == "f":
        descr = "<f4"
        out = np.asarray(arr, dtype="<f4")
    elif arr.dtype.kind in "uib":
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise UnsupportedDtypeError(
                "integer tensor does not fit in uint8; dump format stores ints as |u1"
            )
        descr = "|u1"
        out = np.asarray(arr, dtype="u1")
    else:
        raise UnsupportedDtypeError(f"cannot dump dtype {arr.dtype!r}; only float and uint8 supported")

    shape = tuple(int(d) for d in out.shape)
    header = "{'descr': '%s', 'fortran_order': False, 'shape': %s, }" % (descr, repr(shape))
    base = len(MAGIC) + 2 + 2
    pad = (-(base + len(header) + 1)) % HEADER_ALIGN
    header_bytes = header.encode("ascii") + b" " * pad + b"\n"
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(b"\x01\x00")
        fh.write(struct.pack("<H", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(out.tobytes())


def read_tensor(path) -> np.ndarray:
    """Read a version 1.0 dump, validating every field before touching the payload."""
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise MalformedHeaderError("bad magic string", offset=0)
    if len(data) < 8:
        raise MalformedHeaderError("file ends inside the version field", offset=len(MAGIC))
    major, minor = data[6], data[7]
    if (major, minor) != (1, 0):
        raise MalformedHeaderError(f"unsupported format version {major}.{minor}", offset=6)
    if len(data) < 10:
        raise MalformedHeaderError("file ends inside the header length field", offset=8)
    (header_len,) = struct.unpack_from("<H", data, 8)
    header_end = 10 + header_len
    if len(data) < header_end:
        raise MalformedHeaderError(
            f"header length {header_len} runs past end of file", offset=8
        )
    raw_header = data[10:header_end]
    if not raw_header.endswith(b"\n"):
        raise MalformedHeaderError("header is not newline-terminated", offset=header_end - 1)
    try:
        text = raw_header.decode("ascii")
    except UnicodeDecodeError as exc:
        raise MalformedHeaderError("header is not ASCII", offset=10 + exc.start) from None
    try:
        meta = ast.literal_eval(text)
    except (ValueError, SyntaxError):
        raise MalformedHeaderError("header is not a literal dict", offset=10) from None
    if not isinstance(meta, dict) or set(meta) != {"descr", "fortran_order", "shape"}:
        raise MalformedHeaderError(
            "header must have exactly the keys descr, fortran_order, shape", offset=10
        )
    descr = meta["descr"]
    if descr not in _DESCRS:
        raise UnsupportedDtypeError(f"unsupported descr {descr!r}; expected '<f4' or '|u1'")
    if meta["fortran_order"] is not False:
        raise UnsupportedDtypeError("fortran_order payloads are not supported")
    shape = meta["shape"]
    if not (
        isinstance(shape, tuple)
        and all(isinstance(d, int) and not isinstance(d, bool) and d >= 0 for d in shape)
    ):
        raise MalformedHeaderError("shape must be a tuple of non-negative ints", offset=10)
    count = 1
    for d in shape:
        count *= d
    if count > MAX_ELEMENTS:
        raise ShapeOverflowError(
            f"shape {shape} declares {count} elements, over the {MAX_ELEMENTS} sanity cap"
        )
    dtype = _DESCRS[descr]
    expected = count * dtype.itemsize
    payload = data[header_end:]
    if len(payload) < expected:
        raise TruncatedPayloadError(
            f"payload holds {len(payload)} bytes but header demands {expected}"
        )
    if len(payload) > expected:
        raise MalformedHeaderError(
            "trailing bytes after payload", offset=header_end + expected
        )
    return np.frombuffer(payload, dtype=dtype, count=count).reshape(shape).copy()


def load_feature(path, layer_id: int | None = None, unit_id: int | None = None) -> FeatureMap:
    """Read a dump as a feature map; the payload must be float32."""
    arr = read_tensor(path)
    if arr.dtype != np.dtype("<f4"):
        raise UnsupportedDtypeError(f"feature dump must be float32, got {arr.dtype}")
    return FeatureMap(arr, layer_id=layer_id, unit_id=unit_id)


def load_mask(path, soft_ok: bool = False):
    """Read a dump as a mask.

    uint8 payloads become hard label masks.  With ``soft_ok``, a float32
    payload in [0, 1] is returned as a raw weight array instead.
    """
    arr = read_tensor(path)
    if arr.dtype == np.dtype("u1"):
        return as_label_mask(arr)
    if soft_ok and arr.dtype == np.dtype("<f4"):
        return check_soft_weights(arr)
    expected = "uint8 or float32" if soft_ok else "uint8"
    raise UnsupportedDtypeError(f"mask dump must be {expected}, got {arr.dtype}")


def write_mask(path, mask) -> None:
    """Write a label mask (or the labels of a segmentation) as a uint8 dump."""
    labels = getattr(mask, "labels", mask)
    write_tensor(path, np.asarray(labels))
