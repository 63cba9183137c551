"""Reader and writer for the SCIT binary tensor format.

Layout (little-endian, no padding)::

    bytes 0-7   magic  b"SCITNSR1"  (the final byte is the format version)
    byte  8     dtype  1 = float32, 2 = float64
    byte  9     rank   2 or 3
    ...         rank x uint64 dims, in order (n_x, n_y[, B])
    ...         payload, frame-major then row-major

A rank-3 file maps to an in-memory ``(B, n_x, n_y)`` array, a rank-2 file to
``(n_x, n_y)``; since the payload is frame-major both are plain C-order reads.
"""
import os
import struct

import numpy as np

from .errors import (BadDtypeError, BadMagicError, BadRankError, BadVersionError,
                     TensorFormatError, TrailingDataError, TruncatedPayloadError)

MAGIC = b"SCITNSR1"
_MAGIC_STEM = MAGIC[:7]
DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
DTYPE_CODES = {"f4": 1, "float32": 1, "f8": 2, "float64": 2}


def encode_tensor(tensor, dtype="f8"):
    a = np.asarray(tensor)
    if a.ndim not in (2, 3):
        raise BadRankError(f"only rank 2 and 3 tensors are supported, got rank {a.ndim}")
    try:
        code = DTYPE_CODES[dtype]
    except KeyError:
        raise BadDtypeError(f"unsupported dtype {dtype!r}") from None
    dims = a.shape if a.ndim == 2 else (a.shape[1], a.shape[2], a.shape[0])
    header = MAGIC + bytes([code, a.ndim]) + struct.pack(f"<{a.ndim}Q", *dims)
    payload = np.ascontiguousarray(a, dtype=DTYPES[code]).tobytes()
    return header + payload


def decode_tensor(buf):
    """Parse SCIT bytes into a float64 array."""
    if len(buf) < len(MAGIC) or buf[:7] != _MAGIC_STEM:
        raise BadMagicError("bad magic: not a SCIT tensor file")
    if buf[7:8] != MAGIC[7:8]:
        raise BadVersionError(f"unsupported SCIT version {buf[7:8]!r}")
    if len(buf) < 10:
        raise TruncatedPayloadError("truncated header")
    code, rank = buf[8], buf[9]
    if code not in DTYPES:
        raise BadDtypeError(f"bad dtype code {code}")
    if rank not in (2, 3):
        raise BadRankError(f"bad rank {rank}")
    off = 10 + 8 * rank
    if len(buf) < off:
        raise TruncatedPayloadError("truncated header")
    dims = struct.unpack(f"<{rank}Q", buf[10:off])
    if 0 in dims:
        raise TensorFormatError(f"zero-sized dimension in {dims}")
    dt = DTYPES[code]
    count = int(np.prod(dims, dtype=np.uint64))
    need = count * dt.itemsize
    have = len(buf) - off
    if have < need:
        raise TruncatedPayloadError(
            f"truncated payload: header declares {'x'.join(map(str, dims))} "
            f"({count} samples) but only {have // dt.itemsize} present"
        )
    if have > need:
        raise TrailingDataError(f"{have - need} bytes of trailing data after payload")
    data = np.frombuffer(buf, dtype=dt, count=count, offset=off).astype(np.float64)
    if not np.all(np.isfinite(data)):
        raise TensorFormatError("tensor contains NaN or Inf samples")
    if rank == 2:
        return data.reshape(dims)
    n_x, n_y, B = dims
    return data.reshape(B, n_x, n_y)


def save_tensor(path, tensor, dtype="f8"):
    data = encode_tensor(tensor, dtype)
    with open(path, "wb") as fh:
        fh.write(data)


def load_tensor(path):
    with open(os.fspath(path), "rb") as fh:
        return decode_tensor(fh.read())
