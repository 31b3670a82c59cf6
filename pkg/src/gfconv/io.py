"""Bit-exact serialization: the GFT container and binary PGM/PPM images.

GFT layout (little-endian throughout):

    bytes 0..3   magic "GFT1"
    byte  4      dtype: 0 = f64, 1 = f32
    byte  5      ndim: 2..4
    next         ndim x u64 dims
    rest         row-major IEEE-754 payload, exactly prod(dims) values

Dim-count semantics for fields: ndim 2 is a single-channel 2D grid (H, W);
ndim 3 is multi-channel 2D (C, H, W); ndim 4 is multi-channel 3D
(C, D, H, W). Batch and channel axes are collapsed into the single leading
dim on write (C' = batch * channels) and read back as channels of a
batch-1 field, which round-trips every operation in this library since
batch items are processed independently.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import (
    BadMagicError,
    ShapeMismatchError,
    TruncatedPayloadError,
    UnknownDtypeError,
    UnsupportedImageFormatError,
)
from .fields import Field

MAGIC = b"GFT1"
_DTYPE_CODES = {0: np.dtype("<f8"), 1: np.dtype("<f4")}
_CODE_FOR = {np.dtype(np.float64): 0, np.dtype(np.float32): 1}


def encode_array(arr: np.ndarray) -> bytes:
    """Raw GFT bytes for an arbitrary 2..4-dimensional float array."""
    arr = np.ascontiguousarray(arr)
    if arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(np.float64)
    if arr.ndim not in (2, 3, 4):
        raise ShapeMismatchError(f"GFT stores 2..4 dims, got rank {arr.ndim}")
    code = _CODE_FOR[arr.dtype]
    header = MAGIC + struct.pack("<BB", code, arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    payload = arr.astype(_DTYPE_CODES[code], copy=False).tobytes()
    return header + payload


def decode_array(blob: bytes) -> np.ndarray:
    if blob[:4] != MAGIC:
        raise BadMagicError(f"expected magic {MAGIC!r}, got {blob[:4]!r}")
    if len(blob) < 6:
        raise TruncatedPayloadError("header cut short")
    code, ndim = struct.unpack_from("<BB", blob, 4)
    if code not in _DTYPE_CODES:
        raise UnknownDtypeError(f"dtype code {code} not in {{0, 1}}")
    if ndim not in (2, 3, 4):
        raise TruncatedPayloadError(f"ndim {ndim} outside 2..4")
    dims_end = 6 + 8 * ndim
    if len(blob) < dims_end:
        raise TruncatedPayloadError("dims cut short")
    dims = struct.unpack_from(f"<{ndim}Q", blob, 6)
    dtype = _DTYPE_CODES[code]
    expected = int(np.prod(dims)) * dtype.itemsize
    payload = blob[dims_end:]
    if len(payload) != expected:
        raise TruncatedPayloadError(
            f"payload holds {len(payload)} bytes, dims {dims} require {expected}"
        )
    return np.frombuffer(payload, dtype=dtype).reshape(dims).astype(dtype.newbyteorder("="))


def field_to_array(f: Field) -> np.ndarray:
    """Collapse (batch, channels) into one leading dim per the GFT rules."""
    merged = f.data.reshape((f.batch * f.channels,) + f.shape)
    if f.dim == 2 and merged.shape[0] == 1:
        return merged[0]
    return merged


def array_to_field(arr: np.ndarray) -> Field:
    if arr.ndim == 2:
        return Field(arr[None, None])
    return Field(arr[None])  # leading dim is channels, batch 1


def gft_write(f: Field, path) -> None:
    blob = encode_array(field_to_array(f))
    with open(path, "wb") as fh:
        fh.write(blob)


def gft_read(path) -> Field:
    with open(path, "rb") as fh:
        blob = fh.read()
    return array_to_field(decode_array(blob))


# -- PGM / PPM ---------------------------------------------------------------

def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    while pos < len(data):
        if data[pos : pos + 1].isspace():
            pos += 1
        elif data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    start = pos
    while pos < len(data) and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise UnsupportedImageFormatError("truncated image header")
    return data[start:pos], pos


def pnm_read(path) -> Field:
    """Binary P5 (grayscale) or P6 (RGB), maxval 255, scaled to [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic = data[:2]
    if magic in (b"P1", b"P2", b"P3", b"P4"):
        raise UnsupportedImageFormatError(f"{magic.decode()} (ASCII/bitmap) not supported")
    if magic not in (b"P5", b"P6"):
        raise UnsupportedImageFormatError(f"not a binary PGM/PPM file: {magic!r}")
    pos = 2
    width_b, pos = _read_token(data, pos)
    height_b, pos = _read_token(data, pos)
    maxval_b, pos = _read_token(data, pos)
    try:
        width, height, maxval = int(width_b), int(height_b), int(maxval_b)
    except ValueError as exc:
        raise UnsupportedImageFormatError(f"bad header token: {exc}") from exc
    if maxval != 255:
        raise UnsupportedImageFormatError(f"maxval must be 255, got {maxval}")
    pos += 1  # single whitespace after maxval
    channels = 1 if magic == b"P5" else 3
    count = width * height * channels
    raw = data[pos : pos + count]
    if len(raw) != count:
        raise UnsupportedImageFormatError(
            f"pixel data holds {len(raw)} bytes, header requires {count}"
        )
    pixels = np.frombuffer(raw, dtype=np.uint8).reshape(height, width, channels)
    arr = pixels.astype(np.float64).transpose(2, 0, 1) / 255.0
    return Field(arr[None])


def pnm_write(f: Field, path) -> None:
    """Write a 1- or 3-channel batch-1 field, rounding and clamping to [0, 255]."""
    if f.batch != 1 or f.dim != 2:
        raise ShapeMismatchError("image output needs a batch-1 2D field")
    if f.channels not in (1, 3):
        raise ShapeMismatchError(f"image output needs 1 or 3 channels, got {f.channels}")
    pixels = np.clip(np.rint(f.data[0] * 255.0), 0, 255).astype(np.uint8)
    h, w = f.shape
    magic = b"P5" if f.channels == 1 else b"P6"
    header = magic + f"\n{w} {h}\n255\n".encode()
    body = pixels.transpose(1, 2, 0).tobytes()
    with open(path, "wb") as fh:
        fh.write(header + body)
