"""Synthetic tensor generation and the ``DNT1`` binary tensor file format.

File layout, all little-endian::

    magic    4 bytes   b"DNT1"
    version  u32       1
    N        u32       number of modes
    dims     N x u64
    payload  I x f64   entries in natural linearization
"""

from __future__ import annotations

import struct
from math import prod
from pathlib import Path

import numpy as np

from .errors import FormatError, ResourceError
from .tensor import DenseTensor, Shape, as_shape

MAGIC = b"DNT1"
VERSION = 1
_HEAD = struct.Struct("<4sII")
_LE_F64 = np.dtype("<f8")

DEFAULT_MAX_BYTES = 8 * 2**30


def plan_tensor(dims, max_bytes: int | None = DEFAULT_MAX_BYTES) -> tuple[Shape, int]:
    """Validate ``dims`` and return the shape with its buffer size in bytes."""
    shape = as_shape(dims)
    nbytes = shape.size * 8
    if max_bytes is not None and nbytes > max_bytes:
        raise ResourceError(
            f"tensor {shape.dims} needs {nbytes} bytes, over the {max_bytes}-byte budget")
    return shape, nbytes


def gen_tensor(dims, seed=None, distribution: str = "uniform",
               max_bytes: int | None = DEFAULT_MAX_BYTES) -> DenseTensor:
    """Reproducible synthetic tensor with ``uniform`` [0, 1) or ``ones`` entries."""
    shape, _ = plan_tensor(dims, max_bytes)
    if distribution == "uniform":
        values = np.random.default_rng(seed).random(shape.size)
    elif distribution == "ones":
        values = np.ones(shape.size)
    else:
        raise ValueError(f"unknown distribution {distribution!r}")
    return DenseTensor(shape, values)


def write_tensor(path, tensor: DenseTensor):
    path = Path(path)
    dims = tensor.dims
    with path.open("wb") as f:
        f.write(_HEAD.pack(MAGIC, VERSION, len(dims)))
        f.write(struct.pack(f"<{len(dims)}Q", *dims))
        f.write(tensor.values.astype(_LE_F64, copy=False).tobytes())


def read_tensor(path) -> DenseTensor:
    data = Path(path).read_bytes()
    if len(data) < _HEAD.size:
        raise FormatError(f"file holds {len(data)} bytes, too short for a header", len(data))
    magic, version, ndim = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", 0)
    if version != VERSION:
        raise FormatError(f"unsupported format version {version}", 4)
    if ndim < 1:
        raise FormatError("tensor must have at least one mode", 8)
    pos = _HEAD.size
    need = pos + 8 * ndim
    if len(data) < need:
        raise FormatError(f"dims truncated: expected {need} header bytes, got {len(data)}",
                          len(data))
    dims = struct.unpack_from(f"<{ndim}Q", data, pos)
    pos = need
    if any(d < 1 for d in dims):
        raise FormatError(f"nonpositive extent in {dims}", _HEAD.size)
    expected = prod(dims) * 8
    actual = len(data) - pos
    if actual != expected:
        raise FormatError(
            f"payload length mismatch: expected {expected} bytes, got {actual}", pos + min(actual, expected))
    values = np.frombuffer(data, dtype=_LE_F64, offset=pos).astype(np.float64)
    return DenseTensor(dims, values)
