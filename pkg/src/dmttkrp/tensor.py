"""Dense tensors in natural linearization and zero-copy matricization views.

Entry ``(i_0, ..., i_{N-1})`` of a tensor with extents ``(I_0, ..., I_{N-1})``
lives at offset ``sum_n i_n * L_n`` where ``L_n = I_0 * ... * I_{n-1}``
(generalized column-major order). Every matricization used by the MTTKRP
kernels can then be described as a set of row- or column-major blocks over
the unmodified buffer.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterator, Sequence

import numpy as np

from .errors import BoundsError, DimensionError

ROW_MAJOR = "row"
COL_MAJOR = "col"


@dataclass(frozen=True)
class Shape:
    """Extents of an N-way tensor plus the derived left/right products."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 1:
            raise DimensionError("a tensor needs at least one mode")
        if any(d < 1 for d in dims):
            raise DimensionError(f"all extents must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        """Total number of entries ``I``."""
        return prod(self.dims)

    def left(self, n: int) -> int:
        """Product of the extents of modes ``0..n-1``."""
        self._check_mode(n)
        return prod(self.dims[:n])

    def right(self, n: int) -> int:
        """Product of the extents of modes ``n+1..N-1``."""
        self._check_mode(n)
        return prod(self.dims[n + 1:])

    def unfold(self, n: int) -> int:
        """Number of columns of the mode-``n`` matricization."""
        return self.left(n) * self.right(n)

    @property
    def strides(self) -> tuple[int, ...]:
        return tuple(prod(self.dims[:k]) for k in range(self.ndim))

    def _check_mode(self, n):
        if not 0 <= n < self.ndim:
            raise BoundsError(f"mode {n} out of range for a {self.ndim}-way tensor")

    def __iter__(self):
        return iter(self.dims)

    def __len__(self):
        return len(self.dims)


def as_shape(shape) -> Shape:
    return shape if isinstance(shape, Shape) else Shape(tuple(shape))


def linearize(shape, index: Sequence[int]) -> int:
    """Offset of a multi-index in natural linearization.

    >>> linearize((2, 3, 4), (1, 0, 1))
    7
    """
    shape = as_shape(shape)
    if len(index) != shape.ndim:
        raise DimensionError(f"expected {shape.ndim} coordinates, got {len(index)}")
    offset = 0
    stride = 1
    for k, (i, d) in enumerate(zip(index, shape.dims)):
        if not 0 <= i < d:
            raise BoundsError(f"coordinate {i} out of range for mode {k} of extent {d}")
        offset += int(i) * stride
        stride *= d
    return offset


def delinearize(shape, offset: int) -> tuple[int, ...]:
    """Inverse of :func:`linearize`."""
    shape = as_shape(shape)
    if not 0 <= offset < shape.size:
        raise BoundsError(f"offset {offset} out of range for {shape.size} entries")
    coords = []
    for d in shape.dims:
        offset, i = divmod(offset, d)
        coords.append(i)
    return tuple(coords)


def delinearize_many(shape, offsets) -> np.ndarray:
    """Vectorized :func:`delinearize`; returns an ``(N, len(offsets))`` int64 array."""
    shape = as_shape(shape)
    rest = np.asarray(offsets, dtype=np.int64).copy()
    if rest.size and (rest.min() < 0 or rest.max() >= shape.size):
        raise BoundsError("offset out of range")
    coords = np.empty((shape.ndim, rest.size), dtype=np.int64)
    for k, d in enumerate(shape.dims):
        coords[k] = rest % d
        rest //= d
    return coords


class DenseTensor:
    """An N-way tensor of float64 values in natural linearization.

    The value buffer is flagged read-only on construction; kernels only ever
    take views of it.

    Parameters
    ----------
    shape : Shape or sequence of int
    values : array_like
        Flat buffer of ``prod(shape)`` entries in natural linearization.
    """

    def __init__(self, shape, values):
        self.shape = as_shape(shape)
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.ndim != 1:
            raise DimensionError("values must be a flat buffer")
        if values.size != self.shape.size:
            raise DimensionError(
                f"buffer holds {values.size} values but shape {self.shape.dims} "
                f"needs {self.shape.size}"
            )
        view = values.view()
        view.flags.writeable = False
        self.values = view

    @classmethod
    def from_array(cls, array) -> DenseTensor:
        """Wrap an N-d array indexed as ``array[i_0, ..., i_{N-1}]``."""
        array = np.asarray(array, dtype=np.float64)
        if array.ndim == 0:
            raise DimensionError("need at least a 1-d array")
        return cls(array.shape, array.ravel(order="F"))

    def to_array(self) -> np.ndarray:
        """Read-only N-d view with ``a[i_0, ..., i_{N-1}]`` indexing."""
        return self.values.reshape(self.shape.dims, order="F")

    @property
    def dims(self) -> tuple[int, ...]:
        return self.shape.dims

    @property
    def ndim(self) -> int:
        return self.shape.ndim

    @property
    def size(self) -> int:
        return self.shape.size

    def __getitem__(self, index):
        return float(self.values[linearize(self.shape, index)])

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def __repr__(self):
        return f"DenseTensor(dims={self.dims})"


@dataclass(frozen=True)
class MatricizationView:
    """Layout of a matricization as equally sized blocks over a flat buffer.

    Block ``j`` occupies ``[j * block_stride, j * block_stride + block_rows *
    block_cols)``. Column ``c`` of block ``j`` is column ``j * block_cols + c``
    of the full matricization.
    """

    modes: tuple[int, int]
    block_count: int
    block_rows: int
    block_cols: int
    block_layout: str
    block_stride: int

    @property
    def rows(self) -> int:
        return self.block_rows

    @property
    def cols(self) -> int:
        return self.block_count * self.block_cols

    def offset(self, block: int, row: int, col: int) -> int:
        if not (0 <= block < self.block_count and 0 <= row < self.block_rows
                and 0 <= col < self.block_cols):
            raise BoundsError(f"({block}, {row}, {col}) outside the view")
        base = block * self.block_stride
        if self.block_layout == ROW_MAJOR:
            return base + row * self.block_cols + col
        return base + row + col * self.block_rows

    def block(self, values: np.ndarray, j: int) -> np.ndarray:
        """Zero-copy ``block_rows x block_cols`` array for block ``j``."""
        start = j * self.block_stride
        flat = values[start:start + self.block_rows * self.block_cols]
        order = "C" if self.block_layout == ROW_MAJOR else "F"
        return flat.reshape((self.block_rows, self.block_cols), order=order)

    def blocks(self, values: np.ndarray) -> Iterator[np.ndarray]:
        for j in range(self.block_count):
            yield self.block(values, j)

    def matrix(self, values: np.ndarray) -> np.ndarray:
        """The whole matricization as a view; only valid when it is one block."""
        if self.block_count != 1:
            raise DimensionError("matricization spans several blocks; use block()")
        return self.block(values, 0)


def matricize_view(tensor: DenseTensor, n: int) -> MatricizationView:
    """Block layout of the mode-``n`` matricization ``X_(n)``.

    Mode 0 is a single column-major block, mode ``N-1`` a single row-major
    block, and an internal mode ``R_n`` row-major ``I_n x L_n`` blocks.
    """
    shape = tensor.shape if isinstance(tensor, DenseTensor) else as_shape(tensor)
    shape._check_mode(n)
    rows = shape.dims[n]
    L, R = shape.left(n), shape.right(n)
    if n == 0:
        return MatricizationView((0, 0), 1, rows, R, COL_MAJOR, shape.size)
    if n == shape.ndim - 1:
        return MatricizationView((n, n), 1, rows, L, ROW_MAJOR, shape.size)
    return MatricizationView((n, n), R, rows, L, ROW_MAJOR, rows * L)


def matricize_range_view(tensor: DenseTensor, n: int) -> MatricizationView:
    """Layout of ``X_(0:n)``: one column-major ``(L_n I_n) x R_n`` block."""
    shape = tensor.shape if isinstance(tensor, DenseTensor) else as_shape(tensor)
    shape._check_mode(n)
    rows = shape.left(n) * shape.dims[n]
    return MatricizationView((0, n), 1, rows, shape.right(n), COL_MAJOR, shape.size)


class MultiIndex:
    """Mixed-radix counter whose last digit varies fastest."""

    def __init__(self, radices: Sequence[int], digits: Sequence[int] | None = None):
        self.radices = [int(r) for r in radices]
        if not self.radices or any(r < 1 for r in self.radices):
            raise DimensionError(f"radices must be positive, got {self.radices}")
        self.digits = [0] * len(self.radices) if digits is None else [int(d) for d in digits]
        if len(self.digits) != len(self.radices) or any(
            not 0 <= d < r for d, r in zip(self.digits, self.radices)
        ):
            raise BoundsError(f"digits {self.digits} invalid for radices {self.radices}")

    @property
    def total(self) -> int:
        return prod(self.radices)

    @property
    def flat(self) -> int:
        value = 0
        for d, r in zip(self.digits, self.radices):
            value = value * r + d
        return value

    def increment(self) -> int:
        """Advance by one; return the number of trailing digits touched.

        Past the final position the counter wraps to all zeros and the full
        length is returned.
        """
        changed = 0
        for z in range(len(self.digits) - 1, -1, -1):
            changed += 1
            self.digits[z] += 1
            if self.digits[z] < self.radices[z]:
                return changed
            self.digits[z] = 0
        return changed

    def init_from_row(self, flat: int) -> MultiIndex:
        """Set the digits to the mixed-radix decomposition of ``flat``."""
        if not 0 <= flat < self.total:
            raise BoundsError(f"row {flat} out of range for {self.total} rows")
        for z in range(len(self.radices) - 1, -1, -1):
            flat, self.digits[z] = divmod(flat, self.radices[z])
        return self

    def __repr__(self):
        return f"MultiIndex(radices={self.radices}, digits={self.digits})"


def increment(mi: MultiIndex) -> int:
    return mi.increment()


def init_from_row(mi: MultiIndex, flat: int) -> MultiIndex:
    return mi.init_from_row(flat)
