"""Row-wise Khatri-Rao products.

Row ``j`` of ``K = U_0 ⊙ U_1 ⊙ ... ⊙ U_{Z-1}`` is the Hadamard product of one
row from each input, selected by the mixed-radix digits of ``j`` (the last
input varies fastest). The reuse variant keeps the ``Z-2`` leading partial
products in a small scratch matrix so that, between carries, each output row
costs a single Hadamard product.

All variants multiply left to right, ``((U_0 ∘ U_1) ∘ U_2) ∘ ...``, so their
results agree bit for bit.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from math import prod
from typing import Sequence

import numpy as np

from .errors import DimensionError
from .tensor import MultiIndex

_NAIVE_CHUNK = 1 << 15


class HadamardCounter:
    """Thread-safe tally of C-length Hadamard products."""

    def __init__(self):
        self.count = 0
        self._lock = threading.Lock()

    def add(self, k: int):
        with self._lock:
            self.count += int(k)


def check_inputs(inputs: Sequence[np.ndarray]) -> list[np.ndarray]:
    if len(inputs) == 0:
        raise ValueError("Khatri-Rao product needs at least one input matrix")
    mats = [np.ascontiguousarray(u, dtype=np.float64) for u in inputs]
    for u in mats:
        if u.ndim != 2:
            raise DimensionError(f"factor matrices must be 2-d, got shape {u.shape}")
    C = mats[0].shape[1]
    if any(u.shape[1] != C for u in mats):
        raise DimensionError(
            f"column counts differ: {[u.shape[1] for u in mats]}")
    return mats


def row_partition(rows: int, parts: int) -> list[tuple[int, int]]:
    """Split ``range(rows)`` into ``parts`` contiguous blocks.

    The first ``rows % parts`` blocks get one extra row.
    """
    parts = max(1, int(parts))
    base, extra = divmod(rows, parts)
    bounds = []
    start = 0
    for t in range(parts):
        stop = start + base + (1 if t < extra else 0)
        bounds.append((start, stop))
        start = stop
    return bounds


class KrpState:
    """Multi-index plus the table of partial Hadamard products.

    Row ``z`` of ``partials`` holds ``U_0(l_0) ∘ ... ∘ U_{z+1}(l_{z+1})``.
    Requires ``Z >= 3``.
    """

    def __init__(self, inputs: Sequence[np.ndarray], start_row: int = 0):
        if len(inputs) < 3:
            raise ValueError("KrpState needs at least 3 inputs; use krp_small")
        self.inputs = inputs
        self.mi = MultiIndex([u.shape[0] for u in inputs]).init_from_row(start_row)
        self.partials = np.empty((len(inputs) - 2, inputs[0].shape[1]))
        self.hadamards = 0
        self._refresh(0)

    def _refresh(self, first: int):
        U, d, P = self.inputs, self.mi.digits, self.partials
        for z in range(first, len(U) - 2):
            if z == 0:
                np.multiply(U[0][d[0]], U[1][d[1]], out=P[0])
            else:
                np.multiply(P[z - 1], U[z + 1][d[z + 1]], out=P[z])
            self.hadamards += 1

    def row(self, out=None) -> np.ndarray:
        """Current output row: last partial times the last input's row."""
        self.hadamards += 1
        return np.multiply(self.partials[-1], self.inputs[-1][self.mi.digits[-1]], out=out)

    def advance(self, steps: int = 1):
        """Move ``steps`` rows ahead without crossing more than one carry."""
        if steps > 1:
            self.mi.digits[-1] += steps - 1
        changed = self.mi.increment()
        lowest = len(self.inputs) - changed
        if lowest < len(self.inputs) - 1:
            self._refresh(max(0, lowest - 1))


def krp_row(state: KrpState, inputs=None) -> np.ndarray:
    """Row of the product selected by ``state``'s multi-index."""
    return state.row()


def _fill_rows(mats, start, stop, out) -> int:
    """Write rows ``[start, stop)`` of the reuse KRP into ``out``; return Hadamard count."""
    Z = len(mats)
    if stop <= start:
        return 0
    if Z == 1:
        out[:] = mats[0][start:stop]
        return 0
    if Z == 2:
        A, B = mats
        rows = np.arange(start, stop)
        ra, rb = np.divmod(rows, B.shape[0])
        np.multiply(A[ra], B[rb], out=out)
        return stop - start
    last = mats[-1]
    J = last.shape[0]
    state = KrpState(mats, start)
    row = start
    while row < stop:
        d = state.mi.digits[-1]
        k = min(J - d, stop - row)
        np.multiply(state.partials[-1], last[d:d + k], out=out[row - start:row - start + k])
        state.hadamards += k
        row += k
        if row < stop:
            state.advance(k)
    return state.hadamards


def krp_rows(inputs, start: int, stop: int, counter: HadamardCounter | None = None) -> np.ndarray:
    """Rows ``[start, stop)`` of the Khatri-Rao product, seeded from ``start``."""
    mats = check_inputs(inputs)
    out = np.empty((max(stop - start, 0), mats[0].shape[1]))
    count = _fill_rows(mats, start, stop, out)
    if counter is not None:
        counter.add(count)
    return out


def _run_blocks(fill, mats, thread_count, counter):
    rows = prod(u.shape[0] for u in mats)
    out = np.empty((rows, mats[0].shape[1]))
    blocks = [b for b in row_partition(rows, thread_count) if b[1] > b[0]]

    def work(block):
        s, e = block
        return fill(mats, s, e, out[s:e])

    if len(blocks) <= 1:
        counts = [work(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            counts = list(pool.map(work, blocks))
    if counter is not None:
        counter.add(sum(counts))
    return out


def krp(inputs, thread_count: int = 1, counter: HadamardCounter | None = None) -> np.ndarray:
    """Khatri-Rao product with reuse of partial Hadamard products.

    Parameters
    ----------
    inputs : sequence of (J_z, C) arrays
    thread_count : int
        Output rows are split into this many contiguous blocks, each filled by
        its own worker with a private :class:`KrpState`. The result does not
        depend on ``thread_count``.
    counter : HadamardCounter, optional
        Receives the number of C-length Hadamard products performed.

    Returns
    -------
    (prod J_z, C) row-major array
    """
    return _run_blocks(_fill_rows, check_inputs(inputs), thread_count, counter)


def _fill_rows_naive(mats, start, stop, out) -> int:
    Z = len(mats)
    radices = [u.shape[0] for u in mats]
    for s in range(start, stop, _NAIVE_CHUNK):
        e = min(stop, s + _NAIVE_CHUNK)
        rest = np.arange(s, e)
        idx = [None] * Z
        for z in range(Z - 1, -1, -1):
            rest, idx[z] = np.divmod(rest, radices[z])
        dst = out[s - start:e - start]
        if Z == 1:
            dst[:] = mats[0][idx[0]]
            continue
        np.multiply(mats[0][idx[0]], mats[1][idx[1]], out=dst)
        for z in range(2, Z):
            dst *= mats[z][idx[z]]
    return (stop - start) * (Z - 1)


def krp_naive(inputs, thread_count: int = 1, counter: HadamardCounter | None = None) -> np.ndarray:
    """Row-wise Khatri-Rao product without reuse (``Z-1`` Hadamards per row)."""
    return _run_blocks(_fill_rows_naive, check_inputs(inputs), thread_count, counter)


def krp_small(inputs, counter: HadamardCounter | None = None) -> np.ndarray:
    """Khatri-Rao product of one or two matrices straight from the row-wise definition."""
    mats = check_inputs(inputs)
    if len(mats) > 2:
        raise ValueError("krp_small handles one or two inputs; use krp")
    return _run_blocks(_fill_rows, mats, 1, counter)


def hadamard_count(inputs, algorithm: str = "reuse", thread_count: int = 1) -> int:
    """Run an instrumented product and return its Hadamard-product count."""
    counter = HadamardCounter()
    fn = {"reuse": krp, "naive": krp_naive}[algorithm]
    fn(inputs, thread_count, counter)
    return counter.count


def reuse_count_bound(radices: Sequence[int]) -> int:
    """Upper bound on the reuse algorithm's Hadamard count for one sequential run."""
    Z = len(radices)
    rows = prod(radices)
    if Z < 3:
        return rows if Z == 2 else 0
    return rows + -(-rows // radices[-1]) * (Z - 2) + (Z - 2)


class RowStream:
    """Consecutive rows of a Khatri-Rao product starting at ``start``.

    Used where only one row at a time is needed, e.g. one row of the right
    partial product per matricization block.
    """

    def __init__(self, mats: Sequence[np.ndarray], start: int = 0):
        self.mats = mats
        self.j = start
        self.hadamards = 0
        self._state = KrpState(mats, start) if len(mats) >= 3 else None

    def next(self) -> np.ndarray:
        mats = self.mats
        if self._state is not None:
            if self.j != self._state.mi.flat:
                self._state.advance()
            row = self._state.row()
            self.hadamards = self._state.hadamards
        elif len(mats) == 2:
            a, b = divmod(self.j, mats[1].shape[0])
            row = mats[0][a] * mats[1][b]
            self.hadamards += 1
        else:
            row = mats[0][self.j].copy()
        self.j += 1
        return row
