"""Dense matrix kernels used by the MTTKRP and CP-ALS code.

Matrix products go through numpy's BLAS binding. Operands may be plain
arrays or :class:`MatView` descriptors over a flat buffer; either way they
are consumed in place, never reordered.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from threadpoolctl import ThreadpoolController

from .errors import DimensionError
from .tensor import COL_MAJOR, ROW_MAJOR

PSD_PIVOT_TOL = 1e-12
PSD_EIG_TOL = 1e-12


@dataclass(frozen=True)
class MatView:
    """A ``rows x cols`` matrix stored in ``buffer`` starting at ``offset``.

    ``ld`` is the distance between consecutive rows (row-major) or columns
    (column-major); it defaults to the packed value. With ``trans`` set the
    operand is the transpose of the stored matrix.
    """

    buffer: np.ndarray
    rows: int
    cols: int
    layout: str = ROW_MAJOR
    trans: bool = False
    offset: int = 0
    ld: int | None = None

    def __post_init__(self):
        if self.layout not in (ROW_MAJOR, COL_MAJOR):
            raise ValueError(f"unknown layout {self.layout!r}")
        ld = self.ld
        if ld is None:
            ld = self.cols if self.layout == ROW_MAJOR else self.rows
            object.__setattr__(self, "ld", ld)
        minor = self.cols if self.layout == ROW_MAJOR else self.rows
        major = self.rows if self.layout == ROW_MAJOR else self.cols
        if ld < minor:
            raise DimensionError(f"leading stride {ld} shorter than {minor}")
        if self.rows and self.cols:
            last = self.offset + (major - 1) * ld + minor - 1
            if self.offset < 0 or last >= self.buffer.size:
                raise DimensionError("view extends past the end of its buffer")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.cols, self.rows) if self.trans else (self.rows, self.cols)

    def array(self) -> np.ndarray:
        item = self.buffer.itemsize
        if self.layout == ROW_MAJOR:
            strides = (self.ld * item, item)
        else:
            strides = (item, self.ld * item)
        a = np.lib.stride_tricks.as_strided(
            self.buffer[self.offset:], shape=(self.rows, self.cols), strides=strides,
            writeable=self.buffer.flags.writeable)
        return a.T if self.trans else a


def as_array(m) -> np.ndarray:
    return m.array() if isinstance(m, MatView) else np.asarray(m)


def gemm_acc(A, B, C, accumulate: bool = False):
    """``C = A @ B`` or ``C += A @ B`` with ``C`` written in place."""
    a, b, c = as_array(A), as_array(B), as_array(C)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0] \
            or c.shape != (a.shape[0], b.shape[1]):
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape} into {c.shape}")
    if accumulate:
        c += a @ b
    else:
        np.matmul(a, b, out=c)
    return c


def gemv(A, x, y, accumulate: bool = False):
    """``y = A @ x`` (or ``y += A @ x``) with ``y`` written in place."""
    a, x, y = as_array(A), np.asarray(x), np.asarray(y)
    if a.ndim != 2 or x.shape != (a.shape[1],) or y.shape != (a.shape[0],):
        raise DimensionError(f"cannot apply {a.shape} to {x.shape} into {y.shape}")
    if accumulate:
        y += a @ x
    else:
        np.matmul(a, x, out=y)
    return y


def _symmetric_gram(u: np.ndarray) -> np.ndarray:
    g = u.T @ u
    upper = np.triu(g)
    return upper + np.triu(g, 1).T


def gram_hadamard(factors, skip: int | None = None) -> np.ndarray:
    """Hadamard product of ``U_k^T U_k`` over every ``k != skip``."""
    C = factors[0].shape[1]
    if any(u.shape[1] != C for u in factors):
        raise DimensionError("factor matrices must share a column count")
    H = np.ones((C, C))
    for k, u in enumerate(factors):
        if k != skip:
            H *= _symmetric_gram(np.asarray(u, dtype=np.float64))
    return H


def solve_psd(H: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Solve ``U H = M`` for symmetric positive semidefinite ``H``.

    Uses a Cholesky factorization when every pivot exceeds
    ``PSD_PIVOT_TOL * trace(H)``; otherwise applies the pseudoinverse built
    from an eigendecomposition with small eigenvalues discarded.
    """
    H = np.asarray(H, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    C = H.shape[0]
    if H.shape != (C, C) or M.ndim != 2 or M.shape[1] != C:
        raise DimensionError(f"incompatible shapes {H.shape} and {M.shape}")
    scale = np.trace(H)
    if scale > 0:
        try:
            L = np.linalg.cholesky(H)
        except np.linalg.LinAlgError:
            L = None
        if L is not None and np.all(np.diag(L) ** 2 > PSD_PIVOT_TOL * scale):
            return scipy.linalg.cho_solve((L, True), M.T).T
    return M @ pinv_psd(H)


def pinv_psd(H: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(H)
    top = w.max(initial=0.0)
    if top <= 0:
        return np.zeros_like(H)
    keep = w > PSD_EIG_TOL * top
    Vk = V[:, keep]
    return (Vk / w[keep]) @ Vk.T


def parallel_reduce(accumulators, pool=None) -> np.ndarray:
    """Elementwise sum by a pairwise tree in fixed index order.

    Each tree level may be spread over ``pool``; the association order, and
    therefore the bits of the result, depend only on ``len(accumulators)``.
    """
    level = list(accumulators)
    if not level:
        raise ValueError("nothing to reduce")
    shape = level[0].shape
    if any(a.shape != shape for a in level):
        raise DimensionError("accumulators differ in shape")
    if len(level) == 1:
        return np.array(level[0], copy=True)
    while len(level) > 1:
        pairs = [(level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if pool is not None and len(pairs) > 1:
            summed = list(pool.map(lambda p: p[0] + p[1], pairs))
        else:
            summed = [a + b for a, b in pairs]
        if len(level) % 2:
            summed.append(level[-1])
        level = summed
    return level[0]


_blas_controller = None


def _blas():
    # Scanning loaded libraries costs ~0.5 ms, so do it once.
    global _blas_controller
    if _blas_controller is None:
        _blas_controller = ThreadpoolController().select(user_api="blas")
    return _blas_controller


@contextmanager
def blas_threads(n: int | None):
    """Limit the BLAS thread pool to ``n`` threads inside the block."""
    if n is None:
        yield
        return
    ctl = _blas()
    if all(lib.num_threads == n for lib in ctl.lib_controllers):
        yield
        return
    with ctl.limit(limits=int(n)):
        yield
