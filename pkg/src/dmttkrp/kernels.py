"""MTTKRP: ``M = X_(n) (U_{N-1} ⊙ ... ⊙ U_{n+1} ⊙ U_{n-1} ⊙ ... ⊙ U_0)``.

Three algorithms are provided.

``baseline``
    Gather the tensor into an explicit column-major ``X_(n)``, form the full
    Khatri-Rao product and make one matrix multiply.
``one_step``
    Multiply the matricization block by block in place. External modes split
    the columns of ``X_(n)`` across threads; internal modes split its
    ``R_n`` row-major blocks, building each block of the Khatri-Rao product
    from the left partial product and one row of the right one.
``two_step``
    Internal modes only. One large multiply against a partial Khatri-Rao
    product (the partial MTTKRP) followed by ``C`` matrix-vector products
    (the multi-TTV).

Only ``baseline`` copies tensor entries.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .khatri_rao import RowStream, krp, krp_rows
from .linalg import blas_threads, gemm_acc, gemv, parallel_reduce
from .tensor import DenseTensor, Shape, as_shape, delinearize_many, matricize_range_view, matricize_view
from .timing import Breakdown, now

ALGORITHMS = ("baseline", "one_step", "two_step")
ORDERS = ("auto", "left", "right")
LEFT_FIRST = "left"
RIGHT_FIRST = "right"

_ALIASES = {"onestep": "one_step", "twostep": "two_step", "1step": "one_step",
            "2step": "two_step", "force_left": "left", "force_right": "right"}

_GATHER_CHUNK = 1 << 20


def normalize_name(name: str) -> str:
    return _ALIASES.get(name, name)


@dataclass
class MttkrpRequest:
    """Inputs to one MTTKRP call; ``factors[mode]`` is carried but not read."""

    tensor: DenseTensor
    factors: list
    mode: int
    threads: int = 1
    algo: str = "one_step"
    two_step_order: str = "auto"

    def __post_init__(self):
        self.algo = normalize_name(self.algo)
        self.two_step_order = normalize_name(self.two_step_order)
        if self.algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algo!r}")
        if self.two_step_order not in ORDERS:
            raise ValueError(f"unknown ordering {self.two_step_order!r}")
        X = self.tensor
        if len(self.factors) != X.ndim:
            raise DimensionError(f"need {X.ndim} factor matrices, got {len(self.factors)}")
        self.factors = [np.ascontiguousarray(u, dtype=np.float64) for u in self.factors]
        C = self.factors[0].shape[1] if self.factors[0].ndim == 2 else -1
        for k, (u, d) in enumerate(zip(self.factors, X.dims)):
            if u.ndim != 2 or u.shape != (d, C):
                raise DimensionError(f"factor {k} has shape {u.shape}, expected ({d}, {C})")
        if not 0 <= self.mode < X.ndim:
            raise DimensionError(f"mode {self.mode} out of range for a {X.ndim}-way tensor")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]


@dataclass
class MttkrpResult:
    M: np.ndarray
    breakdown: Breakdown = field(default_factory=Breakdown)
    order: str | None = None


def is_external(shape, n: int) -> bool:
    return n == 0 or n == len(as_shape(shape)) - 1


def choose_order(shape, n: int) -> str:
    """Ordering of the two-step algorithm that makes the second step cheaper.

    Left first when ``L_n > R_n``; ties go right first, which needs no
    transposed operand.
    """
    shape = as_shape(shape)
    return LEFT_FIRST if shape.left(n) > shape.right(n) else RIGHT_FIRST


def _full_krp_inputs(factors, n):
    """``U_{N-1}, ..., U_{n+1}, U_{n-1}, ..., U_0``."""
    return [factors[k] for k in range(len(factors) - 1, -1, -1) if k != n]


def _krp_or_ones(mats, start, stop, C, counter=None):
    if not mats:
        return np.ones((stop - start, C))
    return krp_rows(mats, start, stop, counter)


def _pool_map(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _reduce(parts, bd, workers):
    with bd.time("reduce"):
        if workers > 1 and len(parts) > 2:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                return parallel_reduce(parts, pool)
        return parallel_reduce(parts)


def mttkrp_one_step(req: MttkrpRequest) -> MttkrpResult:
    X, U, n, T = req.tensor, req.factors, req.mode, req.threads
    shape, C = X.shape, req.rank
    In = shape.dims[n]
    bd = Breakdown()
    t_start = now()
    view = matricize_view(X, n)

    if is_external(shape, n):
        Xn = view.matrix(X.values)
        others = _full_krp_inputs(U, n)
        cols = shape.unfold(n)
        b = -(-cols // T)
        blocks = [(t * b, min((t + 1) * b, cols)) for t in range(T) if t * b < cols]

        def work(block):
            s, e = block
            local = Breakdown()
            with local.time("krp_full"):
                Kt = _krp_or_ones(others, s, e, C)
            Mt = np.empty((In, C))
            with local.time("matmul"):
                gemm_acc(Xn[:, s:e], Kt, Mt)
            return Mt, local

        with blas_threads(1):
            t0 = now()
            out = _pool_map(work, blocks, T)
            bd.absorb_parallel(now() - t0, [o[1] for o in out])
            M = _reduce([o[0] for o in out], bd, T)
        return MttkrpResult(M, bd.finish(now() - t_start))

    left = [U[k] for k in range(n - 1, -1, -1)]
    right = [U[k] for k in range(shape.ndim - 1, n, -1)]
    R = view.block_count
    with blas_threads(1 if T < R else T):
        with bd.time("krp_partial"):
            KL = krp(left, T)

        # Too few blocks to share out: one worker, parallelism inside BLAS.
        workers = T if T < R else 1
        step = -(-R // workers)
        chunks = [(s, min(s + step, R)) for s in range(0, R, step)]

        def work(chunk):
            s, e = chunk
            local = Breakdown()
            stream = RowStream(right, s)
            Mt = np.zeros((In, C))
            Kbar = np.empty_like(KL)
            for j in range(s, e):
                t0 = now()
                np.multiply(KL, stream.next(), out=Kbar)
                t1 = now()
                gemm_acc(view.block(X.values, j), Kbar, Mt, accumulate=True)
                local.krp_partial += t1 - t0
                local.matmul += now() - t1
            return Mt, local

        t0 = now()
        out = _pool_map(work, chunks, workers)
        bd.absorb_parallel(now() - t0, [o[1] for o in out])
        M = _reduce([o[0] for o in out], bd, workers)
    return MttkrpResult(M, bd.finish(now() - t_start))


def mttkrp_two_step(req: MttkrpRequest) -> MttkrpResult:
    X, U, n, T = req.tensor, req.factors, req.mode, req.threads
    shape, C = X.shape, req.rank
    if is_external(shape, n):
        raise ValueError(
            f"two_step is undefined for external mode {n}: it degenerates to "
            "one_step there, use algo=one_step")
    In, L, R = shape.dims[n], shape.left(n), shape.right(n)
    order = req.two_step_order
    if order == "auto":
        order = choose_order(shape, n)
    bd = Breakdown()
    t_start = now()
    M = np.empty((In, C))
    with blas_threads(T):
        with bd.time("krp_partial"):
            KL = krp([U[k] for k in range(n - 1, -1, -1)], T)
            KR = krp([U[k] for k in range(shape.ndim - 1, n, -1)], T)
        if order == LEFT_FIRST:
            # X_(0:n-1) is column-major, so its transpose is a row-major (I_n R_n) x L_n view.
            XlT = matricize_range_view(X, n - 1).matrix(X.values).T
            partial = np.empty((In * R, C), order="F")
            with bd.time("matmul"):
                gemm_acc(XlT, KL, partial)
            with bd.time("matvec"):
                for c in range(C):
                    block = partial[:, c].reshape((In, R), order="F")
                    gemv(block, KR[:, c], M[:, c])
        else:
            Xr = matricize_range_view(X, n).matrix(X.values)
            partial = np.empty((L * In, C), order="F")
            with bd.time("matmul"):
                gemm_acc(Xr, KR, partial)
            with bd.time("matvec"):
                for c in range(C):
                    block = partial[:, c].reshape((L, In), order="F").T
                    gemv(block, KL[:, c], M[:, c])
    return MttkrpResult(np.ascontiguousarray(M), bd.finish(now() - t_start), order)


def explicit_matricization(X: DenseTensor, n: int) -> np.ndarray:
    """Copy ``X_(n)`` into a fresh column-major ``I_n x I/I_n`` array.

    Column ``j`` holds the fibre whose remaining coordinates delinearize
    from ``j`` over the other modes in increasing order.
    """
    shape = X.shape
    strides = shape.strides
    rest_dims = [d for k, d in enumerate(shape.dims) if k != n]
    rest_strides = np.array([s for k, s in enumerate(strides) if k != n], dtype=np.int64)
    In, cols = shape.dims[n], shape.unfold(n)
    row_off = np.arange(In, dtype=np.int64) * strides[n]
    out = np.empty((In, cols), order="F")
    step = max(1, _GATHER_CHUNK // In)
    for s in range(0, cols, step):
        e = min(cols, s + step)
        if rest_dims:
            coords = delinearize_many(Shape(tuple(rest_dims)), np.arange(s, e))
            col_off = rest_strides @ coords
        else:
            col_off = np.zeros(e - s, dtype=np.int64)
        np.take(X.values, row_off[:, None] + col_off[None, :], out=out[:, s:e])
    return out


def mttkrp_baseline(req: MttkrpRequest) -> MttkrpResult:
    X, U, n, T = req.tensor, req.factors, req.mode, req.threads
    bd = Breakdown()
    t_start = now()
    with blas_threads(T):
        if n == 0:
            Xn = matricize_view(X, 0).matrix(X.values)
        else:
            with bd.time("reorder"):
                Xn = explicit_matricization(X, n)
        with bd.time("krp_full"):
            others = _full_krp_inputs(U, n)
            K = krp(others, T) if others else np.ones((1, req.rank))
        M = np.empty((X.dims[n], req.rank))
        with bd.time("matmul"):
            gemm_acc(Xn, K, M)
    return MttkrpResult(M, bd.finish(now() - t_start))


_DISPATCH = {
    "baseline": mttkrp_baseline,
    "one_step": mttkrp_one_step,
    "two_step": mttkrp_two_step,
}


def run(req: MttkrpRequest) -> MttkrpResult:
    return _DISPATCH[req.algo](req)


def default_algorithm(shape, n: int) -> str:
    """One-step for the outer modes, two-step for the inner ones."""
    return "one_step" if is_external(shape, n) else "two_step"


def mttkrp(tensor: DenseTensor, factors, mode: int, algo: str = "auto",
           threads: int = 1, order: str = "auto") -> np.ndarray:
    """Compute the mode-``mode`` MTTKRP and return the ``I_n x C`` result."""
    algo = normalize_name(algo)
    if algo == "auto":
        algo = default_algorithm(tensor.shape, mode)
    req = MttkrpRequest(tensor, list(factors), mode, threads, algo, order)
    return run(req).M
