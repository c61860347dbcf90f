"""CP decomposition by alternating least squares."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError
from .kernels import MttkrpRequest, default_algorithm, is_external, normalize_name, run
from .khatri_rao import krp
from .linalg import gram_hadamard, solve_psd
from .tensor import DenseTensor
from .timing import Breakdown, now


@dataclass
class KruskalModel:
    """``Y(i_0, ..., i_{N-1}) = sum_c weights[c] * prod_k factors[k][i_k, c]``."""

    factors: list
    weights: np.ndarray

    def __post_init__(self):
        self.factors = [np.array(u, dtype=np.float64, order="C") for u in self.factors]
        self.weights = np.array(self.weights, dtype=np.float64)
        C = self.weights.shape[0]
        if any(u.ndim != 2 or u.shape[1] != C for u in self.factors):
            raise DimensionError("every factor needs one column per weight")

    @property
    def rank(self) -> int:
        return self.weights.shape[0]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(u.shape[0] for u in self.factors)

    def copy(self) -> KruskalModel:
        return KruskalModel([u.copy() for u in self.factors], self.weights.copy())

    def normalize(self) -> KruskalModel:
        """Scale every factor column to unit norm, moving the scale into the weights."""
        for u in self.factors:
            norms = np.linalg.norm(u, axis=0)
            nz = norms > 0
            u[:, nz] /= norms[nz]
            self.weights = self.weights * norms
        return self

    def full(self) -> DenseTensor:
        """Dense tensor of the model, via ``X_(0) = U_0 diag(w) (U_{N-1} ⊙ ... ⊙ U_1)^T``."""
        U = self.factors
        if len(U) == 1:
            return DenseTensor(self.dims, U[0] @ self.weights)
        K = krp(U[:0:-1])
        return DenseTensor(self.dims, ((U[0] * self.weights) @ K.T).ravel(order="F"))


def random_model(dims: Sequence[int], rank: int, seed=None) -> KruskalModel:
    """Factors drawn uniformly from [0, 1), then normalized."""
    rng = np.random.default_rng(seed)
    factors = [rng.random((d, rank)) for d in dims]
    return KruskalModel(factors, np.ones(rank)).normalize()


@dataclass
class AlsConfig:
    """Stopping rule and kernel selection for :func:`cp_als`.

    ``algo`` is either one algorithm name for every mode or a per-mode list;
    ``"auto"`` uses one-step on the outer modes and two-step on the inner ones.
    Two-step requested on an outer mode runs one-step, which is what it
    reduces to there.
    """

    max_iters: int = 50
    tol: float = 1e-6
    seed: int | None = 0
    threads: int = 1
    algo: str | Sequence[str] = "auto"
    order: str = "auto"

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.tol < 0:
            raise ValueError("tol must be nonnegative")

    def algo_for(self, shape, n: int) -> str:
        name = self.algo if isinstance(self.algo, str) else self.algo[n]
        name = normalize_name(name)
        if name == "auto":
            return default_algorithm(shape, n)
        if name == "two_step" and is_external(shape, n):
            return "one_step"
        return name


@dataclass
class IterationRecord:
    iteration: int
    fit: float
    residual: float
    mode_times: list = field(default_factory=list)
    algos: list = field(default_factory=list)
    seconds: float = 0.0


@dataclass
class AlsTrace:
    records: list = field(default_factory=list)
    degenerate: bool = False

    @property
    def fits(self) -> list[float]:
        return [r.fit for r in self.records]

    @property
    def residuals(self) -> list[float]:
        return [r.residual for r in self.records]

    @property
    def iterations(self) -> int:
        return len(self.records)


def _residual_sq(xnorm_sq, M, Un, weights, H):
    inner = float(np.sum(M * (Un * weights)))
    ynorm_sq = float(weights @ (H * (Un.T @ Un)) @ weights)
    return max(xnorm_sq - 2.0 * inner + ynorm_sq, 0.0)


def fit(tensor: DenseTensor, model: KruskalModel, mttkrp_last: np.ndarray | None = None,
        threads: int = 1) -> float:
    """``1 - ||X - Y|| / ||X||`` without forming ``Y``.

    Uses ``||X||^2 - 2 <X, Y> + ||Y||^2`` with the inner product taken from the
    last mode's MTTKRP (pass ``mttkrp_last`` to reuse one). Returns NaN for an
    all-zero tensor.
    """
    xnorm = tensor.norm()
    if xnorm == 0:
        return float("nan")
    return 1.0 - residual_norm(tensor, model, mttkrp_last, threads) / xnorm


def residual_norm(tensor, model, mttkrp_last=None, threads=1) -> float:
    """Absolute ``||X - Y||_F``."""
    n = tensor.ndim - 1
    if mttkrp_last is None:
        algo = default_algorithm(tensor.shape, n)
        mttkrp_last = run(MttkrpRequest(tensor, model.factors, n, threads, algo)).M
    H = gram_hadamard(model.factors, skip=n)
    return float(np.sqrt(_residual_sq(tensor.norm() ** 2, mttkrp_last,
                                      model.factors[n], model.weights, H)))


def _check_model(tensor, model):
    if model.dims != tensor.dims:
        raise DimensionError(f"model dims {model.dims} do not match tensor dims {tensor.dims}")


def als_iterate(tensor: DenseTensor, model: KruskalModel, config: AlsConfig,
                iteration: int = 0, xnorm_sq: float | None = None):
    """One sweep over the modes in order ``0..N-1``, updating ``model`` in place."""
    _check_model(tensor, model)
    if xnorm_sq is None:
        xnorm_sq = tensor.norm() ** 2
    U = model.factors
    record = IterationRecord(iteration, float("nan"), float("nan"))
    t0 = now()
    for n in range(tensor.ndim):
        algo = config.algo_for(tensor.shape, n)
        result = run(MttkrpRequest(tensor, U, n, config.threads, algo, config.order))
        bd = result.breakdown
        t1 = now()
        H = gram_hadamard(U, skip=n)
        U[n] = np.ascontiguousarray(solve_psd(H, result.M))
        norms = np.linalg.norm(U[n], axis=0)
        nz = norms > 0
        U[n][:, nz] /= norms[nz]
        model.weights = norms
        bd.other += now() - t1
        bd.total += now() - t1
        record.mode_times.append(bd)
        record.algos.append(algo)
    if xnorm_sq > 0:
        res = np.sqrt(_residual_sq(xnorm_sq, result.M, U[-1], model.weights, H))
        record.residual = float(res / np.sqrt(xnorm_sq))
        record.fit = 1.0 - record.residual
    record.seconds = now() - t0
    return model, record


def cp_als(tensor: DenseTensor, rank: int, config: AlsConfig | None = None,
           init: KruskalModel | None = None):
    """Fit a rank-``rank`` CP model by alternating least squares.

    Iterates until the fit changes by less than ``config.tol`` or
    ``config.max_iters`` sweeps have run.

    Returns
    -------
    model : KruskalModel
    trace : AlsTrace
    """
    if rank < 1:
        raise ValueError("rank must be at least 1")
    config = config or AlsConfig()
    trace = AlsTrace()
    xnorm_sq = tensor.norm() ** 2
    if xnorm_sq == 0:
        zero = KruskalModel([np.zeros((d, rank)) for d in tensor.dims], np.zeros(rank))
        trace.degenerate = True
        return zero, trace
    model = init.copy() if init is not None else random_model(tensor.dims, rank, config.seed)
    _check_model(tensor, model)
    prev = None
    for it in range(config.max_iters):
        model, rec = als_iterate(tensor, model, config, it, xnorm_sq)
        trace.records.append(rec)
        if prev is not None and abs(rec.fit - prev) < config.tol:
            break
        prev = rec.fit
    return model, trace
