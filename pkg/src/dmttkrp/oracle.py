"""Brute-force references for testing and for the benchmark's ``--check`` gate.

Everything here evaluates definitions entry by entry: no matricization, no
matrix multiply, no threads. Work is vectorized over chunks of entries only
to keep million-entry checks tolerable.
"""

from __future__ import annotations

import numpy as np

from .errors import SizeGuardError
from .tensor import DenseTensor, delinearize_many

MAX_ORACLE_ENTRIES = 10**6
_CHUNK = 1 << 14


def _guard(size, limit):
    limit = MAX_ORACLE_ENTRIES if limit is None else limit
    if size > limit:
        raise SizeGuardError(
            f"refusing brute-force evaluation of {size} entries (limit {limit})")


def krp_kron_oracle(inputs) -> np.ndarray:
    """Khatri-Rao product built column by column from Kronecker products."""
    mats = [np.asarray(u, dtype=np.float64) for u in inputs]
    C = mats[0].shape[1]
    cols = []
    for c in range(C):
        col = mats[0][:, c]
        for u in mats[1:]:
            col = np.kron(col, u[:, c])
        cols.append(col)
    return np.stack(cols, axis=1)


def mttkrp_loops_oracle(tensor: DenseTensor, factors, n: int,
                        max_entries: int | None = None) -> np.ndarray:
    """``M(i_n, c) = sum X(i_0..i_{N-1}) prod_{k != n} U_k(i_k, c)`` by enumeration."""
    _guard(tensor.size, max_entries)
    factors = [np.asarray(u, dtype=np.float64) for u in factors]
    C = factors[0].shape[1]
    M = np.zeros((tensor.dims[n], C))
    for s in range(0, tensor.size, _CHUNK):
        offsets = np.arange(s, min(s + _CHUNK, tensor.size))
        idx = delinearize_many(tensor.shape, offsets)
        term = np.repeat(tensor.values[offsets][:, None], C, axis=1)
        for k, u in enumerate(factors):
            if k != n:
                term *= u[idx[k]]
        np.add.at(M, idx[n], term)
    return M


def reconstruct_oracle(factors, weights=None, max_entries: int | None = None) -> DenseTensor:
    """Materialize ``Y(i) = sum_c w_c prod_k U_k(i_k, c)`` entry by entry."""
    factors = [np.asarray(u, dtype=np.float64) for u in factors]
    dims = tuple(u.shape[0] for u in factors)
    C = factors[0].shape[1]
    w = np.ones(C) if weights is None else np.asarray(weights, dtype=np.float64)
    size = int(np.prod(dims))
    _guard(size, max_entries)
    values = np.empty(size)
    for s in range(0, size, _CHUNK):
        offsets = np.arange(s, min(s + _CHUNK, size))
        idx = delinearize_many(dims, offsets)
        term = np.repeat(w[None, :], offsets.size, axis=0)
        for k, u in enumerate(factors):
            term *= u[idx[k]]
        values[offsets] = term.sum(axis=1)
    return DenseTensor(dims, values)
