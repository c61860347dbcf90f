"""
Three ways to compute an MTTKRP
===============================

``baseline`` reorders the tensor and does one big multiply. ``one_step``
multiplies the blocks of the unfolding in place. ``two_step`` first
contracts one side of the tensor with a partial Khatri-Rao product, then
finishes with one matrix-vector product per column.
"""

import numpy as np

from dmttkrp import MttkrpRequest, choose_order, gen_tensor
from dmttkrp.kernels import run

X = gen_tensor((60, 50, 40, 30), seed=1)
rng = np.random.default_rng(2)
U = [rng.random((d, 16)) for d in X.dims]

# All algorithms agree to rounding error. The first call of each is a warm-up.
n = 1
results = {}
for algo in ("baseline", "one_step", "two_step"):
    req = MttkrpRequest(X, U, n, algo=algo)
    run(req)
    results[algo] = run(req)
ref = results["baseline"].M
for algo, res in results.items():
    err = np.linalg.norm(res.M - ref) / np.linalg.norm(ref)
    print(f"{algo:9s} rel diff {err:.1e}  total {res.breakdown.total * 1e3:7.2f} ms")

# The breakdown shows where the time goes. Only baseline pays for reordering.
for algo, res in results.items():
    parts = {k: round(v * 1e3, 2) for k, v in res.breakdown.as_dict().items() if v and k != "total"}
    print(algo, parts)

# Two-step picks the side that leaves less work for the matrix-vector phase.
for n in (1, 2):
    print(f"mode {n}: L={X.shape.left(n)}, R={X.shape.right(n)} -> {choose_order(X.shape, n)} first")

# On the outer modes two-step has nothing to split, so it is rejected.
try:
    run(MttkrpRequest(X, U, 0, algo="two_step"))
except ValueError as exc:
    print("mode 0:", exc)
