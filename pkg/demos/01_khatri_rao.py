"""
Khatri-Rao products, row by row
===============================

Each row of a Khatri-Rao product is the elementwise product of one row from
every input. Consecutive rows share most of those rows, so partial products
can be kept and reused instead of recomputed.
"""

import numpy as np

from dmttkrp import hadamard_count, krp, krp_naive
from dmttkrp.oracle import krp_kron_oracle

rng = np.random.default_rng(0)
mats = [rng.standard_normal((J, 4)) for J in (6, 5, 7, 8)]

# The reuse and naive kernels give exactly the column-wise Kronecker result.
K = krp(mats)
print("shape:", K.shape)
print("reuse == kron:", np.array_equal(K, krp_kron_oracle(mats)))
print("naive == kron:", np.array_equal(krp_naive(mats), K))

# Row 0 is the product of row 0 of every input; the last input varies fastest.
print("row 1 check:", np.array_equal(K[1], mats[0][0] * mats[1][0] * mats[2][0] * mats[3][1]))

# Reuse needs about one Hadamard product per output row, naive needs Z - 1.
reuse, naive = hadamard_count(mats), hadamard_count(mats, "naive")
print(f"hadamard products: reuse {reuse}, naive {naive} ({naive / reuse:.2f}x)")

# Splitting rows across threads changes neither the values nor their bits.
print("threads agree:", all(np.array_equal(krp(mats, T), K) for T in (2, 3, 7)))
