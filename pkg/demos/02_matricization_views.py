"""
Matricizations without copying
==============================

A dense tensor is stored once, in natural order (first index fastest). Every
mode-n unfolding is then a set of equally sized blocks over that buffer, so
no reordering is needed to multiply it.
"""

import numpy as np

from dmttkrp import DenseTensor, matricize_range_view, matricize_view

X = DenseTensor((2, 3, 4), np.arange(24.0))

# Mode 0 is one column-major block, the last mode one row-major block.
for n in range(X.ndim):
    v = matricize_view(X, n)
    print(f"mode {n}: {v.block_count} block(s) of {v.block_rows}x{v.block_cols}, {v.block_layout}-major")

# An internal mode splits into R_n row-major blocks. Block j is a view.
v = matricize_view(X, 1)
block = v.block(X.values, 1)
print("mode 1, block 1:\n", block)
print("shares memory:", np.shares_memory(block, X.values))

# Stitching the blocks side by side gives the textbook unfolding.
unfolded = np.hstack(list(v.blocks(X.values)))
reference = np.moveaxis(X.to_array(), 1, 0).reshape(3, -1, order="F")
print("equals unfolding:", np.array_equal(unfolded, reference))

# Grouping modes 0..n into rows gives a single column-major matrix.
print("X_(0:1) shape:", matricize_range_view(X, 1).matrix(X.values).shape)

# The buffer is read-only, so any accidental copy-free write would raise.
print("writeable:", X.values.flags.writeable)
