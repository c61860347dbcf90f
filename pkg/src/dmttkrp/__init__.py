"""Shared-memory dense MTTKRP kernels and CP-ALS.

The MTTKRP kernels work directly on the natural (generalized column-major)
layout of a dense tensor, multiplying its matricizations block by block
instead of reordering entries.
"""

from .cp_als import AlsConfig, AlsTrace, KruskalModel, als_iterate, cp_als, fit, random_model
from .errors import BoundsError, DimensionError, FormatError, ResourceError, SizeGuardError
from .io import gen_tensor, read_tensor, write_tensor
from .kernels import (
    MttkrpRequest,
    MttkrpResult,
    choose_order,
    mttkrp,
    mttkrp_baseline,
    mttkrp_one_step,
    mttkrp_two_step,
)
from .khatri_rao import KrpState, hadamard_count, krp, krp_naive, krp_row, krp_small
from .linalg import MatView, gemm_acc, gemv, gram_hadamard, parallel_reduce, solve_psd
from .tensor import (
    DenseTensor,
    MatricizationView,
    MultiIndex,
    Shape,
    delinearize,
    linearize,
    matricize_range_view,
    matricize_view,
)

__version__ = "0.1.0"
