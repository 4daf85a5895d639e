"""Randomized Tucker decomposition via single-mode sketching (RTSMS)."""
from .baselines import (
    adaptive_r_sthosvd,
    adaptive_range_finder,
    gn,
    hosvd,
    r_gn_st_tucker,
    r_sthosvd,
    rand_svd,
    sthosvd,
    sthosvd_tol,
)
from .driver import RtsmsConfig, RunReport, in_loop_truncate, rtsms, rtsms_fixed_rank, tucker_to_hosvd
from .sketched_lsq import LsqConfig
from .sketching import RandomStream
from .tensor import (
    TuckerDecomposition,
    compression_ratio,
    fold,
    frobenius_norm,
    mode_product,
    reconstruct,
    relative_residual,
    unfold,
)

__version__ = "0.1.0"
