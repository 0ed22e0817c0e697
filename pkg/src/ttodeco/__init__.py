"""Decompositions of orthogonally decomposable tensor trains.

Length-2 symmetric trains (with optional whitening), symmetric orthogonal
trains of any length under the decreasing ranks condition, non-symmetric
odeco length-2 trains, and the diagonal-orthogonal-diagonal matrix
decompositions they reduce to.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .dodd import (
    DoddFactors,
    general_dodd,
    procrustes_square_dodd,
    sinkhorn_square_dodd,
    tandem_procrustes,
    zero_inflate,
)
from .errors import TTDecompError
from .harness import ExperimentConfig, TrialStats, add_noise, make_instance, run_experiment
from .odeco_tt2 import decompose_odeco_tt2
from .symm_tt2 import decompose_symm_tt2
from .symm_ttl import decompose_symm_ttl
from .tensor import (
    OdecoCarriage,
    SymmetricCarriage,
    TrainDecomposition,
    assemble_train,
    multilinear_contract,
    rank_one_svd_factor,
    relative_error,
    symmetric_eig_rank,
    weighted_slice_sum,
)

__all__ = [
    "BACKEND",
    "DoddFactors",
    "ExperimentConfig",
    "OdecoCarriage",
    "SymmetricCarriage",
    "TTDecompError",
    "TrainDecomposition",
    "TrialStats",
    "add_noise",
    "assemble_train",
    "decompose_odeco_tt2",
    "decompose_symm_tt2",
    "decompose_symm_ttl",
    "general_dodd",
    "make_instance",
    "multilinear_contract",
    "procrustes_square_dodd",
    "rank_one_svd_factor",
    "relative_error",
    "run_experiment",
    "sinkhorn_square_dodd",
    "symmetric_eig_rank",
    "tandem_procrustes",
    "weighted_slice_sum",
    "zero_inflate",
]
