"""Non-symmetric odeco tensor trains of length two.

A 4-way tensor ``T = sum_ij lam_i mu_j a_i b_i d_j e_j <c_i, f_j>`` with
orthonormal sets ``{a_i}``, ``{b_i}``, ``{c_i}``, ``{d_j}``, ``{e_j}``,
``{f_j}``. A generic weighted slice sum over the right pair of modes is
``A diag(s) B^T``, so its SVD pairs the ``a_i`` with the ``b_i``; likewise
on the right. Contracting ``T`` with the recovered pairs leaves the coupling
matrix ``X_ij = lam_i mu_j <c_i, f_j>``, whose DODD supplies the
coefficients and a set of bond vectors.
"""

from __future__ import annotations

import numpy as np

from .dodd import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    general_dodd,
    procrustes_square_dodd,
    sinkhorn_square_dodd,
)
from .errors import DimensionError, EmptyDecomposition, InvalidConfig, NotConverged
from .tensor import (
    DEFAULT_RANK_TOL,
    OdecoCarriage,
    TrainDecomposition,
    as_generator,
    assemble_train,
    relative_error,
    weighted_slice_sum,
)

__all__ = ["paired_factors", "coupling_matrix", "decompose_odeco_tt2", "METHODS"]

METHODS = ("auto", "sinkhorn", "procrustes", "general")
ORTHO_TOL = 1e-10


def paired_factors(T, side: str, rng=None, rank_tol: float = DEFAULT_RANK_TOL):
    """Orthonormal vector pairs of one carriage.

    Parameters
    ----------
    T : ndarray, shape (n_a, n_b, n_d, n_e)
    side : {"left", "right"}

    Returns
    -------
    X, Y : ndarray
        Paired singular vectors, one column per detected rank-one term.
    """
    T = np.asarray(T, dtype=float)
    rng = as_generator(rng)
    if side == "left":
        M = weighted_slice_sum(T, (0, 1), rng=rng)
    elif side == "right":
        M = weighted_slice_sum(T, (2, 3), rng=rng)
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(s > rank_tol * s[0])) if s.size and s[0] > 0 else 0
    X, Y = U[:, :r], Vt[:r].T
    # fix the sign of each pair by the largest entry of the first vector
    idx = np.argmax(np.abs(X), axis=0)
    sgn = np.sign(X[idx, np.arange(r)])
    sgn[sgn == 0] = 1.0
    return X * sgn, Y * sgn


def coupling_matrix(T, A, B, D, E):
    """``X_ij = T(a_i, b_i, d_j, e_j)``."""
    return np.einsum("abde,ai,bi,dj,ej->ij", T, A, B, D, E, optimize=True)


def _solve(Xbar, d, method, learn_rate, tol, max_iter, rng):
    m, n = Xbar.shape
    square = m == n == d
    if method == "sinkhorn" or (method == "auto" and square and np.all(Xbar != 0)):
        if not square:
            raise InvalidConfig("the Sinkhorn path needs a square coupling matrix with d equal to its size")
        f = sinkhorn_square_dodd(Xbar, tol, max_iter)
        if method == "sinkhorn" or (f.converged and f.orthogonality_error() < ORTHO_TOL):
            return f
        # balancing succeeded but the coupling has no square DODD
    if method == "procrustes":
        if not square:
            raise InvalidConfig("the Procrustes path needs a square coupling matrix with d equal to its size")
        return procrustes_square_dodd(Xbar, tol, max_iter)
    return general_dodd(Xbar, d, learn_rate, tol, max_iter, rng)


def decompose_odeco_tt2(
    T,
    d: int | None = None,
    method: str = "auto",
    rng=None,
    rank_tol: float = DEFAULT_RANK_TOL,
    learn_rate: int = 2,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> TrainDecomposition:
    """Recover both carriages of an odeco length-2 train.

    Parameters
    ----------
    T : ndarray, shape (n_a, n_b, n_d, n_e)
    d : int, optional
        Inflation size for the DODD step, at least both carriage ranks.
        Defaults to the larger rank.
    method : {"auto", "sinkhorn", "procrustes", "general"}
        ``auto`` tries Sinkhorn when the coupling matrix is square with no
        zero entries and ``d`` equals its size, falling back to the general
        solver when the result is not orthogonal.
    rng : seed or Generator
    rank_tol : float
    learn_rate, tol, max_iter
        Passed to the DODD solver.

    Returns
    -------
    TrainDecomposition
        Two ``OdecoCarriage`` objects. The bond vectors live in ``R^d``:
        rows of the DODD orthogonal factor on the left, standard basis
        vectors on the right.

    Raises
    ------
    NotConverged
        The DODD solver did not reach an orthogonal factor; ``.factors``
        holds its last state.
    """
    T = np.asarray(T, dtype=float)
    if T.ndim != 4:
        raise DimensionError(f"expected a 4-way tensor, got shape {T.shape}")
    if method not in METHODS:
        raise InvalidConfig(f"unknown method {method!r}; choose from {METHODS}")
    rng = as_generator(rng)
    A, B = paired_factors(T, "left", rng, rank_tol)
    D, E = paired_factors(T, "right", rng, rank_tol)
    m, n = A.shape[1], D.shape[1]
    if m == 0 or n == 0:
        raise EmptyDecomposition("slice sums have rank 0")
    d = max(m, n) if d is None else int(d)
    Xbar = coupling_matrix(T, A, B, D, E)

    f = _solve(Xbar, d, method, learn_rate, tol, max_iter, rng)
    if not f.converged or f.orthogonality_error() >= ORTHO_TOL:
        raise NotConverged(
            f"{f.method} DODD of the {m}x{n} coupling matrix failed "
            f"(orthogonality error {f.orthogonality_error():.3e})",
            factors=f,
        )
    # no re-orthogonalization: scalings can be badly balanced, and small
    # absolute changes to Q would then be amplified in the reconstruction
    Q = f.Q
    left = OdecoCarriage(f.lam[:m], A, B, Q[:m].T)
    right = OdecoCarriage(f.mu[:n], D, E, np.eye(d)[:, :n])
    meta = {
        "ranks": [m, n],
        "d": d,
        "method": f.method,
        "iterations": f.iterations,
        "doddReconstructionError": f.reconstruction_error(Xbar),
    }
    decomp = TrainDecomposition((left, right), contracted_edges=1, meta=meta)
    meta["reconstructionError"] = relative_error(assemble_train(decomp), T)
    return decomp
