"""Symmetric tensor trains of length two.

A 4-way tensor ``T = sum_ij lam_i mu_j u_i u_i v_j v_j <u_i, v_j>^p`` is
decomposed from generic slice sums: the left pair of modes carries the
``u_i``, the right pair the ``v_j``. Non-orthogonal (but linearly
independent) vector sets are handled by whitening the tensor with maps built
from positive semidefinite slice sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateInnerProduct,
    DimensionError,
    EmptyDecomposition,
    PsdSearchFailed,
)
from .tensor import (
    DEFAULT_RANK_TOL,
    SymmetricCarriage,
    TrainDecomposition,
    as_generator,
    multilinear_contract,
    rank_one_svd_factor,
    symmetric_eig_rank,
    weighted_slice_sum,
)

__all__ = ["WhiteningMaps", "whiten", "coefficient_matrix", "decompose_symm_tt2"]

PSD_TOL = 1e-10
DENOM_EPS = 1e-10
DEFAULT_PSD_ATTEMPTS = 200


@dataclass(frozen=True)
class WhiteningMaps:
    """Whitening maps ``W = D^{-1/2} X^T`` and their pseudo-inverses ``X D^{1/2}``."""

    W_A: np.ndarray
    W_B: np.ndarray
    pinv_A: np.ndarray
    pinv_B: np.ndarray
    attempts: int


def _check_four_way(T):
    T = np.asarray(T, dtype=float)
    if T.ndim != 4 or len(set(T.shape)) != 1:
        raise DimensionError(f"expected an n x n x n x n tensor, got shape {T.shape}")
    return T


def _is_psd(M):
    w = np.linalg.eigvalsh(0.5 * (M + M.T))
    top = np.max(np.abs(w)) if w.size else 0.0
    return bool(np.all(w >= -PSD_TOL * top))


def _skinny(M, rank_tol):
    eig = symmetric_eig_rank(M, rank_tol)
    r = eig.rank
    return eig.eigenvalues[:r], eig.eigenvectors[:, :r]


def whiten(T, max_attempts: int = DEFAULT_PSD_ATTEMPTS, rng=None, rank_tol: float = DEFAULT_RANK_TOL):
    """Whiten a symmetric length-2 train.

    Generic slice sums are redrawn until both are positive semidefinite, then
    ``Tbar = T(W_A, W_A, W_B, W_B)`` is formed from their skinny
    eigendecompositions.

    Returns
    -------
    Tbar : ndarray, shape (r_A, r_A, r_B, r_B)
    maps : WhiteningMaps
    """
    T = _check_four_way(T)
    rng = as_generator(rng)
    for attempt in range(1, max_attempts + 1):
        C_A = weighted_slice_sum(T, (0, 1), rng=rng)
        C_B = weighted_slice_sum(T, (2, 3), rng=rng)
        if _is_psd(C_A) and _is_psd(C_B):
            break
    else:
        raise PsdSearchFailed(
            f"no PSD slice-sum pair found in {max_attempts} attempts", attempts=max_attempts
        )
    d_A, X_A = _skinny(C_A, rank_tol)
    d_B, X_B = _skinny(C_B, rank_tol)
    # eigenvalues are positive up to round-off once the PSD test passed
    d_A, d_B = np.abs(d_A), np.abs(d_B)
    W_A = X_A.T / np.sqrt(d_A)[:, None]
    W_B = X_B.T / np.sqrt(d_B)[:, None]
    maps = WhiteningMaps(
        W_A=W_A,
        W_B=W_B,
        pinv_A=X_A * np.sqrt(d_A),
        pinv_B=X_B * np.sqrt(d_B),
        attempts=attempt,
    )
    if W_A.shape[0] == 0 or W_B.shape[0] == 0:
        return np.zeros((W_A.shape[0],) * 2 + (W_B.shape[0],) * 2), maps
    Tbar = multilinear_contract(T, [W_A, W_A, W_B, W_B])
    return Tbar, maps


def coefficient_matrix(T, U, V, inner_U=None, inner_V=None, p: int = 1, eps: float = DENOM_EPS):
    """Coefficient products ``R_ij = T(u_i, u_i, v_j, v_j) / <u'_i, v'_j>^p``.

    ``U`` and ``V`` live in the space of ``T`` (possibly whitened);
    ``inner_U``/``inner_V`` are the original-space vectors used in the
    denominator and default to ``U``/``V``.
    """
    T = np.asarray(T, dtype=float)
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    inner_U = U if inner_U is None else np.asarray(inner_U, dtype=float)
    inner_V = V if inner_V is None else np.asarray(inner_V, dtype=float)
    denom = (inner_U.T @ inner_V) ** p
    if denom.size and np.min(np.abs(denom)) <= eps:
        raise DegenerateInnerProduct(
            "inner product between recovered vectors is numerically zero",
            min_abs=float(np.min(np.abs(denom))),
        )
    num = np.einsum("abcd,ai,bi,cj,dj->ij", T, U, U, V, V)
    return num / denom


def decompose_symm_tt2(
    T,
    whitening: bool = False,
    rng=None,
    rank_tol: float = DEFAULT_RANK_TOL,
    psd_attempts: int = DEFAULT_PSD_ATTEMPTS,
    contracted_edges: int = 1,
) -> TrainDecomposition:
    """Recover the two symmetric carriages of a length-2 train.

    Parameters
    ----------
    T : ndarray, shape (n, n, n, n)
    whitening : bool
        Set when the carriage vectors are not orthonormal.
    rng : seed or Generator
        Source of the generic slice weights.
    rank_tol : float
        Relative eigenvalue cut-off for rank detection.
    psd_attempts : int
        Redraw budget for PSD slice sums when whitening.
    contracted_edges : int
        Number of parallel bond edges ``p``.
    """
    T = _check_four_way(T)
    rng = as_generator(rng)
    maps = None
    if whitening:
        Tbar, maps = whiten(T, psd_attempts, rng, rank_tol)
        if Tbar.size == 0:
            raise EmptyDecomposition("whitened tensor is empty (rank 0)", psd_attempts=maps.attempts)
    else:
        Tbar = T

    U_bar = _skinny(weighted_slice_sum(Tbar, (0, 1), rng=rng), rank_tol)[1]
    V_bar = _skinny(weighted_slice_sum(Tbar, (2, 3), rng=rng), rank_tol)[1]
    if U_bar.shape[1] == 0 or V_bar.shape[1] == 0:
        raise EmptyDecomposition("slice sums have rank 0")

    if whitening:
        U_raw = maps.pinv_A @ U_bar
        V_raw = maps.pinv_B @ V_bar
        scale_U = np.linalg.norm(U_raw, axis=0)
        scale_V = np.linalg.norm(V_raw, axis=0)
        U, V = U_raw / scale_U, V_raw / scale_V
    else:
        U, V = U_bar, V_bar

    R = coefficient_matrix(Tbar, U_bar, V_bar, U, V, p=contracted_edges)
    lam, mu = rank_one_svd_factor(R)
    if whitening:
        lam = lam * scale_U**2
        mu = mu * scale_V**2

    meta = {"whitened": bool(whitening), "rankTol": rank_tol}
    if maps is not None:
        meta["psdAttempts"] = maps.attempts
    return TrainDecomposition(
        (
            SymmetricCarriage(lam, U, orthogonal=not whitening),
            SymmetricCarriage(mu, V, orthogonal=not whitening),
        ),
        contracted_edges=contracted_edges,
        meta=meta,
    )
