"""Diagonal-orthogonal-diagonal (DODD) matrix decompositions.

A matrix ``X`` has a DODD when ``X = diag(lam) @ Q @ diag(mu)`` with ``Q``
orthogonal. Square matrices without zero entries can be solved by Sinkhorn
balancing of the entrywise square, or by alternating Tandem Procrustes fits.
A rectangular ``m x n`` matrix is handled by embedding it in a ``d x d``
matrix whose unknown region is learned along with the diagonals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    DegenerateStart,
    DimensionError,
    InvalidInflation,
    NotConverged,
    SingularScaling,
    ZeroEntry,
)
from .tensor import as_generator

__all__ = [
    "DoddFactors",
    "zero_inflate",
    "polar_factor",
    "tandem_procrustes",
    "sinkhorn_square_dodd",
    "procrustes_square_dodd",
    "general_dodd",
    "orthogonality_error",
    "DEFAULT_TOL",
    "DEFAULT_MAX_ITER",
]

DEFAULT_TOL = 1e-28
DEFAULT_MAX_ITER = 1000
# inner Tandem Procrustes loop: stop on a small relative change of the residual
INNER_RTOL = 1e-12
INNER_MAX_ITER = 100
SCALING_EPS = 1e-300


@dataclass
class DoddFactors:
    """Result of a DODD solver.

    Attributes
    ----------
    lam, mu : ndarray, shape (d,)
        Diagonals of the left and right scalings. Entries outside the
        support of an inflated input may be zero.
    Q : ndarray, shape (d, d)
    d, m, n : int
        Inflation size and original block shape.
    iterations : int
    converged : bool
    method : str
    history : list of float
        Per-iteration convergence measure.
    seed : int or None
        Seed of the unknown-region initialization (general solver only).
    """

    lam: np.ndarray
    mu: np.ndarray
    Q: np.ndarray
    d: int
    m: int
    n: int
    iterations: int
    converged: bool
    method: str = ""
    history: list = field(default_factory=list)
    seed: int | None = None

    def reconstruct(self):
        """``diag(lam) @ Q @ diag(mu)``, shape (d, d)."""
        return self.lam[:, None] * self.Q * self.mu[None, :]

    def orthogonality_error(self):
        return orthogonality_error(self.Q)

    def reconstruction_error(self, X):
        """Relative Frobenius error against ``X`` (``m x n`` or ``d x d``)."""
        X = np.asarray(X, dtype=float)
        if X.shape != (self.d, self.d):
            X = zero_inflate(X, self.d)
        den = np.linalg.norm(X)
        num = np.linalg.norm(self.reconstruct() - X)
        return float(num / den) if den > 0 else float(num)

    def to_dict(self, X=None):
        out = {
            "lambda": self.lam.tolist(),
            "mu": self.mu.tolist(),
            "Q": self.Q.tolist(),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }
        if X is not None:
            out["reconstructionError"] = self.reconstruction_error(X)
        return out


def orthogonality_error(Q):
    """``||Q Q^T - I||_F / sqrt(d)``."""
    Q = np.asarray(Q, dtype=float)
    d = Q.shape[0]
    return float(np.linalg.norm(Q @ Q.T - np.eye(d)) / np.sqrt(d))


def _as_matrix(X, square=False):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.size == 0:
        raise DimensionError(f"expected a non-empty matrix, got shape {X.shape}")
    if square and X.shape[0] != X.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DimensionError("matrix has non-finite entries")
    return X


def zero_inflate(Xbar, d: int):
    """Embed ``Xbar`` in the top-left corner of a ``d x d`` zero matrix."""
    Xbar = np.asarray(Xbar, dtype=float)
    if Xbar.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {Xbar.shape}")
    m, n = Xbar.shape
    if d < max(m, n):
        raise InvalidInflation(f"d={d} is smaller than max(m, n)={max(m, n)}", d=d, m=m, n=n)
    X = np.zeros((d, d))
    X[:m, :n] = Xbar
    return X


def polar_factor(M):
    """Orthogonal polar factor ``U @ Wt`` of ``M = U S Wt`` (``m >= p``).

    Directions belonging to zero singular values are still filled in by the
    SVD, so the result has orthonormal columns even for rank-deficient input.
    """
    U, _, Wt = np.linalg.svd(M, full_matrices=False)
    return U @ Wt


def tandem_procrustes(A, B=None, tol: float = 0.0, max_iter: int = INNER_MAX_ITER, rtol: float = INNER_RTOL):
    """Fit ``A ~ V @ diag(D) @ B`` with orthonormal-column ``V``.

    Alternates the orthogonal polar factor of ``A B^T diag(D)`` and the
    closed-form diagonal update. The residual is non-increasing.

    Parameters
    ----------
    A : ndarray, shape (m, n)
    B : ndarray, shape (p, n), optional
        Defaults to the identity (requires square ``A``).
    tol : float
        Stop once the residual falls below this value.
    max_iter : int
    rtol : float
        Stop once the residual changes by at most ``rtol`` times its
        previous value.

    Returns
    -------
    V : ndarray, shape (m, p)
    D : ndarray, shape (p,)
        Diagonal of ``D``.
    residuals : ndarray
        Squared Frobenius residual after each iteration.
    """
    A = _as_matrix(A)
    if B is None:
        if A.shape[0] != A.shape[1]:
            raise DimensionError("B may only be omitted for square A")
        return _kernels.tandem_procrustes_eye(A, tol, rtol, max_iter)
    B = _as_matrix(B)
    if B.shape[1] != A.shape[1] or B.shape[0] > A.shape[0]:
        raise DimensionError(f"incompatible shapes A {A.shape}, B {B.shape}")
    row_sq = np.sum(B * B, axis=1)
    if np.any(row_sq == 0):
        raise DegenerateStart("B has a zero row", rows=np.flatnonzero(row_sq == 0).tolist())
    ABt = A @ B.T
    D = np.ones(B.shape[0])
    res = []
    prev = -1.0
    for _ in range(max_iter):
        V = polar_factor(ABt * D[None, :])
        D = np.einsum("ik,ik->k", ABt, V) / row_sq
        cur = float(np.sum((A - (V * D[None, :]) @ B) ** 2))
        res.append(cur)
        if cur < tol or (prev >= 0 and abs(prev - cur) <= rtol * prev):
            break
        prev = cur
    return V, D, np.asarray(res)


def _gauge(lam, mu):
    # scale so the largest |lam| is one; mu absorbs the factor
    top = np.max(np.abs(lam))
    if top > 0:
        lam = lam / top
        mu = mu * top
    return lam, mu


def _finish(factors, strict):
    factors.lam, factors.mu = _gauge(factors.lam, factors.mu)
    if not factors.converged and strict:
        raise NotConverged(
            f"{factors.method} DODD did not converge in {factors.iterations} iterations",
            factors=factors,
        )
    return factors


def sinkhorn_square_dodd(X, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, strict: bool = False):
    """Square DODD via Sinkhorn balancing of ``X**2``.

    ``Q**2`` of an orthogonal ``Q`` is doubly stochastic, so balancing the
    entrywise square of ``X`` yields ``Q`` up to the sign pattern of ``X``.

    Parameters
    ----------
    X : ndarray, shape (d, d)
        Must have no zero entries.
    tol : float
        Bound on the summed squared deviation of row and column sums from 1.
    max_iter : int
    strict : bool
        Raise ``NotConverged`` instead of returning unconverged factors.
    """
    X = _as_matrix(X, square=True)
    if np.any(X == 0):
        raise ZeroEntry("Sinkhorn DODD requires a matrix with no zero entries",
                        count=int(np.sum(X == 0)))
    d = X.shape[0]
    r, c, iters, converged = _kernels.sinkhorn_balance(X * X, tol, max_iter)
    Q = np.sign(X) * np.sqrt(r[:, None] * (X * X) * c[None, :])
    factors = DoddFactors(
        lam=1.0 / np.sqrt(r),
        mu=1.0 / np.sqrt(c),
        Q=Q,
        d=d,
        m=d,
        n=d,
        iterations=int(iters),
        converged=bool(converged),
        method="sinkhorn",
    )
    return _finish(factors, strict)


def _procrustes_pair(Q, lam, mu):
    """One row pass and one column pass; returns the new state, last V and residual."""
    V, D, _ = _kernels.tandem_procrustes_eye(np.ascontiguousarray(Q.T), 0.0, INNER_RTOL, INNER_MAX_ITER)
    if np.min(np.abs(D)) <= SCALING_EPS:
        raise SingularScaling("row scaling developed a zero entry")
    lam = lam * D
    Q = Q / D[:, None]
    V, D, res = _kernels.tandem_procrustes_eye(np.ascontiguousarray(Q), 0.0, INNER_RTOL, INNER_MAX_ITER)
    if np.min(np.abs(D)) <= SCALING_EPS:
        raise SingularScaling("column scaling developed a zero entry")
    mu = mu * D
    Q = Q / D[None, :]
    return Q, lam, mu, V, float(res[-1])


def procrustes_square_dodd(X, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, strict: bool = False):
    """Square DODD by alternating Tandem Procrustes fits on rows and columns.

    Starts from ``lam = mu = 1``, ``Q = X`` and stops once the column fit
    ``||Q - V D||^2`` drops below ``tol``.
    """
    X = _as_matrix(X, square=True)
    d = X.shape[0]
    Q = X.copy()
    lam = np.ones(d)
    mu = np.ones(d)
    history = []
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        Q, lam, mu, _, res = _procrustes_pair(Q, lam, mu)
        history.append(res)
        if res < tol:
            converged = True
            break
    factors = DoddFactors(lam, mu, Q, d, d, d, it, converged, "procrustes", history)
    return _finish(factors, strict)


def general_dodd(
    Xbar,
    d: int,
    learn_rate: int = 2,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    rng=None,
    strict: bool = False,
):
    """DODD of the ``d x d`` zero-inflation of an ``m x n`` matrix.

    The unknown part of ``Q`` starts as standard normal noise. Each outer
    iteration runs ``learn_rate`` Tandem Procrustes pairs, copies the
    unknown region of the latest orthogonal fit back into ``Q`` and resets
    the known block to ``Xbar`` divided by the current scalings.

    Parameters
    ----------
    Xbar : ndarray, shape (m, n)
    d : int
        Inflation size, at least ``max(m, n)``.
    learn_rate : int
        Tandem Procrustes pairs between outer updates.
    tol, max_iter, strict
        As for :func:`procrustes_square_dodd`; ``max_iter`` counts outer
        iterations.
    rng : seed or Generator
        Source of the unknown-region initialization. An integer seed is
        recorded on the result.
    """
    Xbar = _as_matrix(Xbar)
    m, n = Xbar.shape
    if d < max(m, n):
        raise InvalidInflation(f"d={d} is smaller than max(m, n)={max(m, n)}", d=d, m=m, n=n)
    if learn_rate < 1:
        raise DimensionError(f"learn_rate must be >= 1, got {learn_rate}")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = as_generator(rng)

    lam = np.zeros(d)
    lam[:m] = 1.0
    mu = np.zeros(d)
    mu[:n] = 1.0
    Q = rng.standard_normal((d, d))
    Q[:m, :n] = Xbar
    known = np.zeros((d, d), dtype=bool)
    known[:m, :n] = True

    history = []
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        for _ in range(learn_rate):
            Q, lam, mu, V, res = _procrustes_pair(Q, lam, mu)
        Q = np.where(known, Q, V)
        Q[:m, :n] = Xbar / lam[:m, None] / mu[None, :n]
        history.append(res)
        if res < tol:
            converged = True
            break
    factors = DoddFactors(lam, mu, Q, d, m, n, it, converged, "general", history, seed)
    return _finish(factors, strict)
