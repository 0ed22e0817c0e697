"""Pure numpy versions of the iteration kernels.

Used when the compiled extension is unavailable or when
``TTODECO_PURE_PYTHON=1`` is set.
"""

import numpy as np


def sinkhorn_balance(P, tol, max_iter):
    """Alternately normalize row and column sums of a positive matrix.

    Returns ``(row_scale, col_scale, iterations, converged)`` with
    ``diag(row_scale) @ P @ diag(col_scale)`` approximately doubly
    stochastic. Convergence is declared when the summed squared deviation of
    all row and column sums from one drops below ``tol``.
    """
    P = np.ascontiguousarray(P, dtype=float)
    r = np.ones(P.shape[0])
    c = np.ones(P.shape[1])
    it = 0
    while True:
        B = r[:, None] * P * c[None, :]
        dev = np.sum((B.sum(axis=1) - 1.0) ** 2) + np.sum((B.sum(axis=0) - 1.0) ** 2)
        if dev < tol:
            return r, c, it, True
        if it >= max_iter:
            return r, c, it, False
        r = 1.0 / (P @ c)
        c = 1.0 / (r @ P)
        it += 1


def tandem_procrustes_eye(A, tol, rtol, max_iter):
    """Fit ``A ~ V @ diag(D)`` with orthogonal ``V`` (square ``A``).

    Returns ``(V, D, residuals)`` where ``residuals[k]`` is the squared
    Frobenius residual after iteration ``k``.
    """
    A = np.ascontiguousarray(A, dtype=float)
    D = np.ones(A.shape[1])
    res = []
    prev = -1.0
    for _ in range(max_iter):
        U, _, Wt = np.linalg.svd(A * D[None, :])
        V = U @ Wt
        D = np.einsum("ik,ik->k", A, V)
        cur = float(np.sum((A - V * D[None, :]) ** 2))
        res.append(cur)
        if cur < tol or (prev >= 0 and abs(prev - cur) <= rtol * prev):
            break
        prev = cur
    return V, D, np.asarray(res)
