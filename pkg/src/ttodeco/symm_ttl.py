"""Symmetric orthogonal tensor trains of length L >= 3.

Mode layout of the ``(L+2)``-way input: carriage 0 owns modes 0 and 1,
interior carriage ``c`` owns mode ``c + 1`` and the last carriage owns modes
``L`` and ``L + 1``.

The end vector sets come from eigendecompositions of single-vector
contractions. Interior sets are found by sweeping inward from each end with
kernel completion; per position the sweep with the larger rank wins. The
coefficients are the factors of a rank-one tensor fitted by ALS.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import (
    CompletionAmbiguous,
    DecompositionFailed,
    DegenerateContraction,
    DegenerateInnerProduct,
    DimensionError,
    NoSymmetrizer,
)
from .tensor import (
    DEFAULT_RANK_TOL,
    SymmetricCarriage,
    TrainDecomposition,
    as_generator,
    multilinear_contract,
    orthonormal_completion,
    symmetric_eig_rank,
)

__all__ = [
    "SweepResult",
    "extract_end_vectors",
    "symmetrizer_system",
    "numerical_nullity",
    "symmetrizing_scaling",
    "kernel_complete",
    "directional_sweep",
    "rank_one_als",
    "coefficient_tensor",
    "decompose_symm_ttl",
]

NULL_TOL = 1e-6
PROBE_TOL = 1e-6
DENOM_EPS = 1e-10
END_RETRIES = 5


def _train_length(T):
    T = np.asarray(T, dtype=float)
    L = T.ndim - 2
    if L < 3:
        raise DimensionError(f"need an (L+2)-way tensor with L >= 3, got {T.ndim} modes")
    if len(set(T.shape)) != 1:
        raise DimensionError(f"all modes must share one dimension, got {T.shape}")
    return T, L


def _contract_except(T, free, v):
    return multilinear_contract(T, [None if k in free else v for k in range(T.ndim)])


def extract_end_vectors(T, side: str, rng=None, rank_tol: float = DEFAULT_RANK_TOL):
    """Orthonormal vectors of an end carriage.

    Contracts every mode except the two of the requested end with one generic
    vector and keeps the eigenvectors of the nonzero eigenvalues.

    Returns
    -------
    rank : int
    X : ndarray, shape (n, rank)
    """
    T, L = _train_length(T)
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    free = (0, 1) if side == "left" else (L, L + 1)
    rng = as_generator(rng)
    n = T.shape[0]
    for _ in range(END_RETRIES):
        M = _contract_except(T, free, rng.standard_normal(n))
        eig = symmetric_eig_rank(M, rank_tol)
        if eig.rank > 0:
            return eig.rank, eig.eigenvectors[:, : eig.rank]
    raise DegenerateContraction(
        f"{side} end contraction was numerically zero {END_RETRIES} times"
    )


def symmetrizer_system(Tbar) -> np.ndarray:
    """Rows ``Tbar[i, j] e_i - Tbar[j, i] e_j`` for every pair ``i < j``."""
    Tbar = np.atleast_2d(np.asarray(Tbar, dtype=float))
    r = Tbar.shape[0]
    pairs = list(combinations(range(r), 2))
    out = np.zeros((len(pairs), r))
    for row, (i, j) in enumerate(pairs):
        out[row, i] = Tbar[i, j]
        out[row, j] = -Tbar[j, i]
    return out


def _null_space_svd(A):
    rows, cols = A.shape
    if rows == 0:
        return np.zeros(cols), np.eye(cols)
    _, s, Vt = np.linalg.svd(A, full_matrices=True)
    s_full = np.zeros(cols)
    s_full[: s.size] = s
    return s_full, Vt


def numerical_nullity(A, tol: float = NULL_TOL) -> int:
    """Number of singular values of ``A`` (padded to its column count) at or
    below ``tol`` times the largest one."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    s, _ = _null_space_svd(A)
    top = s.max() if s.size else 0.0
    if top == 0.0:
        return A.shape[1]
    return int(np.sum(s <= tol * top))


def symmetrizing_scaling(Tbar, tol: float = NULL_TOL) -> np.ndarray:
    """Unit vector ``l`` such that ``diag(l) @ Tbar`` is symmetric.

    For generic inputs ``l`` is parallel to the reciprocals of the row
    scalings hidden in ``Tbar``. When the null space has dimension above one
    any member will do; the right singular vector of the smallest singular
    value is returned.
    """
    Tbar = np.atleast_2d(np.asarray(Tbar, dtype=float))
    r = Tbar.shape[0]
    if r == 1:
        return np.ones(1)
    Lmat = symmetrizer_system(Tbar)
    s, Vt = _null_space_svd(Lmat)
    top = s.max()
    if top > 0.0 and s[-1] > tol * top:
        raise NoSymmetrizer(
            "symmetrizing system has a trivial null space",
            smallest=float(s[-1] / top),
        )
    ell = Vt[-1].copy()
    k = np.argmax(np.abs(ell))
    return ell * np.sign(ell[k])


def kernel_complete(S, r: int, rank_tol: float = DEFAULT_RANK_TOL, ambiguity_tol: float = 1e-6):
    """Fill the unknown trailing block of a symmetric matrix.

    The first ``r`` rows (and, by symmetry, columns) of ``S`` are known. Each
    later row ``k`` is completed, from the diagonal onward, as the
    combination of the known rows that reproduces its first ``r`` entries;
    the filled values are mirrored into column ``k``.
    """
    S = np.array(S, dtype=float, copy=True)
    n = S.shape[0]
    if S.shape != (n, n):
        raise DimensionError(f"expected a square matrix, got {S.shape}")
    if r >= n:
        return S
    if r < 1:
        raise CompletionAmbiguous("nothing is known about the matrix")
    K = S[:r, :r]
    U, s, Vt = np.linalg.svd(K)
    top = s[0] if s.size else 0.0
    keep = s > rank_tol * top if top > 0 else np.zeros_like(s, dtype=bool)
    null = Vt[~keep]
    if null.size:
        # coefficients along null(K) must not change the unknown entries
        leak = np.linalg.norm(null @ S[:r, r:])
        scale = max(np.linalg.norm(S[:r, :]), np.finfo(float).tiny)
        if leak > ambiguity_tol * scale:
            raise CompletionAmbiguous(
                "known rows do not determine the completion", leak=float(leak / scale)
            )
    K_pinv = (Vt[keep].T / s[keep]) @ U[:, keep].T
    for k in range(r, n):
        coeffs = S[k, :r] @ K_pinv
        fill = coeffs @ S[:r, k:]
        S[k, k:] = fill
        S[k:, k] = fill
    return S


@dataclass
class SweepResult:
    """Vector sets found by one directional sweep.

    ``vector_sets[c]`` is the n x rank matrix for carriage ``c`` (``None``
    where the sweep did not reach or was terminated).
    """

    direction: str
    vector_sets: list
    terminated_at: int | None = None
    reason: str | None = None
    errors: dict = field(default_factory=dict)

    def rank(self, c: int) -> int:
        X = self.vector_sets[c]
        return 0 if X is None else X.shape[1]


def _kernel_step(T, free, prev, rng, rank_tol, null_tol):
    """One kernel-completion step: next vector set from the previous one."""
    n = T.shape[0]
    r = prev.shape[1]
    A = orthonormal_completion(prev, rng)
    Tm = _contract_except(T, free, rng.standard_normal(n))
    if free[0] > free[1]:
        Tm = Tm.T
    S = A.T @ Tm @ A
    if r > 1:
        ell = symmetrizing_scaling(S[:r, :r], null_tol)
        S[:r, :] *= ell[:, None]
    S[:, :r] = S[:r, :].T
    S_full = kernel_complete(S, r, rank_tol)
    eig = symmetric_eig_rank(A @ S_full @ A.T, rank_tol)
    return eig.eigenvectors[:, : eig.rank]


def _subspace_gap(X, Y):
    """Sine of the largest principal angle between two column spaces."""
    if X.shape[1] != Y.shape[1]:
        return 1.0
    if X.shape[1] == 0:
        return 0.0
    # sine of the largest angle via the projection residual, accurate near 0
    return float(np.linalg.norm(Y - X @ (X.T @ Y), 2))


def directional_sweep(
    T,
    direction: str,
    end_set,
    rng=None,
    rank_tol: float = DEFAULT_RANK_TOL,
    null_tol: float = NULL_TOL,
    probe_tol: float = PROBE_TOL,
) -> SweepResult:
    """Sweep kernel completion inward from one end of the train.

    Each step is run with two independent generic contractions. A correct
    step yields the same subspace from both; disagreement, or a rank larger
    than the previous one, means the true rank increased in this direction
    and the sweep terminates, leaving the remaining positions empty.
    """
    T, L = _train_length(T)
    if direction not in ("LR", "RL"):
        raise ValueError("direction must be 'LR' or 'RL'")
    rng = as_generator(rng)
    sets = [None] * L
    if direction == "LR":
        start = 0
        steps = [(c, (c, c + 1)) for c in range(1, L - 1)]
    else:
        start = L - 1
        steps = [(c, (c + 2, c + 1)) for c in range(L - 2, 0, -1)]
    prev = np.asarray(end_set[1] if isinstance(end_set, tuple) else end_set, dtype=float)
    sets[start] = prev
    result = SweepResult(direction, sets)
    for c, free in steps:
        try:
            X = _kernel_step(T, free, prev, rng, rank_tol, null_tol)
            X2 = _kernel_step(T, free, prev, rng, rank_tol, null_tol)
        except (NoSymmetrizer, CompletionAmbiguous) as exc:
            result.terminated_at, result.reason = c, exc.code
            result.errors[c] = exc.code
            break
        if X.shape[1] > prev.shape[1]:
            result.terminated_at, result.reason = c, "rank increased"
            break
        if X.shape[1] == 0 or _subspace_gap(X, X2) > probe_tol:
            result.terminated_at, result.reason = c, "inconsistent completion"
            break
        sets[c] = X
        prev = X
    return result


def rank_one_als(R, max_iter: int = 50, tol: float = 1e-15):
    """Rank-one CP fit of ``R`` by alternating least squares.

    Factors start from the leading left singular vector of each unfolding.
    Returns the list of factor vectors; all but the first have unit norm.
    """
    R = np.asarray(R, dtype=float)
    N = R.ndim
    norm_R = np.linalg.norm(R)
    if norm_R == 0.0:
        return [np.zeros(s) for s in R.shape]
    factors = []
    for k in range(N):
        unfold = np.moveaxis(R, k, 0).reshape(R.shape[k], -1)
        factors.append(np.linalg.svd(unfold, full_matrices=False)[0][:, 0])
    idx = string.ascii_letters[:N]
    prev_err = np.inf
    for _ in range(max_iter):
        for k in range(N):
            others = [m for m in range(N) if m != k]
            expr = idx + "," + ",".join(idx[m] for m in others) + "->" + idx[k]
            num = np.einsum(expr, R, *(factors[m] for m in others))
            den = np.prod([factors[m] @ factors[m] for m in others])
            factors[k] = num / den
        approx = factors[0]
        for f in factors[1:]:
            approx = np.multiply.outer(approx, f)
        err = np.linalg.norm(approx - R) / norm_R
        if abs(prev_err - err) <= tol or err <= tol:
            break
        prev_err = err
    scale = 1.0
    for k in range(1, N):
        nk = np.linalg.norm(factors[k])
        if nk > 0:
            factors[k] = factors[k] / nk
            scale *= nk
    factors[0] = factors[0] * scale
    return factors


def coefficient_tensor(T, vector_sets, eps: float = DENOM_EPS) -> np.ndarray:
    """Coefficient products ``T(x^1, x^1, x^2, ..., x^L, x^L) / prod <x^k, x^{k+1}>``."""
    T, L = _train_length(T)
    X = list(vector_sets)
    mats = [X[0].T, X[0].T] + [x.T for x in X[1:-1]] + [X[-1].T, X[-1].T]
    full = multilinear_contract(T, mats)
    letters = string.ascii_letters[:L]
    expr = letters[0] + letters + letters[-1] + "->" + letters
    R = np.einsum(expr, full)
    denom = np.ones(R.shape)
    for k in range(L - 1):
        gram = X[k].T @ X[k + 1]
        if np.min(np.abs(gram)) <= eps:
            raise DegenerateInnerProduct(
                f"vectors of carriages {k} and {k + 1} are numerically orthogonal",
                min_abs=float(np.min(np.abs(gram))),
            )
        shape = [1] * L
        shape[k], shape[k + 1] = gram.shape
        denom = denom * gram.reshape(shape)
    return R / denom


def decompose_symm_ttl(
    T,
    L: int | None = None,
    rng=None,
    rank_tol: float = DEFAULT_RANK_TOL,
    null_tol: float = NULL_TOL,
    probe_tol: float = PROBE_TOL,
) -> TrainDecomposition:
    """Recover every carriage of a symmetric orthogonal train of length ``L >= 3``.

    The train must satisfy the decreasing-ranks condition: each carriage's
    rank is reachable by a non-increasing rank chain from one of the ends.
    """
    T, L_found = _train_length(T)
    if L is not None and L != L_found:
        raise DimensionError(f"tensor has {T.ndim} modes, expected {L + 2}")
    L = L_found
    rng = as_generator(rng)

    left = extract_end_vectors(T, "left", rng, rank_tol)
    right = extract_end_vectors(T, "right", rng, rank_tol)
    lr = directional_sweep(T, "LR", left, rng, rank_tol, null_tol, probe_tol)
    rl = directional_sweep(T, "RL", right, rng, rank_tol, null_tol, probe_tol)

    chosen = [left[1]] + [None] * (L - 2) + [right[1]]
    provenance = [{"position": 0, "direction": "end", "rank": left[0]}]
    for c in range(1, L - 1):
        r_lr, r_rl = lr.rank(c), rl.rank(c)
        if r_lr == 0 and r_rl == 0:
            raise DecompositionFailed(
                f"both sweeps terminated before carriage {c}",
                position=c,
                lr_reason=lr.reason,
                rl_reason=rl.reason,
            )
        pick = lr if r_lr >= r_rl else rl
        chosen[c] = pick.vector_sets[c]
        provenance.append({"position": c, "direction": pick.direction, "rank": pick.rank(c)})
    provenance.append({"position": L - 1, "direction": "end", "rank": right[0]})

    R = coefficient_tensor(T, chosen)
    coeffs = rank_one_als(R)
    carriages = tuple(SymmetricCarriage(lam, X) for lam, X in zip(coeffs, chosen))
    meta = {
        "rankTol": rank_tol,
        "positions": provenance,
        "sweeps": {
            "LR": {"terminatedAt": lr.terminated_at, "reason": lr.reason},
            "RL": {"terminatedAt": rl.terminated_at, "reason": rl.reason},
        },
    }
    return TrainDecomposition(carriages, meta=meta)
