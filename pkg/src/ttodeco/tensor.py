"""Dense tensors, carriages and the multilinear primitives the solvers share.

Tensors are plain C-ordered (row-major) ``numpy.ndarray`` objects. The
carriage and train containers hold factor matrices whose columns are the
carriage vectors.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DimensionError, DivisionByZero, InvalidTrain, NumericalError

__all__ = [
    "DenseTensor",
    "SymmetricCarriage",
    "OdecoCarriage",
    "TrainDecomposition",
    "EigResult",
    "as_tensor",
    "assemble_train",
    "multilinear_contract",
    "weighted_slice_sum",
    "symmetric_eig_rank",
    "rank_one_svd_factor",
    "relative_error",
    "normalize_signs",
    "orthonormal_completion",
    "random_orthonormal",
    "as_generator",
    "DEFAULT_RANK_TOL",
]

DenseTensor = np.ndarray

DEFAULT_RANK_TOL = 1e-8
_UNIT_TOL = 1e-10

_LETTERS = string.ascii_letters


def as_generator(seed) -> np.random.Generator:
    """Return a ``Generator`` from a seed, a ``SeedSequence`` or a generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def as_tensor(data, shape=None) -> np.ndarray:
    """Validate and convert ``data`` into a float64 C-ordered array.

    If ``shape`` is given, ``data`` is read as a flat row-major sequence.
    """
    if shape is not None:
        shape = tuple(int(s) for s in shape)
        if any(s < 1 for s in shape):
            raise DimensionError(f"shape entries must be >= 1, got {shape}")
        flat = np.asarray(data, dtype=float).ravel()
        if flat.size != int(np.prod(shape)):
            raise DimensionError(
                f"data has {flat.size} entries but shape {shape} needs {int(np.prod(shape))}"
            )
        return np.ascontiguousarray(flat.reshape(shape))
    arr = np.ascontiguousarray(np.asarray(data, dtype=float))
    if arr.ndim and any(s < 1 for s in arr.shape):
        raise DimensionError(f"shape entries must be >= 1, got {arr.shape}")
    return arr


def _check_columns(mat, orthogonal, what):
    if mat.shape[1] == 0:
        return
    norms = np.linalg.norm(mat, axis=0)
    if np.max(np.abs(norms - 1.0)) > _UNIT_TOL:
        raise InvalidTrain(f"{what}: columns must have unit norm")
    if orthogonal:
        gram = mat.T @ mat
        if np.max(np.abs(gram - np.eye(mat.shape[1]))) > _UNIT_TOL:
            raise InvalidTrain(f"{what}: columns must be orthonormal")


def _check_coefficients(coef, rank):
    if coef.shape != (rank,):
        raise InvalidTrain(f"expected {rank} coefficients, got shape {coef.shape}")
    if rank and np.min(np.abs(coef)) == 0.0:
        raise InvalidTrain("carriage coefficients must be nonzero")


@dataclass(frozen=True)
class SymmetricCarriage:
    """``sum_i coefficients[i] * vectors[:, i]^{(x)3}``."""

    coefficients: np.ndarray
    vectors: np.ndarray
    orthogonal: bool = True

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=float).reshape(-1)
        vecs = np.asarray(self.vectors, dtype=float)
        if vecs.ndim != 2:
            raise InvalidTrain("vectors must be an n x r matrix")
        _check_coefficients(coef, vecs.shape[1])
        _check_columns(vecs, self.orthogonal, "symmetric carriage")
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "vectors", vecs)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def rank(self) -> int:
        return self.vectors.shape[1]

    @property
    def bond_vectors(self) -> np.ndarray:
        return self.vectors

    def to_tensor(self) -> np.ndarray:
        v = self.vectors
        return np.einsum("i,ai,bi,ci->abc", self.coefficients, v, v, v)


@dataclass(frozen=True)
class OdecoCarriage:
    """``sum_i coefficients[i] * a_i (x) b_i (x) c_i``.

    ``vectors_a`` and ``vectors_b`` index the two free modes, ``vectors_c``
    the bond mode shared with the neighbouring carriage.
    """

    coefficients: np.ndarray
    vectors_a: np.ndarray
    vectors_b: np.ndarray
    vectors_c: np.ndarray
    orthogonal: bool = True

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=float).reshape(-1)
        mats = [np.asarray(m, dtype=float) for m in (self.vectors_a, self.vectors_b, self.vectors_c)]
        for name, m in zip("abc", mats):
            if m.ndim != 2 or m.shape[1] != coef.size:
                raise InvalidTrain(f"vectors_{name} must be n x {coef.size}")
            _check_columns(m, self.orthogonal, f"odeco carriage vectors_{name}")
        _check_coefficients(coef, coef.size)
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "vectors_a", mats[0])
        object.__setattr__(self, "vectors_b", mats[1])
        object.__setattr__(self, "vectors_c", mats[2])

    @property
    def dims(self) -> tuple:
        return tuple(m.shape[0] for m in (self.vectors_a, self.vectors_b, self.vectors_c))

    @property
    def rank(self) -> int:
        return self.coefficients.size

    @property
    def bond_vectors(self) -> np.ndarray:
        return self.vectors_c

    def to_tensor(self) -> np.ndarray:
        return np.einsum(
            "i,ai,bi,ci->abc", self.coefficients, self.vectors_a, self.vectors_b, self.vectors_c
        )


@dataclass(frozen=True)
class TrainDecomposition:
    carriages: tuple
    contracted_edges: int = 1
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "carriages", tuple(self.carriages))
        if len(self.carriages) < 2:
            raise InvalidTrain("a train needs at least two carriages")
        if self.contracted_edges < 1:
            raise InvalidTrain("contracted_edges must be >= 1")
        kinds = {type(c) for c in self.carriages}
        if len(kinds) != 1:
            raise InvalidTrain("mixed carriage types are not supported")
        if isinstance(self.carriages[0], OdecoCarriage) and len(self.carriages) != 2:
            raise InvalidTrain("odeco trains are supported for length 2 only")
        for left, right in zip(self.carriages, self.carriages[1:]):
            if left.bond_vectors.shape[0] != right.bond_vectors.shape[0]:
                raise InvalidTrain(
                    "adjacent carriages disagree on the bond dimension: "
                    f"{left.bond_vectors.shape[0]} vs {right.bond_vectors.shape[0]}"
                )

    @property
    def length(self) -> int:
        return len(self.carriages)

    @property
    def ranks(self) -> tuple:
        return tuple(c.rank for c in self.carriages)


def assemble_train(decomp: TrainDecomposition) -> np.ndarray:
    """Contract a train back into its dense tensor.

    Symmetric trains of length ``L`` give an ``(L+2)``-way tensor: the end
    carriages contribute two free modes each, interior carriages one. Each
    junction contributes ``<x, y>**contracted_edges``.
    """
    if not isinstance(decomp, TrainDecomposition):
        raise InvalidTrain("expected a TrainDecomposition")
    p = decomp.contracted_edges
    cars = decomp.carriages
    L = len(cars)
    rank_idx = _LETTERS[26 : 26 + L]
    free_idx = iter(_LETTERS[:26])

    operands, subs, out = [], [], []
    for j, car in enumerate(cars):
        operands.append(car.coefficients)
        subs.append(rank_idx[j])
        if isinstance(car, OdecoCarriage):
            mats = [car.vectors_a, car.vectors_b]
        elif j in (0, L - 1):
            mats = [car.vectors, car.vectors]
        else:
            mats = [car.vectors]
        for m in mats:
            a = next(free_idx)
            operands.append(m)
            subs.append(a + rank_idx[j])
            out.append(a)
    for j in range(L - 1):
        gram = cars[j].bond_vectors.T @ cars[j + 1].bond_vectors
        operands.append(gram**p)
        subs.append(rank_idx[j] + rank_idx[j + 1])

    if any(c.rank == 0 for c in cars):
        shape = []
        for j, car in enumerate(cars):
            if isinstance(car, OdecoCarriage):
                shape += [car.vectors_a.shape[0], car.vectors_b.shape[0]]
            else:
                shape += [car.dim] * (2 if j in (0, L - 1) else 1)
        return np.zeros(shape)
    expr = ",".join(subs) + "->" + "".join(out)
    return np.ascontiguousarray(np.einsum(expr, *operands, optimize="greedy"))


def multilinear_contract(T, per_mode: Sequence) -> np.ndarray:
    """Contract each mode of ``T`` with an optional matrix or vector.

    ``per_mode[k]`` may be ``None`` (mode left free), a matrix ``W`` of shape
    ``(m, T.shape[k])`` (mode ``k`` becomes size ``m``), or a vector of length
    ``T.shape[k]`` (mode ``k`` is summed out and removed).
    """
    T = np.asarray(T, dtype=float)
    if len(per_mode) != T.ndim:
        raise DimensionError(f"expected {T.ndim} per-mode entries, got {len(per_mode)}")
    if 2 * T.ndim > len(_LETTERS):
        raise DimensionError("too many modes")
    in_idx = _LETTERS[: T.ndim]
    new_idx = iter(_LETTERS[T.ndim :])
    operands, subs, out = [T], [in_idx], []
    for k, w in enumerate(per_mode):
        if w is None:
            out.append(in_idx[k])
            continue
        w = np.asarray(w, dtype=float)
        if w.shape[-1] != T.shape[k] or w.ndim not in (1, 2):
            raise DimensionError(
                f"mode {k} has size {T.shape[k]} but was given shape {w.shape}"
            )
        operands.append(w)
        if w.ndim == 1:
            subs.append(in_idx[k])
        else:
            a = next(new_idx)
            subs.append(a + in_idx[k])
            out.append(a)
    expr = ",".join(subs) + "->" + "".join(out)
    return np.ascontiguousarray(np.einsum(expr, *operands, optimize="greedy"))


def weighted_slice_sum(T, free_modes, weights=None, rng=None) -> np.ndarray:
    """Weighted sum of the matrix slices of ``T`` over all non-free modes.

    Parameters
    ----------
    T : ndarray
        Tensor with at least three modes.
    free_modes : pair of int
        The two modes that index the returned matrix.
    weights : ndarray, optional
        Weights with the shape of the summed modes (in mode order). When
        omitted, generic i.i.d. standard normal weights are drawn from ``rng``.
    rng : seed or Generator, optional
        Source of generic weights.
    """
    T = np.asarray(T, dtype=float)
    if T.ndim < 3:
        raise DimensionError("slice sums need a tensor with >= 3 modes")
    i, j = (int(m) for m in free_modes)
    if i == j or not (0 <= i < T.ndim and 0 <= j < T.ndim):
        raise DimensionError(f"invalid free modes {free_modes} for a {T.ndim}-way tensor")
    summed = [m for m in range(T.ndim) if m not in (i, j)]
    shape = tuple(T.shape[m] for m in summed)
    if weights is None:
        weights = as_generator(rng).standard_normal(shape)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != shape:
        raise DimensionError(f"weights must have shape {shape}, got {weights.shape}")
    idx = _LETTERS[: T.ndim]
    expr = f"{idx},{''.join(idx[m] for m in summed)}->{idx[i]}{idx[j]}"
    return np.einsum(expr, T, weights)


def normalize_signs(V: np.ndarray) -> np.ndarray:
    """Flip columns so that each column's largest-magnitude entry is positive."""
    V = np.array(V, dtype=float, copy=True)
    if V.size == 0:
        return V
    rows = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[rows, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


class EigResult(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank: int


def symmetric_eig_rank(M, rank_tol: float = DEFAULT_RANK_TOL) -> EigResult:
    """Eigendecomposition of a symmetric matrix with numerical rank.

    Eigenpairs are sorted by decreasing ``|eigenvalue|`` and the eigenvectors
    sign-normalized. The rank counts eigenvalues above ``rank_tol`` times the
    largest magnitude.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NumericalError("matrix has non-finite entries")
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    order = np.argsort(-np.abs(w), kind="stable")
    w, V = w[order], normalize_signs(V[:, order])
    top = np.abs(w[0]) if w.size else 0.0
    rank = 0 if top == 0.0 else int(np.sum(np.abs(w) > rank_tol * top))
    return EigResult(w, V, rank)


def rank_one_svd_factor(R):
    """Best rank-one factorization ``R ~ outer(lam, mu)`` with ``|mu| = 1``."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    U, s, Vt = np.linalg.svd(R, full_matrices=False)
    return s[0] * U[:, 0], Vt[0].copy()


def relative_error(A, B) -> float:
    """Frobenius-norm relative error ``|A - B| / |B|``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch {A.shape} vs {B.shape}")
    den = np.linalg.norm(B)
    if den == 0.0:
        raise DivisionByZero("reference tensor has zero norm")
    return float(np.linalg.norm(A - B) / den)


def orthonormal_completion(X, rng=None, tol: float = 1e-8) -> np.ndarray:
    """Extend the orthonormal columns of ``X`` (n x r) to an n x n orthogonal matrix.

    New columns are Gaussian draws orthogonalized by modified Gram-Schmidt
    (two passes); a draw whose residual norm falls below ``tol`` is redrawn.
    """
    X = np.asarray(X, dtype=float)
    n, r = X.shape
    rng = as_generator(rng)
    Q = np.zeros((n, n))
    Q[:, :r] = X
    k = r
    while k < n:
        v = rng.standard_normal(n)
        for _ in range(2):
            for c in range(k):
                v -= (Q[:, c] @ v) * Q[:, c]
        nv = np.linalg.norm(v)
        if nv < tol:
            continue
        Q[:, k] = v / nv
        k += 1
    return Q


def random_orthonormal(n: int, r: int, rng=None) -> np.ndarray:
    """Haar-distributed n x r matrix with orthonormal columns."""
    rng = as_generator(rng)
    G = rng.standard_normal((n, max(r, 1)))
    Qm, Rm = np.linalg.qr(G)
    Qm = Qm * np.sign(np.diag(Rm))
    return Qm[:, :r]
