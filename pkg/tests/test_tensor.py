import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ttodeco.errors import DimensionError, DivisionByZero, InvalidTrain, NumericalError
from ttodeco.tensor import (
    OdecoCarriage,
    SymmetricCarriage,
    TrainDecomposition,
    as_tensor,
    assemble_train,
    multilinear_contract,
    normalize_signs,
    orthonormal_completion,
    random_orthonormal,
    rank_one_svd_factor,
    relative_error,
    symmetric_eig_rank,
    weighted_slice_sum,
)

from conftest import symmetric_train

e1, e2 = np.eye(2)


def e1_fourth():
    T = np.zeros((2, 2, 2, 2))
    T[0, 0, 0, 0] = 1.0
    return T


def unit_train(u, v):
    return TrainDecomposition(
        [SymmetricCarriage([1.0], u[:, None]), SymmetricCarriage([1.0], v[:, None])]
    )


class TestAsTensor:
    def test_row_major(self):
        T = as_tensor(range(6), [2, 3])
        assert T[1, 0] == 3.0 and T.flags.c_contiguous

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            as_tensor([1, 2, 3], [2, 2])

    def test_nonpositive_shape(self):
        with pytest.raises(DimensionError):
            as_tensor([], [0, 2])


class TestCarriages:
    def test_unit_norm_enforced(self):
        with pytest.raises(InvalidTrain):
            SymmetricCarriage([1.0], np.array([[2.0], [0.0]]))

    def test_zero_coefficient_rejected(self):
        with pytest.raises(InvalidTrain):
            SymmetricCarriage([0.0], e1[:, None])

    def test_non_orthogonal_needs_flag(self):
        V = np.array([[1.0, np.sqrt(0.5)], [0.0, np.sqrt(0.5)]])
        with pytest.raises(InvalidTrain):
            SymmetricCarriage([1.0, 1.0], V)
        assert SymmetricCarriage([1.0, 1.0], V, orthogonal=False).rank == 2

    def test_train_needs_two(self):
        with pytest.raises(InvalidTrain):
            TrainDecomposition([SymmetricCarriage([1.0], e1[:, None])])

    def test_bond_mismatch(self):
        with pytest.raises(InvalidTrain):
            TrainDecomposition([SymmetricCarriage([1.0], e1[:, None]),
                                SymmetricCarriage([1.0], np.eye(3)[:, :1])])

    def test_odeco_length_two_only(self):
        c = OdecoCarriage([1.0], e1[:, None], e1[:, None], e1[:, None])
        with pytest.raises(InvalidTrain):
            TrainDecomposition([c, c, c])

    def test_mixed_types(self):
        c = OdecoCarriage([1.0], e1[:, None], e1[:, None], e1[:, None])
        with pytest.raises(InvalidTrain):
            TrainDecomposition([c, SymmetricCarriage([1.0], e1[:, None])])


class TestAssembleTrain:
    def test_single_term(self):
        np.testing.assert_array_equal(assemble_train(unit_train(e1, e1)), e1_fourth())

    def test_orthogonal_bond_kills_term(self):
        assert not np.any(assemble_train(unit_train(e1, e2)))

    def test_matches_explicit_sum(self, rng):
        T, dec = symmetric_train(3, (2, 2), rng)
        a, b = dec.carriages
        ref = np.zeros((3,) * 4)
        for i in range(2):
            for j in range(2):
                u, v = a.vectors[:, i], b.vectors[:, j]
                w = a.coefficients[i] * b.coefficients[j] * (u @ v)
                ref += w * np.einsum("a,b,c,d->abcd", u, u, v, v)
        np.testing.assert_allclose(T, ref, atol=1e-14)

    def test_length_three_mode_count(self, rng):
        T, _ = symmetric_train(3, (2, 1, 2), rng)
        assert T.shape == (3,) * 5

    def test_contracted_edges_power(self, rng):
        T1, dec = symmetric_train(3, (1, 1), rng)
        T2 = assemble_train(TrainDecomposition(dec.carriages, contracted_edges=2))
        g = dec.carriages[0].vectors[:, 0] @ dec.carriages[1].vectors[:, 0]
        np.testing.assert_allclose(T2, g * T1, atol=1e-14)

    def test_linear_in_coefficients(self, rng):
        T, dec = symmetric_train(4, (2, 3), rng)
        a, b = dec.carriages
        doubled = TrainDecomposition([SymmetricCarriage(2 * a.coefficients, a.vectors), b])
        np.testing.assert_allclose(assemble_train(doubled), 2 * T, rtol=0, atol=1e-14)

    def test_odeco_explicit_sum(self, rng):
        from conftest import odeco_train

        T, dec = odeco_train(3, 4, (2, 2), rng)
        L, R = dec.carriages
        ref = np.einsum(
            "i,ai,bi,j,dj,ej,ij->abde",
            L.coefficients, L.vectors_a, L.vectors_b,
            R.coefficients, R.vectors_a, R.vectors_b,
            L.vectors_c.T @ R.vectors_c,
        )
        np.testing.assert_allclose(T, ref, atol=1e-14)


class TestMultilinearContract:
    def test_all_modes_scalar(self):
        assert multilinear_contract(e1_fourth(), [e1] * 4) == pytest.approx(1.0)

    def test_two_free_modes(self):
        M = multilinear_contract(e1_fourth(), [None, None, e1, e1])
        np.testing.assert_array_equal(M, np.outer(e1, e1))

    def test_identity(self, rng):
        T = rng.standard_normal((2, 3, 4))
        np.testing.assert_allclose(multilinear_contract(T, [np.eye(2), np.eye(3), np.eye(4)]), T)

    def test_size_mismatch(self):
        with pytest.raises(DimensionError):
            multilinear_contract(e1_fourth(), [np.ones(3), None, None, None])

    def test_wrong_mode_count(self):
        with pytest.raises(DimensionError):
            multilinear_contract(e1_fourth(), [None])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_composition(self, seed):
        r = np.random.default_rng(seed)
        T = r.standard_normal((3, 2, 4))
        W1 = [r.standard_normal((5, 3)), r.standard_normal((2, 2)), r.standard_normal((3, 4))]
        W2 = [r.standard_normal((2, 5)), r.standard_normal((4, 2)), r.standard_normal((3, 3))]
        twice = multilinear_contract(multilinear_contract(T, W1), W2)
        once = multilinear_contract(T, [b @ a for a, b in zip(W1, W2)])
        np.testing.assert_allclose(twice, once, rtol=1e-12, atol=1e-12 * np.abs(once).max())


class TestWeightedSliceSum:
    def test_all_ones(self):
        np.testing.assert_array_equal(weighted_slice_sum(e1_fourth(), (0, 1), np.ones((2, 2))),
                                      np.outer(e1, e1))

    def test_single_weight(self):
        w = np.zeros((2, 2))
        w[0, 0] = 5.0
        np.testing.assert_array_equal(weighted_slice_sum(e1_fourth(), (2, 3), w), 5 * np.outer(e1, e1))

    def test_bad_modes(self):
        with pytest.raises(DimensionError):
            weighted_slice_sum(e1_fourth(), (0, 4))
        with pytest.raises(DimensionError):
            weighted_slice_sum(e1_fourth(), (1, 1))

    def test_needs_three_modes(self):
        with pytest.raises(DimensionError):
            weighted_slice_sum(np.eye(2), (0, 1))

    def test_matches_direct_construction(self):
        # oracle: sum_i sigma_i u_i u_i^T with sigma_i computed from the factors
        rng = np.random.default_rng(3)
        T, dec = symmetric_train(5, (2, 3), rng)
        A, B = dec.carriages
        W = rng.standard_normal((5, 5))
        S = weighted_slice_sum(T, (0, 1), W)
        U, V = A.vectors, B.vectors
        quad = np.einsum("aj,ab,bj->j", V, W, V)
        sigma = A.coefficients * ((U.T @ V) @ (B.coefficients * quad))
        np.testing.assert_allclose(S, (U * sigma) @ U.T, atol=1e-13)
        # range lies in span{u_i}
        P = U @ U.T
        assert np.linalg.norm(S - P @ S) < 1e-10 * np.linalg.norm(S)
        np.testing.assert_allclose(S, S.T, atol=1e-10)


class TestSymmetricEigRank:
    def test_identity(self):
        res = symmetric_eig_rank(np.eye(2))
        np.testing.assert_allclose(res.eigenvalues, [1, 1])
        assert res.rank == 2

    def test_zero(self):
        assert symmetric_eig_rank(np.zeros((3, 3))).rank == 0

    def test_diagonal_signs(self):
        res = symmetric_eig_rank(np.diag([3.0, -2.0, 0.0]))
        assert res.rank == 2
        np.testing.assert_allclose(res.eigenvalues[:2], [3.0, -2.0])
        np.testing.assert_allclose(res.eigenvectors[:, :2], np.eye(3)[:, :2])

    def test_non_finite(self):
        with pytest.raises(NumericalError):
            symmetric_eig_rank(np.array([[np.nan, 0], [0, 1]]))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**31 - 1))
    def test_reconstruction_and_orthonormality(self, n, seed):
        G = np.random.default_rng(seed).standard_normal((n, n))
        M = G + G.T
        w, V, _ = symmetric_eig_rank(M)
        assert np.linalg.norm(M - (V * w) @ V.T) < 1e-12 * max(np.linalg.norm(M), 1)
        np.testing.assert_allclose(V.T @ V, np.eye(n), atol=1e-12)
        assert np.all(np.diff(np.abs(w)) <= 1e-12)

    def test_sign_convention(self, rng):
        G = rng.standard_normal((4, 4))
        V = symmetric_eig_rank(G + G.T).eigenvectors
        rows = np.argmax(np.abs(V), axis=0)
        assert np.all(V[rows, range(4)] > 0)


class TestRankOneSvdFactor:
    def test_scalar(self):
        lam, mu = rank_one_svd_factor([[6.0]])
        assert abs(lam[0]) == pytest.approx(6.0) and abs(mu[0]) == pytest.approx(1.0)
        assert lam[0] * mu[0] == pytest.approx(6.0)

    def test_rank_one_matrix(self):
        R = np.array([[2.0, 4.0], [3.0, 6.0]])
        lam, mu = rank_one_svd_factor(R)
        np.testing.assert_allclose(np.outer(lam, mu), R, atol=1e-12)

    def test_zero(self):
        lam, _ = rank_one_svd_factor(np.zeros((2, 2)))
        np.testing.assert_array_equal(lam, 0.0)


class TestRelativeError:
    def test_values(self, rng):
        B = rng.standard_normal((3, 3))
        assert relative_error(B, B) == 0.0
        assert relative_error(2 * B, B) == pytest.approx(1.0)
        assert relative_error(1.01 * B, B) == pytest.approx(0.01)

    def test_errors(self):
        with pytest.raises(DimensionError):
            relative_error(np.ones(2), np.ones(3))
        with pytest.raises(DivisionByZero):
            relative_error(np.ones(2), np.zeros(2))


def test_orthonormal_completion(rng):
    X = random_orthonormal(5, 2, rng)
    Q = orthonormal_completion(X, rng)
    np.testing.assert_allclose(Q.T @ Q, np.eye(5), atol=1e-12)
    np.testing.assert_array_equal(Q[:, :2], X)


def test_normalize_signs():
    V = normalize_signs(np.array([[0.1, -0.9], [-0.8, 0.2]]))
    np.testing.assert_allclose(V, [[-0.1, 0.9], [0.8, -0.2]])
