import numpy as np
import pytest
import sympy as sp

from ttodeco.tensor import (
    OdecoCarriage,
    SymmetricCarriage,
    TrainDecomposition,
    assemble_train,
    random_orthonormal,
)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def coefficients(r, rng):
    return rng.uniform(0.5, 2.0, r) * rng.choice([-1.0, 1.0], r)


def symmetric_train(n, ranks, rng, p=1):
    """Exact orthogonal symmetric train and its tensor."""
    cars = [SymmetricCarriage(coefficients(r, rng), random_orthonormal(n, r, rng)) for r in ranks]
    dec = TrainDecomposition(cars, contracted_edges=p)
    return assemble_train(dec), dec


def odeco_train(n, bond, ranks, rng):
    cars = [
        OdecoCarriage(
            coefficients(r, rng),
            random_orthonormal(n, r, rng),
            random_orthonormal(n, r, rng),
            random_orthonormal(bond, r, rng),
        )
        for r in ranks
    ]
    dec = TrainDecomposition(cars)
    return assemble_train(dec), dec


def dodd_matrix(rows, cols, d, rng):
    lam, mu = coefficients(d, rng), coefficients(d, rng)
    Q = random_orthonormal(d, d, rng)
    return (lam[:, None] * Q * mu[None, :])[:rows, :cols]


def span_gap(X, Y):
    """Sine of the largest principal angle between two column spaces."""
    if X.shape[1] != Y.shape[1]:
        return 1.0
    return float(np.linalg.norm(Y - X @ (X.T @ Y), 2))


def match_utps(X, Y):
    """Largest deviation after greedy |inner product| matching of columns."""
    G = np.abs(X.T @ Y)
    worst = 0.0
    used = set()
    for i in range(G.shape[0]):
        j = max((j for j in range(G.shape[1]) if j not in used), key=lambda j: G[i, j])
        used.add(j)
        worst = max(worst, 1.0 - G[i, j])
    return worst


def low_rank_symmetric(n, k, rng):
    Q = random_orthonormal(n, n, rng)
    m = np.zeros(n)
    m[:k] = rng.uniform(0.5, 2.0, k) * rng.choice([-1, 1], k)
    return (Q * m) @ Q.T


def eliminate(S, r):
    """Exact completion by Gaussian elimination over the rationals.

    Row by row, the entries from the diagonal onward are symbols and the row
    is required to be a combination of the known rows; solved entries are
    mirrored before the next row.
    """
    n = S.shape[0]
    M = sp.Matrix(n, n, lambda i, j: sp.Rational(S[i, j]) if min(i, j) < r else 0)
    for k in range(r, n):
        c = sp.symbols(f"c0:{r}")
        x = sp.symbols(f"x{k}:{n}")
        eqs = [M[k, j] - sum(c[i] * M[i, j] for i in range(r)) for j in range(r)]
        eqs += [x[j - k] - sum(c[i] * M[i, j] for i in range(r)) for j in range(k, n)]
        (sol,) = sp.linsolve(eqs, list(c) + list(x))
        for j in range(k, n):
            M[k, j] = M[j, k] = sol[r + j - k]
    return np.array(M.evalf(30).tolist(), dtype=float)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE = []


def record(criterion, passed, detail):
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
