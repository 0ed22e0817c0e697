# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Sinkhorn and Tandem Procrustes loops.

Same contracts as the numpy versions in ``_fallback``.
"""

import numpy as np
from numpy.linalg import LinAlgError

from scipy.linalg.cython_blas cimport dgemm
from scipy.linalg.cython_lapack cimport dgesvd


def sinkhorn_balance(P_in, double tol, int max_iter):
    cdef double[:, ::1] P = np.ascontiguousarray(P_in, dtype=np.float64)
    cdef Py_ssize_t m = P.shape[0], n = P.shape[1], i, j
    r_arr = np.ones(m)
    c_arr = np.ones(n)
    colsum_arr = np.empty(n)
    cdef double[::1] r = r_arr, c = c_arr, colsum = colsum_arr
    cdef double s, dev, x
    cdef int it = 0
    while True:
        dev = 0.0
        for j in range(n):
            colsum[j] = 0.0
        for i in range(m):
            s = 0.0
            for j in range(n):
                x = r[i] * P[i, j] * c[j]
                s += x
                colsum[j] += x
            dev += (s - 1.0) * (s - 1.0)
        for j in range(n):
            dev += (colsum[j] - 1.0) * (colsum[j] - 1.0)
        if dev < tol:
            return r_arr, c_arr, it, True
        if it >= max_iter:
            return r_arr, c_arr, it, False
        for i in range(m):
            s = 0.0
            for j in range(n):
                s += P[i, j] * c[j]
            r[i] = 1.0 / s
        for j in range(n):
            colsum[j] = 0.0
        for i in range(m):
            for j in range(n):
                colsum[j] += r[i] * P[i, j]
        for j in range(n):
            c[j] = 1.0 / colsum[j]
        it += 1


def tandem_procrustes_eye(A_in, double tol, double rtol, int max_iter):
    cdef double[:, ::1] A = np.ascontiguousarray(A_in, dtype=np.float64)
    cdef int d = <int>A.shape[0]
    if A.shape[1] != d:
        raise ValueError("square matrix required")
    cdef Py_ssize_t i, j
    D_arr = np.ones(d)
    V_arr = np.empty((d, d))
    cdef double[::1] D = D_arr
    cdef double[:, ::1] V = V_arr
    # C-ordered buffers handed to Fortran routines are seen transposed
    cdef double[:, ::1] M = np.empty((d, d))
    cdef double[:, ::1] U = np.empty((d, d))
    cdef double[:, ::1] Wt = np.empty((d, d))
    cdef double[::1] S = np.empty(max(d, 1))
    cdef int lwork = -1, info = 0, ldd = d
    cdef double wq
    cdef char jobz = b'A'
    cdef char tr = b'N'
    cdef double one = 1.0, zero = 0.0
    dgesvd(&jobz, &jobz, &ldd, &ldd, &M[0, 0], &ldd, &S[0], &U[0, 0], &ldd,
           &Wt[0, 0], &ldd, &wq, &lwork, &info)
    lwork = max(<int>wq, 1)
    cdef double[::1] work = np.empty(lwork)
    res = []
    cdef double prev = -1.0, cur, e
    for _ in range(max_iter):
        for i in range(d):
            for j in range(d):
                M[i, j] = A[i, j] * D[j]
        # LAPACK sees M^T = U_f S Wt_f; polar(M) = (U_f Wt_f)^T, whose
        # C-ordered storage equals the Fortran storage of U_f Wt_f
        dgesvd(&jobz, &jobz, &ldd, &ldd, &M[0, 0], &ldd, &S[0], &U[0, 0], &ldd,
               &Wt[0, 0], &ldd, &work[0], &lwork, &info)
        if info != 0:
            raise LinAlgError(f"dgesvd failed with info={info}")
        dgemm(&tr, &tr, &ldd, &ldd, &ldd, &one, &U[0, 0], &ldd, &Wt[0, 0], &ldd,
              &zero, &V[0, 0], &ldd)
        for j in range(d):
            D[j] = 0.0
        for i in range(d):
            for j in range(d):
                D[j] += A[i, j] * V[i, j]
        cur = 0.0
        for i in range(d):
            for j in range(d):
                e = A[i, j] - V[i, j] * D[j]
                cur += e * e
        res.append(cur)
        if cur < tol or (prev >= 0 and abs(prev - cur) <= rtol * prev):
            break
        prev = cur
    return V_arr, D_arr, np.asarray(res)
