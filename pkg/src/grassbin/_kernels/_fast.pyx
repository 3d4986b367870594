# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementation of the hot kernels.

Mirrors grassbin._kernels._ref function for function. The inner loops run
over all 2^p states / subsets with a hand-rolled LU factorization on small
scratch buffers, avoiding per-state LAPACK dispatch overhead.
"""

from libc.stdlib cimport malloc, free
from libc.math cimport fabs, log, INFINITY

import numpy as np

BACKEND_NAME = "cython"


cdef double _lu_det(double* m, int n, double* minpiv) nogil:
    """In-place LU with partial pivoting; returns det, writes min |pivot|."""
    cdef int i, j, k, piv
    cdef double best, cur, pivot, factor, sign = 1.0, d = 1.0
    minpiv[0] = INFINITY
    for k in range(n):
        piv = k
        best = fabs(m[k * n + k])
        for i in range(k + 1, n):
            cur = fabs(m[i * n + k])
            if cur > best:
                best = cur
                piv = i
        if piv != k:
            for j in range(n):
                cur = m[k * n + j]
                m[k * n + j] = m[piv * n + j]
                m[piv * n + j] = cur
            sign = -sign
        pivot = m[k * n + k]
        if fabs(pivot) < minpiv[0]:
            minpiv[0] = fabs(pivot)
        if pivot == 0.0:
            return 0.0
        d *= pivot
        for i in range(k + 1, n):
            factor = m[i * n + k] / pivot
            m[i * n + k] = factor
            for j in range(k + 1, n):
                m[i * n + j] -= factor * m[k * n + j]
    return sign * d


cdef int _lu_factor(double* m, int n, int* perm) nogil:
    """LU factorization storing the pivot permutation; 0 on success, -1 if singular."""
    cdef int i, j, k, piv
    cdef double best, cur, pivot, factor
    for k in range(n):
        piv = k
        best = fabs(m[k * n + k])
        for i in range(k + 1, n):
            cur = fabs(m[i * n + k])
            if cur > best:
                best = cur
                piv = i
        perm[k] = piv
        if piv != k:
            for j in range(n):
                cur = m[k * n + j]
                m[k * n + j] = m[piv * n + j]
                m[piv * n + j] = cur
        pivot = m[k * n + k]
        if pivot == 0.0:
            return -1
        for i in range(k + 1, n):
            factor = m[i * n + k] / pivot
            m[i * n + k] = factor
            for j in range(k + 1, n):
                m[i * n + j] -= factor * m[k * n + j]
    return 0


cdef void _lu_inverse(double* lu, int n, int* perm, double* out, double* col) nogil:
    """Inverse from an LU factorization, one unit-vector solve per column."""
    cdef int i, j, c
    cdef double s
    for c in range(n):
        for i in range(n):
            col[i] = 1.0 if i == c else 0.0
        for i in range(n):
            if perm[i] != i:
                s = col[i]
                col[i] = col[perm[i]]
                col[perm[i]] = s
        for i in range(n):          # forward: L y = P e_c
            s = col[i]
            for j in range(i):
                s -= lu[i * n + j] * col[j]
            col[i] = s
        for i in range(n - 1, -1, -1):  # back: U x = y
            s = col[i]
            for j in range(i + 1, n):
                s -= lu[i * n + j] * col[j]
            col[i] = s / lu[i * n + i]
        for i in range(n):
            out[i * n + c] = col[i]


def det(a):
    """Determinant by LU with partial pivoting; the 0x0 determinant is 1."""
    cdef double[:, ::1] av = np.array(a, dtype=np.float64, order="C")
    cdef int n = av.shape[0]
    if n == 0:
        return 1.0
    cdef double* buf = <double*> malloc(n * n * sizeof(double))
    if buf == NULL:
        raise MemoryError
    cdef int i, j
    cdef double d, mp
    try:
        for i in range(n):
            for j in range(n):
                buf[i * n + j] = av[i, j]
        d = _lu_det(buf, n, &mp)
    finally:
        free(buf)
    return float(d)


def det_minpivot(a):
    """(determinant, smallest |pivot|) from an explicit LU factorization."""
    cdef double[:, ::1] av = np.array(a, dtype=np.float64, order="C")
    cdef int n = av.shape[0]
    if n == 0:
        return 1.0, float("inf")
    cdef double* buf = <double*> malloc(n * n * sizeof(double))
    if buf == NULL:
        raise MemoryError
    cdef int i, j
    cdef double d, mp
    try:
        for i in range(n):
            for j in range(n):
                buf[i * n + j] = av[i, j]
        d = _lu_det(buf, n, &mp)
    finally:
        free(buf)
    return float(d), float(mp)


def joint_table(lam, double det_lam):
    """All 2^p state probabilities det(lam[B,B] - I) / det_lam."""
    cdef double[:, ::1] lv = np.array(lam, dtype=np.float64, order="C")
    cdef int p = lv.shape[0]
    cdef long nstates = 1 << p
    out = np.empty(nstates, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double* sub = <double*> malloc(p * p * sizeof(double))
    cdef int* bidx = <int*> malloc(p * sizeof(int))
    if sub == NULL or bidx == NULL:
        free(sub); free(bidx)
        raise MemoryError
    cdef long mask
    cdef int i, j, k
    cdef double mp
    try:
        with nogil:
            for mask in range(nstates):
                k = 0
                for i in range(p):
                    if not (mask >> i) & 1:
                        bidx[k] = i
                        k += 1
                if k == 0:
                    ov[mask] = 1.0
                    continue
                for i in range(k):
                    for j in range(k):
                        sub[i * k + j] = lv[bidx[i], bidx[j]]
                    sub[i * k + i] -= 1.0
                ov[mask] = _lu_det(sub, k, &mp)
    finally:
        free(sub); free(bidx)
    return out / det_lam


def sum_principal_minors(a):
    """Sum of det(a[S,S]) over every subset S, including the empty minor (1)."""
    cdef double[:, ::1] av = np.array(a, dtype=np.float64, order="C")
    cdef int p = av.shape[0]
    cdef long nsub = 1 << p
    cdef double* sub = <double*> malloc(p * p * sizeof(double))
    cdef int* sidx = <int*> malloc(p * sizeof(int))
    if sub == NULL or sidx == NULL:
        free(sub); free(sidx)
        raise MemoryError
    cdef double total = 0.0, mp
    cdef long mask
    cdef int i, j, k
    try:
        with nogil:
            for mask in range(nsub):
                k = 0
                for i in range(p):
                    if (mask >> i) & 1:
                        sidx[k] = i
                        k += 1
                if k == 0:
                    total += 1.0
                    continue
                for i in range(k):
                    for j in range(k):
                        sub[i * k + j] = av[sidx[i], sidx[j]]
                total += _lu_det(sub, k, &mp)
    finally:
        free(sub); free(sidx)
    return float(total)


def p0_witness(a, double tol):
    """First subset (by cardinality, then lexicographic) with minor < -tol.

    Returns the subset as a bitmask, or -1 when the matrix is P0.
    """
    cdef double[:, ::1] av = np.array(a, dtype=np.float64, order="C")
    cdef int p = av.shape[0]
    cdef double* sub = <double*> malloc(p * p * sizeof(double))
    cdef int* c = <int*> malloc((p + 1) * sizeof(int))
    if sub == NULL or c == NULL:
        free(sub); free(c)
        raise MemoryError
    cdef int i, j, k, pos
    cdef double d, mp
    cdef long mask = -1
    cdef bint done
    try:
        with nogil:
            for k in range(1, p + 1):
                for i in range(k):      # first combination 0..k-1
                    c[i] = i
                while True:
                    for i in range(k):
                        for j in range(k):
                            sub[i * k + j] = av[c[i], c[j]]
                    d = _lu_det(sub, k, &mp)
                    if d < -tol:
                        mask = 0
                        for i in range(k):
                            mask |= (<long> 1) << c[i]
                        break
                    # advance to the next combination in lexicographic order
                    pos = k - 1
                    while pos >= 0 and c[pos] == p - k + pos:
                        pos -= 1
                    if pos < 0:
                        break
                    c[pos] += 1
                    for i in range(pos + 1, k):
                        c[i] = c[i - 1] + 1
                if mask != -1:
                    break
    finally:
        free(sub); free(c)
    return int(mask)


def loglik_grad(lam, w):
    """Weighted log-determinant sum over states and its gradient in lam.

    Returns (ok, value, grad) with value = sum_m w[m] log det(lam[B(m)] - I);
    ok is False when any state determinant is not strictly positive.
    """
    cdef double[:, ::1] lv = np.array(lam, dtype=np.float64, order="C")
    cdef double[::1] wv = np.array(w, dtype=np.float64, order="C")
    cdef int p = lv.shape[0]
    cdef long nstates = 1 << p
    grad = np.zeros((p, p), dtype=np.float64)
    cdef double[:, ::1] gv = grad
    cdef double* sub = <double*> malloc(p * p * sizeof(double))
    cdef double* inv = <double*> malloc(p * p * sizeof(double))
    cdef double* col = <double*> malloc(p * sizeof(double))
    cdef int* bidx = <int*> malloc(p * sizeof(int))
    cdef int* perm = <int*> malloc(p * sizeof(int))
    if sub == NULL or inv == NULL or col == NULL or bidx == NULL or perm == NULL:
        free(sub); free(inv); free(col); free(bidx); free(perm)
        raise MemoryError
    cdef double val = 0.0, d, wm, sign
    cdef long mask
    cdef int i, j, k
    cdef bint ok = True
    try:
        with nogil:
            for mask in range(nstates):
                k = 0
                for i in range(p):
                    if not (mask >> i) & 1:
                        bidx[k] = i
                        k += 1
                if k == 0:
                    continue
                for i in range(k):
                    for j in range(k):
                        sub[i * k + j] = lv[bidx[i], bidx[j]]
                    sub[i * k + i] -= 1.0
                if _lu_factor(sub, k, perm) != 0:
                    ok = False
                    break
                d = 1.0
                sign = 1.0
                for i in range(k):
                    if perm[i] != i:
                        sign = -sign
                    d *= sub[i * k + i]
                d *= sign
                if d <= 0.0:
                    ok = False
                    break
                wm = wv[mask]
                val += wm * log(d)
                _lu_inverse(sub, k, perm, inv, col)
                # accumulate w * inverse-transpose scattered into (B, B)
                for i in range(k):
                    for j in range(k):
                        gv[bidx[i], bidx[j]] += wm * inv[j * k + i]
    finally:
        free(sub); free(inv); free(col); free(bidx); free(perm)
    if not ok:
        return False, float("-inf"), grad
    return True, float(val), grad
