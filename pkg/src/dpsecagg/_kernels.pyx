# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled modular kernels; moduli must be below 2**32 so products fit in uint64."""

from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free
from cpython.long cimport PyLong_FromUnsignedLongLong
from cpython.tuple cimport PyTuple_New, PyTuple_SET_ITEM
from cpython.ref cimport Py_INCREF


cdef uint64_t* _load(seq, Py_ssize_t size) except NULL:
    cdef uint64_t* buf = <uint64_t*>malloc(max(size, 1) * sizeof(uint64_t))
    if buf == NULL:
        raise MemoryError()
    cdef Py_ssize_t i
    for i in range(size):
        buf[i] = seq[i]
    return buf


cdef uint64_t _inv(uint64_t a, uint64_t q):
    cdef int64_t t = 0, newt = 1, tmp
    cdef int64_t r = <int64_t>q, newr = <int64_t>a, quo
    while newr != 0:
        quo = r // newr
        tmp = t - quo * newt
        t = newt
        newt = tmp
        tmp = r - quo * newr
        r = newr
        newr = tmp
    if t < 0:
        t += <int64_t>q
    return <uint64_t>t


def matmul(a, b, Py_ssize_t n, Py_ssize_t k, Py_ssize_t m, uint64_t q):
    cdef uint64_t* A = _load(a, n * k)
    cdef uint64_t* B = _load(b, k * m)
    cdef uint64_t* C = <uint64_t*>malloc(max(n * m, 1) * sizeof(uint64_t))
    cdef Py_ssize_t i, t, j
    cdef uint64_t ait
    try:
        for i in range(n * m):
            C[i] = 0
        for i in range(n):
            for t in range(k):
                ait = A[i * k + t]
                if ait == 0:
                    continue
                for j in range(m):
                    C[i * m + j] = (C[i * m + j] + ait * B[t * m + j]) % q
        return [C[i] for i in range(n * m)]
    finally:
        free(A)
        free(B)
        free(C)


def rref(a, Py_ssize_t rows, Py_ssize_t cols, uint64_t q):
    cdef uint64_t* M = _load(a, rows * cols)
    cdef Py_ssize_t r = 0, c, p, s, j
    cdef uint64_t inv, f, tmp
    pivots = []
    try:
        for c in range(cols):
            if r == rows:
                break
            p = r
            while p < rows and M[p * cols + c] == 0:
                p += 1
            if p == rows:
                continue
            if p != r:
                for j in range(cols):
                    tmp = M[r * cols + j]
                    M[r * cols + j] = M[p * cols + j]
                    M[p * cols + j] = tmp
            inv = _inv(M[r * cols + c], q)
            for j in range(cols):
                M[r * cols + j] = (M[r * cols + j] * inv) % q
            for s in range(rows):
                if s == r:
                    continue
                f = M[s * cols + c]
                if f == 0:
                    continue
                f = q - f
                for j in range(cols):
                    M[s * cols + j] = (M[s * cols + j] + f * M[r * cols + j]) % q
            pivots.append(c)
            r += 1
        return [M[j] for j in range(rows * cols)], pivots
    finally:
        free(M)


def horner(coeffs, xs, uint64_t q):
    cdef Py_ssize_t n = len(coeffs), nx = len(xs), i, j
    cdef uint64_t* C = _load(coeffs, n)
    cdef uint64_t acc, x
    out = []
    try:
        for i in range(nx):
            x = xs[i]
            acc = 0
            for j in range(n - 1, -1, -1):
                acc = (acc * x + C[j]) % q
            out.append(acc)
        return out
    finally:
        free(C)


def dot(rows, flat, uint64_t q):
    # products are below 2^64; reduce lazily once the sum passes 2^63
    cdef uint64_t acc = 0, v
    cdef uint64_t top = (<uint64_t>1) << 63
    cdef Py_ssize_t pos = 0
    for row in rows:
        for x in row:
            v = x
            acc += v * <uint64_t>flat[pos] % q
            if acc >= top:
                acc %= q
            pos += 1
    return acc % q


def eval_queries(c, d, phis, theta, uint64_t q):
    cdef Py_ssize_t users = len(c), lp = len(phis), k = len(theta)
    cdef uint64_t* P = <uint64_t*>malloc(max(lp * k, 1) * sizeof(uint64_t))
    cdef uint64_t* T = _load(theta, k)
    cdef Py_ssize_t i, j, t
    cdef uint64_t ci, dij, r
    cdef bint small = q < ((<uint64_t>1) << 31)  # then c p + d t < 2^63
    if P == NULL:
        free(T)
        raise MemoryError()
    try:
        for j in range(lp):
            row = phis[j]
            for t in range(k):
                P[j * k + t] = row[t]
        out = []
        for i in range(users):
            ci = c[i]
            di = d[i]
            comps = PyTuple_New(lp)
            for j in range(lp):
                dij = di[j]
                comp = PyTuple_New(k)
                for t in range(k):
                    if small:
                        r = (ci * P[j * k + t] + dij * T[t]) % q
                    else:
                        r = (ci * P[j * k + t] % q + dij * T[t] % q) % q
                    v = PyLong_FromUnsignedLongLong(r)
                    Py_INCREF(v)
                    PyTuple_SET_ITEM(comp, t, v)
                Py_INCREF(comp)
                PyTuple_SET_ITEM(comps, j, comp)
            out.append(comps)
        return out
    finally:
        free(P)
        free(T)
