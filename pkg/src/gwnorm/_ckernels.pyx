# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; same contract as _kernels_py."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def mc_logweights(double[:, ::1] phid, double[:, ::1] phio, long[:, ::1] eidx,
                  double[:, ::1] L, double[:, ::1] coup, bint use_coup):
    cdef Py_ssize_t n = phid.shape[0], p = phid.shape[1]
    cdef Py_ssize_t s, i, j, k, r
    cdef long e
    cdef double acc, t, f, lw, K
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double[:, ::1] M = np.zeros((p, p))
    with nogil:
        for s in range(n):
            lw = 0.0
            for j in range(p - 1, -1, -1):
                M[j, j] = phid[s, j] / L[j, j]
                for i in range(j - 1, -1, -1):
                    acc = 0.0
                    for r in range(i + 1, j + 1):
                        acc = acc + L[r, i] * M[r, j]
                    e = eidx[i, j]
                    if e >= 0:
                        M[i, j] = (phio[s, e] - acc) / L[i, i]
                    else:
                        t = 0.0
                        for k in range(j + 1, p):
                            t = t + M[i, k] * M[j, k]
                        M[i, j] = -t / M[j, j]
                        f = L[i, i] * M[i, j] + acc
                        lw = lw - f * f
            if use_coup:
                for i in range(p):
                    for j in range(i + 1, p):
                        if eidx[i, j] >= 0 and coup[i, j] != 0.0:
                            K = 0.0
                            for k in range(j, p):
                                K = K + M[i, k] * M[j, k]
                            lw = lw - 2.0 * coup[i, j] * K
            o[s] = lw
    return out


def graded_recurrence(Q, R, double h0, int N):
    Q = np.ascontiguousarray(Q, dtype=float)
    R = np.ascontiguousarray(R, dtype=float)
    if Q.ndim == 2:
        return _rec2(Q, R, h0, N)
    return _rec3(Q, R, h0, N)


cdef _rec2(double[:, ::1] Q, double[:, ::1] R, double h0, int N):
    cdef Py_ssize_t dq = Q.shape[0], n, i, j, a, b, s
    cdef double acc, q0 = Q[0, 0]
    H = np.zeros((N + 1, N + 1))
    cdef double[:, ::1] h = H
    h[0, 0] = h0
    with nogil:
        for n in range(1, N + 1):
            for i in range(n + 1):
                j = n - i
                acc = 0.0
                for a in range(min(i, dq - 1) + 1):
                    for b in range(min(j, dq - 1) + 1):
                        s = a + b
                        if s == 0 or s >= dq:
                            continue
                        if Q[a, b] != 0.0 or R[a, b] != 0.0:
                            acc = acc + (R[a, b] - (n - s) * Q[a, b]) * h[i - a, j - b]
                h[i, j] = acc / (n * q0)
    return H


cdef _rec3(double[:, :, ::1] Q, double[:, :, ::1] R, double h0, int N):
    cdef Py_ssize_t dq = Q.shape[0], n, i, j, k, a, b, c, s
    cdef double acc, w, q0 = Q[0, 0, 0]
    H = np.zeros((N + 1, N + 1, N + 1))
    cdef double[:, :, ::1] h = H
    h[0, 0, 0] = h0
    with nogil:
        for n in range(1, N + 1):
            for i in range(n + 1):
                for j in range(n - i + 1):
                    k = n - i - j
                    acc = 0.0
                    for a in range(min(i, dq - 1) + 1):
                        for b in range(min(j, dq - 1) + 1):
                            for c in range(min(k, dq - 1) + 1):
                                s = a + b + c
                                if s == 0 or s >= dq:
                                    continue
                                w = R[a, b, c] - (n - s) * Q[a, b, c]
                                if w != 0.0:
                                    acc = acc + w * h[i - a, j - b, k - c]
                    h[i, j, k] = acc / (n * q0)
    return H
