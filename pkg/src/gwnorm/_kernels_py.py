"""Pure numpy implementations of the hot kernels (fallback backend)."""

import numpy as np


def mc_logweights(phid, phio, eidx, L, coup, use_coup):
    """Log importance weights for a block of samples.

    Coordinates are rank-ordered. ``phid[s, j]`` is the whitened diagonal,
    ``phio[s, e]`` the whitened free entry of edge ``e``; ``eidx[i, j]`` maps
    an upper position to its edge column or -1.
    """
    n, p = phid.shape
    M = np.zeros((p, p, n))
    lw = np.zeros(n)
    for j in range(p - 1, -1, -1):
        M[j, j] = phid[:, j] / L[j, j]
        for i in range(j - 1, -1, -1):
            acc = np.zeros(n)
            for r in range(i + 1, j + 1):
                if L[r, i] != 0.0:
                    acc += L[r, i] * M[r, j]
            e = eidx[i, j]
            if e >= 0:
                M[i, j] = (phio[:, e] - acc) / L[i, i]
            else:
                t = np.zeros(n)
                for k in range(j + 1, p):
                    t += M[i, k] * M[j, k]
                M[i, j] = -t / M[j, j]
                f = L[i, i] * M[i, j] + acc
                lw -= f * f
    if use_coup:
        for i in range(p):
            for j in range(i + 1, p):
                if eidx[i, j] >= 0 and coup[i, j] != 0.0:
                    K = np.zeros(n)
                    for k in range(j, p):
                        K += M[i, k] * M[j, k]
                    lw -= 2.0 * coup[i, j] * K
    return lw


def graded_recurrence(Q, R, h0, N):
    """Taylor coefficients of h with Q * theta(h) = R * h, theta the total-degree operator.

    Q and R are dense coefficient arrays in 2 or 3 variables with R(0) = 0.
    Returns the dense array of coefficients up to total degree N.
    """
    nv = Q.ndim
    H = np.zeros((N + 1,) * nv)
    H[(0,) * nv] = h0
    q0 = Q[(0,) * nv]
    kern = []
    for idx in zip(*np.nonzero((Q != 0) | (R != 0))):
        s = sum(idx)
        if s > 0:
            kern.append((idx, s, Q[idx], R[idx]))
    grades = _grade_index(N, nv)
    for n in range(1, N + 1):
        tgt = grades[n]
        acc = np.zeros(len(tgt[0]))
        for idx, s, qv, rv in kern:
            if s > n:
                continue
            src = tuple(t - a for t, a in zip(tgt, idx))
            ok = np.ones(len(acc), dtype=bool)
            for c in src:
                ok &= c >= 0
            w = rv - (n - s) * qv
            if w != 0.0:
                acc[ok] += w * H[tuple(c[ok] for c in src)]
        H[tgt] = acc / (n * q0)
    return H


_grade_cache = {}


def _grade_index(N, nv):
    key = (N, nv)
    if key not in _grade_cache:
        out = []
        for n in range(N + 1):
            if nv == 2:
                i = np.arange(n + 1)
                out.append((i, n - i))
            else:
                ii, jj = [], []
                for i in range(n + 1):
                    for j in range(n - i + 1):
                        ii.append(i)
                        jj.append(j)
                ii, jj = np.array(ii, dtype=int), np.array(jj, dtype=int)
                out.append((ii, jj, n - ii - jj))
        _grade_cache[key] = out
    return _grade_cache[key]
