"""Truncated Taylor coefficients of products of powers of polynomials.

For h = prod_k P_k^{a_k} the total-degree Euler operator satisfies
Q * theta(h) = R * h with Q = prod_k P_k and
R = sum_k a_k theta(P_k) prod_{j != k} P_j, which gives a grade-by-grade
recurrence for the coefficients (see ``kernels.graded_recurrence``).
"""

import math

import numpy as np
from scipy.signal import convolve

from . import kernels


def theta(a):
    """Euler operator on a dense coefficient array: multiply by total degree."""
    return a * np.indices(a.shape).sum(0)


def poly_mul(a, b):
    return convolve(a, b, method="direct")


def _pad(a, size):
    out = np.zeros((size,) * a.ndim)
    out[tuple(slice(0, s) for s in a.shape)] = a
    return out


def euler_pair(dense_factors, exponents):
    """Dense (Q, R) for the product of powers, padded to a common shape."""
    nv = dense_factors[0].ndim
    Q = np.ones((1,) * nv)
    for P in dense_factors:
        Q = poly_mul(Q, P)
    R = np.zeros_like(Q)
    for k, (P, a) in enumerate(zip(dense_factors, exponents)):
        term = a * theta(P)
        for j, Pj in enumerate(dense_factors):
            if j != k:
                term = poly_mul(term, Pj)
        R = R + _pad(term, R.shape[0])
    return Q, R


def power_product_series(factors, N, backend=None):
    """Coefficients of prod_k P_k^{a_k} around the origin up to total degree N.

    ``factors`` is a list of ``(Poly, alpha)``. Returns ``(H, log_h0, sign)``
    with ``H[0...0] == 1``; the true coefficients are ``sign*exp(log_h0)*H``.
    """
    if not factors:
        raise ValueError("empty product")
    nv = len(factors[0][0].vars)
    dense, alphas = [], []
    log_h0, sign = 0.0, 1
    for P, a in factors:
        c = P.to_dense()
        c0 = c[(0,) * nv]
        if c0 == 0.0:
            raise ZeroDivisionError("factor vanishes at the expansion point")
        # normalize each factor to unit constant term
        if c0 < 0:
            if float(a) != int(float(a)):
                raise ValueError("non-integer power of a negative factor")
            if int(float(a)) % 2:
                sign = -sign
        log_h0 += float(a) * math.log(abs(c0))
        dense.append(c / c0)
        alphas.append(float(a))
    if nv == 1:
        return _series_1d(dense, alphas, N), log_h0, sign
    Q, R = euler_pair(dense, alphas)
    rec = kernels.get("graded_recurrence", backend)
    H = rec(np.ascontiguousarray(Q), np.ascontiguousarray(R), 1.0, N)
    return H, log_h0, sign


def _series_1d(dense, alphas, N):
    # lift to two variables and read off the first axis
    lifted = []
    for c in dense:
        a = np.zeros((len(c), len(c)))
        a[:, 0] = c
        lifted.append(a)
    Q, R = euler_pair(lifted, alphas)
    H = kernels.get("graded_recurrence")(Q, R, 1.0, N)
    return H[:, 0].copy()
