"""Scalar and 2x2 matrix-argument special functions.

Gamma-type products live in the log domain (``LogValue``); signed series
are summed in the linear domain after factoring out the largest scale.
"""

from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np
from scipy.special import gammaln

from .errors import NonConvergenceError, PreconditionError


@dataclass(frozen=True)
class LogValue:
    """Signed magnitude stored as ``sign * exp(log_abs)``."""

    sign: int
    log_abs: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or +1")

    @classmethod
    def from_float(cls, x):
        x = float(x)
        if x == 0.0:
            return cls(0, -math.inf)
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_log(cls, log_abs, sign=1):
        return cls(sign, float(log_abs))

    @classmethod
    def one(cls):
        return cls(1, 0.0)

    def __float__(self):
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_abs)

    def __mul__(self, other):
        if not isinstance(other, LogValue):
            other = LogValue.from_float(other)
        s = self.sign * other.sign
        if s == 0:
            return LogValue(0, -math.inf)
        return LogValue(s, self.log_abs + other.log_abs)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, LogValue):
            other = LogValue.from_float(other)
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero LogValue")
        if self.sign == 0:
            return self
        return LogValue(self.sign * other.sign, self.log_abs - other.log_abs)

    def __pow__(self, k):
        if self.sign == 0:
            return self if k > 0 else LogValue.one()
        if self.sign < 0 and k != int(k):
            raise ValueError("non-integer power of a negative LogValue")
        s = 1 if (self.sign > 0 or int(k) % 2 == 0) else -1
        return LogValue(s, self.log_abs * k)

    def __neg__(self):
        return LogValue(-self.sign, self.log_abs)

    def __add__(self, other):
        return log_sum([self, other])

    def isclose(self, other, rel=1e-12):
        if self.sign != other.sign:
            return False
        if self.sign == 0:
            return True
        return abs(self.log_abs - other.log_abs) <= rel


def log_sum(values):
    """Sum of LogValues, scaled by the largest magnitude and compensated."""
    vals = [v for v in values if v.sign != 0]
    if not vals:
        return LogValue(0, -math.inf)
    top = max(v.log_abs for v in vals)
    s = math.fsum(v.sign * math.exp(v.log_abs - top) for v in vals)
    if s == 0.0:
        return LogValue(0, -math.inf)
    return LogValue(1 if s > 0 else -1, top + math.log(abs(s)))


@dataclass(frozen=True, order=True)
class HalfInt:
    """Exact half-integer ``twice_value / 2``."""

    twice_value: int

    @classmethod
    def of(cls, x):
        if isinstance(x, HalfInt):
            return x
        f = Fraction(x)
        if (2 * f).denominator != 1:
            raise ValueError(f"{x!r} is not a half-integer")
        return cls(int(2 * f))

    def __add__(self, other):
        other = other if isinstance(other, HalfInt) else HalfInt.of(other)
        return HalfInt(self.twice_value + other.twice_value)

    def __sub__(self, other):
        other = other if isinstance(other, HalfInt) else HalfInt.of(other)
        return HalfInt(self.twice_value - other.twice_value)

    def __neg__(self):
        return HalfInt(-self.twice_value)

    def __float__(self):
        return self.twice_value / 2.0

    def __repr__(self):
        if self.twice_value % 2 == 0:
            return f"HalfInt({self.twice_value // 2})"
        return f"HalfInt({self.twice_value}/2)"


def log_gamma(x):
    """ln Gamma(x) for x > 0."""
    x = float(x)
    if not x > 0:
        raise PreconditionError(f"log_gamma needs x > 0, got {x}")
    return float(gammaln(x))


def log_multigamma(p, alpha):
    """ln Gamma_p(alpha) = p(p-1)/4 ln pi + sum_i ln Gamma(alpha - (i-1)/2)."""
    if p < 0 or int(p) != p:
        raise PreconditionError("log_multigamma needs an integer p >= 0")
    p = int(p)
    if p == 0:
        return 0.0
    if not alpha > (p - 1) / 2:
        raise PreconditionError(f"Gamma_{p}({alpha}) is at or below its pole boundary")
    return p * (p - 1) / 4 * math.log(math.pi) + sum(
        log_gamma(alpha - i / 2) for i in range(p))


def log_rising(a, k):
    """Rising factorial (a)_k as a LogValue."""
    if k < 0 or int(k) != k:
        raise PreconditionError("log_rising needs an integer k >= 0")
    k = int(k)
    if k == 0:
        return LogValue.one()
    if a > 0:
        return LogValue(1, float(gammaln(a + k) - gammaln(a)))
    sign, acc = 1, 0.0
    for j in range(k):
        x = a + j
        if x == 0:
            raise PreconditionError(f"rising factorial ({a})_{k} hits a pole")
        if x < 0:
            sign = -sign
        acc += math.log(abs(x))
    return LogValue(sign, acc)


def rising(a, k):
    return float(log_rising(a, k))


class GeometricTail:
    """Stopping rule for series of eventually decreasing terms.

    Stops once ``|term| * r / (1 - r)`` falls below ``tol * |partial|``,
    where ``r`` is the largest of the last few term ratios and must be < 1.
    """

    def __init__(self, tol, window=3):
        self.tol = tol
        self.window = window
        self.terms = []
        self.partial = 0.0
        self._comp = 0.0
        self.tail = math.inf

    def add(self, term):
        # Kahan-Babuska accumulation
        t = self.partial + term
        if abs(self.partial) >= abs(term):
            self._comp += (self.partial - t) + term
        else:
            self._comp += (term - t) + self.partial
        self.partial = t
        self.terms.append(abs(term))
        return self.check()

    @property
    def value(self):
        return self.partial + self._comp

    def ratio(self):
        ts = self.terms[-(self.window + 1):]
        if len(ts) < 2:
            return None
        rs = []
        for a, b in zip(ts[:-1], ts[1:]):
            if a == 0.0:
                if b == 0.0:
                    continue
                return None
            rs.append(b / a)
        return max(rs) if rs else 0.0

    def check(self):
        last = self.terms[-1]
        total = abs(self.value)
        if last == 0.0 and len(self.terms) > 1 and all(t == 0.0 for t in self.terms[-self.window:]):
            self.tail = 0.0
            return True
        r = self.ratio()
        if r is None or r >= 1.0:
            self.tail = math.inf
            return False
        self.tail = last * r / (1.0 - r)
        return self.tail <= self.tol * total


def hyp0f1_scalar(rho, t, tol=1e-15, max_terms=100000):
    """Classical 0F1(; rho; t) = sum_l t^l / (l! (rho)_l)."""
    if rho <= 0 and float(rho).is_integer():
        raise PreconditionError(f"0F1 undefined at nonpositive integer rho={rho}")
    if t == 0:
        return 1.0
    acc = GeometricTail(tol)
    term = 1.0
    acc.add(term)
    for l in range(max_terms):
        term *= t / ((l + 1) * (rho + l))
        # the term ratio is only a valid tail bound once it is decreasing
        done = acc.add(term)
        if done and l + 1 > abs(t) ** 0.5 and (l + 1) * abs(rho + l) > abs(t):
            return acc.value
    raise NonConvergenceError("0F1 series did not converge", partial=acc.value)


def hyp0f1_2x2(rho, y, tol=1e-15, max_terms=10000):
    """0F1(; rho; Y) for a symmetric 2x2 Y via the Muirhead determinant expansion.

    sum_q |Y|^q / (q! (rho)_{2q} (rho - 1/2)_q) * 0F1(; rho + 2q; tr Y)
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (2, 2):
        raise PreconditionError("hyp0f1_2x2 needs a 2x2 matrix")
    if not rho > 0.5:
        raise PreconditionError("hyp0f1_2x2 needs rho > 1/2")
    det = float(y[0, 0] * y[1, 1] - y[0, 1] * y[1, 0])
    tr = float(y[0, 0] + y[1, 1])
    acc = GeometricTail(tol)
    coef = 1.0
    for q in range(max_terms):
        if q > 0:
            coef *= det / (q * (rho + 2 * q - 2) * (rho + 2 * q - 1) * (rho - 0.5 + q - 1))
        term = coef * hyp0f1_scalar(rho + 2 * q, tr, tol=tol * 1e-2)
        if acc.add(term) and (q > 1 or det == 0):
            return acc.value
    raise NonConvergenceError("2x2 0F1 series did not converge", partial=acc.value)
