"""Small symbolic engine: sums of products of real powers of polynomials.

An expression is stored as ``{signature: Poly}`` where a signature is a
frozen set of ``(power_base, alpha)`` pairs. Each entry stands for
``Poly * prod(base ** alpha)``. Integer powers of a base fold into the
polynomial part, so like terms combine exactly under differentiation.
"""

from fractions import Fraction
import math

import numpy as np


class Poly:
    """Sparse multivariate polynomial over a fixed tuple of variable names."""

    __slots__ = ("vars", "terms", "_key")

    def __init__(self, vars, terms=None):
        self.vars = tuple(vars)
        t = {}
        for e, c in (terms or {}).items():
            if c != 0:
                t[tuple(e)] = c
        self.terms = t
        self._key = None

    @classmethod
    def const(cls, vars, c):
        return cls(vars, {(0,) * len(vars): c})

    @classmethod
    def var(cls, vars, name):
        e = [0] * len(vars)
        e[vars.index(name)] = 1
        return cls(vars, {tuple(e): 1})

    def key(self):
        if self._key is None:
            self._key = (self.vars, tuple(sorted(self.terms.items())))
        return self._key

    def __hash__(self):
        return hash(self.key())

    def __eq__(self, other):
        return isinstance(other, Poly) and self.key() == other.key()

    def is_zero(self):
        return not self.terms

    def constant_value(self):
        """The scalar value if the polynomial is constant, else None."""
        if not self.terms:
            return 0
        if len(self.terms) == 1:
            (e, c), = self.terms.items()
            if not any(e):
                return c
        return None

    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    def _lift(self, other):
        if isinstance(other, Poly):
            if other.vars != self.vars:
                raise ValueError("polynomials over different variables")
            return other
        return Poly.const(self.vars, other)

    def __add__(self, other):
        other = self._lift(other)
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, 0) + c
        return Poly(self.vars, t)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly(self.vars, {e: c * other for e, c in self.terms.items()})
        other = self._lift(other)
        t = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = t.get(e, 0) + c1 * c2
        return Poly(self.vars, t)

    __rmul__ = __mul__

    def __pow__(self, k):
        out = Poly.const(self.vars, 1)
        for _ in range(int(k)):
            out = out * self
        return out

    def diff(self, name):
        i = self.vars.index(name)
        t = {}
        for e, c in self.terms.items():
            if e[i]:
                f = list(e)
                f[i] -= 1
                t[tuple(f)] = c * e[i]
        return Poly(self.vars, t)

    def evaluate(self, point):
        """Value at ``point`` (mapping name -> number, or a sequence in var order)."""
        x = [point[v] for v in self.vars] if isinstance(point, dict) else list(point)
        return sum(c * math.prod(xi ** k for xi, k in zip(x, e) if k)
                   for e, c in self.terms.items())

    def substitute(self, mapping, new_vars):
        """Compose with ``mapping`` (name -> Poly over ``new_vars`` or number)."""
        new_vars = tuple(new_vars)
        imgs = []
        for v in self.vars:
            m = mapping.get(v, None)
            if m is None:
                m = Poly.var(new_vars, v)
            elif not isinstance(m, Poly):
                m = Poly.const(new_vars, m)
            imgs.append(m)
        out = Poly(new_vars)
        cache = {}
        for e, c in self.terms.items():
            term = Poly.const(new_vars, c)
            for i, k in enumerate(e):
                if k:
                    if (i, k) not in cache:
                        cache[(i, k)] = imgs[i] ** k
                    term = term * cache[(i, k)]
            out = out + term
        return out

    def to_dense(self, size=None):
        """Dense coefficient array of side ``size`` (default degree + 1)."""
        size = self.degree() + 1 if size is None else size
        a = np.zeros((size,) * len(self.vars))
        for e, c in self.terms.items():
            a[e] += float(c)
        return a

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms.items(), reverse=True):
            mono = "*".join(v if k == 1 else f"{v}^{k}" for v, k in zip(self.vars, e) if k)
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


def _normal_alpha(a):
    if isinstance(a, Fraction) and a.denominator == 1:
        return int(a)
    if isinstance(a, float) and a.is_integer():
        return int(a)
    return a


def _is_posint(a):
    return isinstance(a, int) and a > 0


class MinorPowerExpr:
    """Formal sum of ``c * prod_k P_k ** alpha_k`` closed under differentiation."""

    def __init__(self, vars, parts=None):
        self.vars = tuple(vars)
        self.parts = {}
        for sig, poly in (parts or {}).items():
            self._accumulate(sig, poly)

    @classmethod
    def power(cls, base, alpha, coef=1):
        """``coef * base ** alpha``."""
        return cls.product([(base, alpha)], coef)

    @classmethod
    def product(cls, factors, coef=1, vars=None):
        if vars is None:
            vars = factors[0][0].vars if factors else ()
        poly = Poly.const(vars, coef)
        powers = {}
        for base, alpha in factors:
            alpha = _normal_alpha(alpha)
            c = base.constant_value()
            if c is not None:
                poly = poly * (c ** alpha)
            elif _is_posint(alpha):
                poly = poly * base ** alpha
            elif alpha != 0:
                powers[base] = powers.get(base, 0) + alpha
        out = cls(vars)
        out._accumulate(frozenset(powers.items()), poly)
        return out

    @classmethod
    def from_poly(cls, poly):
        return cls(poly.vars, {frozenset(): poly})

    def _accumulate(self, sig, poly):
        if poly.is_zero():
            return
        # positive integer powers move into the polynomial part
        keep = []
        for base, alpha in sig:
            alpha = _normal_alpha(alpha)
            if _is_posint(alpha):
                poly = poly * base ** alpha
            elif alpha != 0:
                keep.append((base, alpha))
        sig = frozenset(keep)
        cur = self.parts.get(sig)
        new = poly if cur is None else cur + poly
        if new.is_zero():
            self.parts.pop(sig, None)
        else:
            self.parts[sig] = new

    def __add__(self, other):
        out = MinorPowerExpr(self.vars, self.parts)
        for sig, poly in other.parts.items():
            out._accumulate(sig, poly)
        return out

    def __mul__(self, c):
        if isinstance(c, MinorPowerExpr):
            out = MinorPowerExpr(self.vars)
            for s1, p1 in self.parts.items():
                for s2, p2 in c.parts.items():
                    merged = dict(s1)
                    for b, a in s2:
                        merged[b] = merged.get(b, 0) + a
                    out._accumulate(frozenset(merged.items()), p1 * p2)
            return out
        return MinorPowerExpr(self.vars, {s: p * c for s, p in self.parts.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def n_terms(self):
        return len(self.parts)

    def diff(self, name):
        out = MinorPowerExpr(self.vars)
        for sig, poly in self.parts.items():
            dp = poly.diff(name)
            if not dp.is_zero():
                out._accumulate(sig, dp)
            for base, alpha in sig:
                db = base.diff(name)
                if db.is_zero():
                    continue
                new_sig = dict(sig)
                new_sig[base] = alpha - 1
                out._accumulate(frozenset(new_sig.items()), poly * db * alpha)
        return out

    def evaluate(self, point):
        total = 0.0
        for sig, poly in self.parts.items():
            v = float(poly.evaluate(point))
            for base, alpha in sig:
                b = float(base.evaluate(point))
                if b == 0.0 and alpha < 0:
                    raise ZeroDivisionError("negative power of a vanishing factor")
                v *= b ** float(alpha)
            total += v
        return total

    def substitute(self, mapping, new_vars):
        """Compose every polynomial with ``mapping`` (see ``Poly.substitute``)."""
        out = MinorPowerExpr(new_vars)
        for sig, poly in self.parts.items():
            new_sig = {}
            for base, alpha in sig:
                nb = base.substitute(mapping, new_vars)
                new_sig[nb] = new_sig.get(nb, 0) + alpha
            out._accumulate(frozenset(new_sig.items()), poly.substitute(mapping, new_vars))
        return out

    def taylor(self, N, at=None, backend=None):
        """Taylor coefficients around ``at`` up to total degree ``N`` (dense array)."""
        from .taylor import power_product_series
        at = at if at is not None else {v: 0.0 for v in self.vars}
        if isinstance(at, dict):
            at = [at[v] for v in self.vars]
        shift = {v: Poly.var(self.vars, v) + a for v, a in zip(self.vars, at)}
        total = np.zeros((N + 1,) * len(self.vars))
        for sig, poly in self.parts.items():
            factors = [(b.substitute(shift, self.vars), a) for b, a in sig]
            if factors:
                H, log_h0, sign = power_product_series(factors, N, backend=backend)
                H = H * (sign * math.exp(log_h0))
            else:
                H = np.zeros((N + 1,) * len(self.vars))
                H[(0,) * len(self.vars)] = 1.0
            P = poly.substitute(shift, self.vars).to_dense()
            total += _truncated_product(H, P, N)
        return total

    def __repr__(self):
        out = []
        for sig, poly in self.parts.items():
            f = " * ".join(f"({b})^{a}" for b, a in sig)
            out.append(f"[{poly}]" + (f" * {f}" if f else ""))
        return " + ".join(out) if out else "0"


def _truncated_product(H, P, N):
    from scipy.signal import convolve
    out = convolve(H, P, method="direct")[tuple(slice(0, N + 1) for _ in H.shape)]
    g = np.indices(out.shape).sum(0)
    out[g > N] = 0.0
    return out
