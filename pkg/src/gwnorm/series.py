"""General-D constants for non-chordal graphs via nested hypergeometric series.

All ratio series here have positive terms; they are summed grade by grade
with a geometric tail estimate on the grade totals.
"""

from dataclasses import dataclass, field
from itertools import combinations
import math

import numpy as np
from scipy.special import gammaln

from . import kernels
from .errors import NonConvergenceError, PreconditionError, UnsupportedStructureError
from .exact import (
    _perfect_order_for, as_spd, chordal_general_D, edge_removal_factor,
    general_removal_certified, removal_split, to_correlation,
)
from .graph import chordal_cover, common_neighbors, is_chordal, max_clique_size
from .minorpower import MinorPowerExpr, Poly
from .special import LogValue, log_multigamma
from .taylor import power_product_series


@dataclass
class Caps:
    max_q: int = 40
    max_l: int = 60
    max_terms: int = 5_000_000
    tol: float = 1e-8


@dataclass
class SeriesValue:
    """A series result; ``tail_estimate`` is absolute, ``rel_tail`` relative."""

    value: LogValue
    terms_used: int
    tail_estimate: float
    converged: bool
    rel_tail: float = 0.0
    certified: bool = True
    diagnostics: dict = field(default_factory=dict)

    @classmethod
    def from_log(cls, log_value, terms, rel_tail, tol, **kw):
        v = LogValue(1, log_value)
        mag = math.exp(log_value) if log_value < 700 else math.inf
        return cls(v, terms, rel_tail * mag, rel_tail <= tol, rel_tail, **kw)


class MultiIndex:
    """Nonnegative integer array indexed by ``keys`` (grid cells or pairs)."""

    def __init__(self, entries):
        self.entries = dict(entries)
        if any(v < 0 or int(v) != v for v in self.entries.values()):
            raise ValueError("multi-index entries must be nonnegative integers")

    @classmethod
    def grid(cls, rows):
        return cls({(i, j): int(v) for i, r in enumerate(rows) for j, v in enumerate(r)})

    @property
    def total(self):
        return sum(self.entries.values())

    def marginal(self, axis):
        """Sums of entries grouped by key component ``axis``."""
        out = {}
        for k, v in self.entries.items():
            out[k[axis]] = out.get(k[axis], 0) + v
        return out

    def incidence(self, n):
        """For pair keys: how often each of n labels occurs, weighted by entry."""
        deg = [0] * n
        for (i, j), v in self.entries.items():
            deg[i] += v
            deg[j] += v
        return deg

    def log_multinomial(self):
        return float(gammaln(self.total + 1) - sum(gammaln(v + 1) for v in self.entries.values()))

    @classmethod
    def compositions(cls, total, keys):
        """All multi-indices over ``keys`` with the given total, grevlex order."""
        keys = list(keys)

        def rec(t, k):
            if k == len(keys) - 1:
                yield (t,)
                return
            for i in range(t, -1, -1):
                for rest in rec(t - i, k + 1):
                    yield (i,) + rest

        if not keys:
            if total == 0:
                yield cls({})
            return
        for c in rec(total, 0):
            yield cls(dict(zip(keys, c)))

    def __repr__(self):
        return f"MultiIndex({self.entries})"


def _lrise(a, k):
    return float(gammaln(a + k) - gammaln(a))


def _lrise_vec(a, k):
    k = np.asarray(k, dtype=float)
    return gammaln(a + k) - gammaln(a)


def _grade_tail(g, window=3):
    """Geometric tail bound for a positive series given its last terms."""
    g = [abs(x) for x in g]
    last = g[-(window + 1):]
    if len(last) < 2:
        return math.inf
    if all(x == 0.0 for x in last[1:]):
        return 0.0
    rs = [b / a for a, b in zip(last[:-1], last[1:]) if a > 0]
    if not rs:
        return math.inf
    r = max(rs)
    if r >= 1.0:
        return math.inf
    return last[-1] * r / (1 - r)


# ---------------------------------------------------------------- H_{2,m}

def _pair_power(M, m, q, prev):
    """Monomial coefficients of (sum_{i<j} M_ij k_i k_j)^q from those of power q-1."""
    if q == 0:
        return {(0,) * m: 1.0}
    out = {}
    for s, c in prev.items():
        for (i, j), w in M.items():
            t = list(s)
            t[i] += 1
            t[j] += 1
            t = tuple(t)
            out[t] = out.get(t, 0.0) + c * w
    return out


def _linear_factor_pair(u, v):
    """Dense Q = prod_j (1 - u_j z1 - v_j z2) and R_j = y_j prod_{k!=j} (1 - y_k)."""
    m = len(u)
    size = m + 1
    lin = []
    for j in range(m):
        a = np.zeros((2, 2))
        a[0, 0] = 1.0
        a[1, 0] = -u[j]
        a[0, 1] = -v[j]
        lin.append(a)
    from .taylor import poly_mul, _pad
    Q = np.ones((1, 1))
    for a in lin:
        Q = poly_mul(Q, a)
    Q = _pad(Q, size)
    Rj = []
    for j in range(m):
        y = np.zeros((2, 2))
        y[1, 0] = u[j]
        y[0, 1] = v[j]
        t = y
        for k in range(m):
            if k != j:
                t = poly_mul(t, lin[k])
        Rj.append(_pad(t, size))
    return Q, Rj


def bipartite_series(m, C, delta, tol=1e-8, caps=None):
    """Ratio I_{H2,m}(delta, D) / I_{H2,m}(delta, I) for correlation D with D_AB = C.

    Reorganized nested sum: the determinant power is expanded over pair
    monomials k^s of (sum M_ij k_i k_j)^q, and for each s the remaining
    trace series is the bivariate Taylor expansion of
    prod_j (1 - C_1j^2 z1 - C_2j^2 z2)^-(delta+2+s_j).
    """
    caps = caps or Caps()
    C = np.asarray(C, dtype=float)
    if C.shape != (2, m) or m < 1:
        raise PreconditionError("C must be a 2 x m matrix with m >= 1")
    if not delta > -1:
        raise PreconditionError("delta must exceed -1")
    if np.any(C[0] ** 2 + 0 >= 1) or np.any(C[1] ** 2 >= 1):
        raise PreconditionError("C must come from a positive definite correlation matrix")
    u, v = C[0] ** 2, C[1] ** 2
    M = {}
    for i, j in combinations(range(m), 2):
        w = (C[0, i] * C[1, j] - C[0, j] * C[1, i]) ** 2
        if w != 0.0:
            M[(i, j)] = w
    Q, Rj = _linear_factor_pair(u, v)
    rec = kernels.get("graded_recurrence")
    b0 = delta + (m + 2) / 2
    b1 = delta + (m + 3) / 2
    r1 = np.arange(caps.max_l + 1)

    def q_block(q, Pq, N):
        aq, cq = delta + q + (m + 2) / 2, delta + 2 * q + (m + 3) / 2
        la = _lrise_vec(aq, r1[:N + 1])
        lw = la[:, None] + la[None, :] - _lrise_vec(cq, np.add.outer(r1[:N + 1], r1[:N + 1]))
        grade = np.add.outer(r1[:N + 1], r1[:N + 1])
        W = np.where(grade <= N, np.exp(lw), 0.0)
        gsum = np.zeros(N + 1)
        nterms = 0
        for s, coef in Pq.items():
            beta = [delta + 2 + sj for sj in s]
            R = sum(b * r for b, r in zip(beta, Rj))
            H = rec(Q, np.ascontiguousarray(R), 1.0, N)
            pref = coef * math.exp(sum(_lrise(delta + 2, sj) for sj in s))
            T = W * H
            nterms += int(np.count_nonzero(T))
            gsum += pref * np.bincount(grade[grade <= N], weights=T[grade <= N], minlength=N + 1)
        return gsum, nterms

    total_q = []
    terms = 0
    grade_tail_abs = 0.0
    Pq = None
    for q in range(caps.max_q + 1):
        Pq = _pair_power(M, m, q, Pq)
        if not Pq:
            break
        lA = _lrise(b0, q) - math.lgamma(q + 1) - _lrise(b1, 2 * q)
        N = min(16, caps.max_l)
        while True:
            gsum, nt = q_block(q, Pq, N)
            tail = _grade_tail(gsum)
            tot = gsum.sum()
            if tail <= 0.01 * tol * tot or N >= caps.max_l:
                break
            N = min(2 * N, caps.max_l)
        sq = math.exp(lA) * tot
        grade_tail_abs += math.exp(lA) * tail
        total_q.append(sq)
        terms += nt
        if terms > caps.max_terms:
            raise NonConvergenceError("bipartite series exceeded the term cap",
                                      partial=math.fsum(total_q))
        if q >= 1:
            qt = _grade_tail(total_q)
            if qt <= 0.1 * tol * math.fsum(total_q):
                break
    value = math.fsum(total_q)
    qtail = _grade_tail(total_q) if len(total_q) > 1 else 0.0
    if not M:
        qtail = 0.0
    abs_tail = qtail + grade_tail_abs
    rel = abs_tail / value
    out = SeriesValue(LogValue.from_float(value), terms, abs_tail, rel <= tol, rel,
                      diagnostics={"q_terms": len(total_q)})
    if not out.converged:
        raise NonConvergenceError(
            f"bipartite series not converged within caps (relative tail {rel:.3g})",
            partial=out)
    return out


def bipartite_series_literal(m, C, delta, max_q, max_l):
    """Direct nested sum over the L (2 x m grid) and Q (pair) multi-indices.

    Slow and truncated at fixed orders; used as an independent check of
    ``bipartite_series``.
    """
    C = np.asarray(C, dtype=float)
    pairs = list(combinations(range(m), 2))
    cells = [(i, j) for i in range(2) for j in range(m)]
    total = 0.0
    for q in range(max_q + 1):
        lpre = _lrise(delta + (m + 2) / 2, q) - math.lgamma(q + 1) - _lrise(delta + (m + 3) / 2, 2 * q)
        qidx = list(MultiIndex.compositions(q, pairs))
        for l in range(max_l + 1):
            lpl = -math.lgamma(l + 1) - _lrise(delta + 2 * q + (m + 3) / 2, l)
            for L in MultiIndex.compositions(l, cells):
                rows, cols = L.marginal(0), L.marginal(1)
                lt = L.log_multinomial()
                cp = math.prod(C[i, j] ** (2 * L.entries[(i, j)]) for i, j in cells)
                if cp == 0.0:
                    continue
                lt += sum(_lrise(delta + q + (m + 2) / 2, rows.get(i, 0)) for i in range(2))
                lt += sum(_lrise(delta + 2, cols.get(j, 0)) for j in range(m))
                qs = 0.0
                for Qm in qidx:
                    mp = math.prod((C[0, i] * C[1, j] - C[0, j] * C[1, i]) ** (2 * Qm.entries[(i, j)])
                                   for i, j in pairs)
                    if mp == 0.0:
                        continue
                    deg = Qm.incidence(m)
                    lq = Qm.log_multinomial() + sum(
                        _lrise(delta + 2 + cols.get(j, 0), deg[j]) for j in range(m))
                    qs += mp * math.exp(lq)
                total += math.exp(lpre + lpl + lt) * cp * qs
    return total


# ------------------------------------------------------ edge removal

def _check_removal(g, e, D, delta):
    if not delta > -1:
        raise PreconditionError("delta must exceed -1")
    e = tuple(sorted(e))
    if g.has_edge(*e):
        raise PreconditionError(f"edge {e} must not be in G (it is the edge being removed)")
    D = as_spd(D, g.p)
    if not D.is_correlation(1e-10):
        raise PreconditionError("edge-removal series needs a correlation matrix")
    ge = g.add_edge(*e)
    A, B, _ = removal_split(ge, e)
    return e, D, ge, A, B


def tw2_edge_removal(g, e, D, delta, tol=1e-8, caps=None):
    """Factor I_G / I_{G+e} for graphs whose cliques have at most 3 vertices.

    ``|D_A|^-(delta+3/2)(d-1) prod_b |D_{a1 b a2}|^(delta+2)`` times the
    H_{2,d} ratio series at C = D_{A,B}, times ``edge_removal_factor(d)``.
    """
    e, D, ge, A, B = _check_removal(g, e, D, delta)
    if max_clique_size(ge) > 3:
        raise PreconditionError("tw2_edge_removal needs maximal clique size <= 3")
    d = len(B)
    log_f = edge_removal_factor(d).evaluate(delta).log_abs
    if d == 0:
        val = log_f + (delta + 1.5) * D.logdet(A)
        return SeriesValue.from_log(val, 1, 0.0, tol, diagnostics={"d": 0, "route": "tw2"})
    C = D.a[np.ix_(A, B)]
    bar = bipartite_series(d, C, delta, tol, caps)
    val = log_f - (delta + 1.5) * (d - 1) * D.logdet(A)
    val += (delta + 2) * math.fsum(D.logdet([A[0], b, A[1]]) for b in B)
    val += bar.value.log_abs
    return SeriesValue.from_log(val, bar.terms_used, bar.rel_tail, tol,
                                diagnostics={"d": d, "route": "tw2"})


def forest_inner_expr(gb, delta1, evars):
    """I_{G_B}(delta1, E) for a forest G_B up to its constant, as a MinorPowerExpr.

    Edge minors carry exponent -(delta1+3/2); each vertex diagonal carries
    (deg - 1)(delta1 + 1). ``evars[(i, j)]`` names the entry E_ij, i <= j.
    """
    names = tuple(sorted(set(evars.values())))
    E = {k: Poly.var(names, v) for k, v in evars.items()}
    factors = []
    for u, w in sorted(gb.edges):
        factors.append((E[(u, u)] * E[(w, w)] - E[(u, w)] * E[(u, w)], -(delta1 + 1.5)))
    for v in range(gb.p):
        a = (gb.degree(v) - 1) * (delta1 + 1)
        if a != 0:
            factors.append((E[(v, v)], a))
    return MinorPowerExpr.product(factors, vars=names)


def _evars(b):
    return {(i, j): f"E{i}_{j}" for i in range(b) for j in range(i, b)}


def _forest_setup(g, e, D, delta):
    e, D, ge, A, B = _check_removal(g, e, D, delta)
    gb = g.induced(B)
    if not gb.is_forest():
        raise UnsupportedStructureError(
            f"vertices spanning triangles with edge {e} induce a graph with a cycle; "
            "only forests are supported")
    d = len(B)
    ev = _evars(d)
    F = forest_inner_expr(gb, delta + 1, ev)
    DAA = D.sub(A)
    DAB = D.a[np.ix_(A, B)]
    DBB = D.sub(B)
    schur = DBB - DAB.T @ np.linalg.solve(DAA, DAB)
    return e, D, A, B, d, ev, F, DAA, DAB, DBB, schur


def _eval_at(F, ev, E):
    return F.evaluate({name: E[i, j] for (i, j), name in ev.items()})


def general_edge_removal_forest(g, e, D, delta, tol=1e-8, caps=None, keep_terms=0):
    """Factor I_G / I_{G+e} when the triangle vertices of e induce a forest.

    With h(T) = I_{G_B}(delta+1, D_BB - D_BA T D_AB) for symmetric 2 x 2 T,
    the operators in t_1, t_2 and the minors of d/dE_BB become
    d/dT11, d/dT22 and the determinant d11 d22 - d12^2 / 4 in T. The
    derivatives at T = 0 come from Taylor coefficients of h.

    ``keep_terms > 0`` records the individual (q, l1, l2) terms with
    2q + l1 + l2 <= keep_terms in ``diagnostics["terms"]``.
    """
    caps = caps or Caps()
    e, D, A, B, d, ev, F, DAA, DAB, DBB, schur = _forest_setup(g, e, D, delta)
    log_f = edge_removal_factor(d).evaluate(delta).log_abs
    pre = log_f + (delta + (d + 3) / 2) * math.log(np.linalg.det(DAA))
    tv = ("T11", "T22", "T12")
    T11, T22, T12 = (Poly.var(tv, v) for v in tv)
    mapping = {}
    for (i, j), name in ev.items():
        mapping[name] = (DBB[i, j] - DAB[0, i] * DAB[0, j] * T11 - DAB[1, i] * DAB[1, j] * T22
                         - (DAB[0, i] * DAB[1, j] + DAB[1, i] * DAB[0, j]) * T12)
    h = F.substitute(mapping, tv)
    (sig, poly), = h.parts.items()
    c0 = float(poly.constant_value())
    log_fs = math.log(_eval_at(F, ev, schur))
    diag = {"d": d, "route": "forest"}
    if not sig:
        # no factor depends on T: only the q = l = 0 term survives
        val = pre + math.log(c0) - log_fs
        if keep_terms:
            diag["terms"] = {(0, 0, 0): math.exp(math.log(c0) - log_fs)}
        return SeriesValue.from_log(val, 1, 0.0, tol, diagnostics=diag)
    b0, b1 = delta + (d + 2) / 2, delta + (d + 3) / 2
    N = min(16, caps.max_l)
    while True:
        H, log_h0, sign = power_product_series(list(sig), N)
        gsum, nterms, kept = _forest_grades(H, N, d, delta, b0, b1, keep_terms)
        tail = _grade_tail(gsum[::2]) if not np.any(gsum[1::2]) else _grade_tail(gsum)
        tot = gsum.sum()
        if tail <= 0.01 * tol * tot or N >= caps.max_l:
            break
        N = min(2 * N, caps.max_l)
    rel = tail / tot if tot > 0 else math.inf
    scale = log_h0 + math.log(c0) - log_fs
    val = pre + scale + math.log(tot)
    diag["grades"] = N
    if keep_terms:
        diag["terms"] = {k: v * math.exp(scale) for k, v in kept.items()}
    out = SeriesValue.from_log(val, nterms, rel, tol, diagnostics=diag)
    if not out.converged:
        raise NonConvergenceError(
            f"edge-removal series for {e} not converged within caps (relative tail {rel:.3g})",
            partial=out)
    return out


def _forest_grades(H, N, d, delta, b0, b1, keep):
    n = np.arange(N + 1)
    lf = gammaln(n + 1.0)
    # derivative values i! j! k! h_ijk
    Dv = H * np.exp(lf[:, None, None] + lf[None, :, None] + lf[None, None, :])
    gsum = np.zeros(N + 1)
    nterms = 0
    kept = {}
    for q in range(N // 2 + 1):
        L = N - 2 * q
        aq, cq = delta + q + (d + 2) / 2, delta + 2 * q + (d + 3) / 2
        l = np.arange(L + 1)
        la = _lrise_vec(aq, l) - lf[:L + 1]
        lw = (_lrise(b0, q) - math.lgamma(q + 1) - _lrise(b1, 2 * q)
              + la[:, None] + la[None, :] - _lrise_vec(cq, np.add.outer(l, l)))
        term = np.zeros((L + 1, L + 1))
        for r in range(q + 1):
            c = math.comb(q, r) * (-0.25) ** r
            term += c * Dv[q - r:q - r + L + 1, q - r:q - r + L + 1, 2 * r]
        grade = 2 * q + np.add.outer(l, l)
        ok = grade <= N
        T = np.where(ok, np.exp(lw) * term, 0.0)
        nterms += int(np.count_nonzero(T))
        gsum += np.bincount(grade[ok], weights=T[ok], minlength=N + 1)
        if keep:
            for l1 in range(L + 1):
                for l2 in range(L + 1):
                    if 2 * q + l1 + l2 <= keep:
                        kept[(q, l1, l2)] = float(T[l1, l2])
    return gsum, nterms, kept


def general_edge_removal_terms_symbolic(g, e, D, delta, max_grade):
    """Terms (q, l1, l2) of the edge-removal series by literal differentiation.

    Applies |D_AB (d/dE) D_AB^T|^q with the (1 + [i = j]) / 2 symmetric
    weights and (d/dt1)^l1 (d/dt2)^l2 to the forest expression, then sets
    t = 0. Intended for small orders only.
    """
    e, D, A, B, d, ev, F, DAA, DAB, DBB, schur = _forest_setup(g, e, D, delta)
    fs = _eval_at(F, ev, schur)
    names = tuple(sorted(ev.values())) + ("t1", "t2")
    F = F.substitute({}, names)
    t1, t2 = Poly.var(names, "t1"), Poly.var(names, "t2")

    def O(a, b, x):
        out = MinorPowerExpr(names)
        for (i, j), nm in ev.items():
            w = DAB[a, i] * DAB[b, i] if i == j else 0.5 * (DAB[a, i] * DAB[b, j] + DAB[a, j] * DAB[b, i])
            if w != 0.0:
                out = out + x.diff(nm) * w
        return out

    sub = {nm: DBB[i, j] - DAB[0, i] * DAB[0, j] * t1 - DAB[1, i] * DAB[1, j] * t2
           for (i, j), nm in ev.items()}
    zero = {nm: 0.0 for nm in names}
    b0, b1 = delta + (d + 2) / 2, delta + (d + 3) / 2
    terms = {}
    Gq = F
    for q in range(max_grade // 2 + 1):
        if q > 0:
            Gq = O(0, 0, O(1, 1, Gq)) - O(0, 1, O(0, 1, Gq))
        Ht = Gq.substitute(sub, names)
        aq, cq = delta + q + (d + 2) / 2, delta + 2 * q + (d + 3) / 2
        lpre = _lrise(b0, q) - math.lgamma(q + 1) - _lrise(b1, 2 * q)
        for l1 in range(max_grade - 2 * q + 1):
            X = Ht
            for _ in range(l1):
                X = X.diff("t1")
            for l2 in range(max_grade - 2 * q - l1 + 1):
                lw = (lpre - math.lgamma(l1 + 1) - math.lgamma(l2 + 1)
                      + _lrise(aq, l1) + _lrise(aq, l2) - _lrise(cq, l1 + l2))
                terms[(q, l1, l2)] = math.exp(lw) * X.evaluate(zero) / fs
                X = X.diff("t2")
    return terms


def complete_pair_reduction(D, delta, inner, g=None, pair=(0, 1)):
    """I_G when two vertices are adjacent to each other and to everything else.

    ``inner(delta', E) -> LogValue`` evaluates I_{G_B}(delta', E) on the
    remaining vertices; it receives delta + 1 and the Schur complement.
    """
    D = as_spd(D)
    A = list(pair)
    B = [v for v in range(D.p) if v not in A]
    if not delta > -1:
        raise PreconditionError("delta must exceed -1")
    if g is not None:
        if g.p != D.p:
            raise PreconditionError("graph and matrix sizes differ")
        if not g.has_edge(*A) or any(not (g.has_edge(A[0], b) and g.has_edge(A[1], b)) for b in B):
            raise PreconditionError(
                f"vertices {tuple(A)} are not adjacent to each other and to all others")
    m = len(B)
    DAA = D.sub(A)
    if abs(np.linalg.det(DAA)) < 1e-300:
        raise PreconditionError("singular 2 x 2 block")
    val = m * math.log(math.pi) + log_multigamma(2, delta + 1.5)
    val -= (delta + (m + 3) / 2) * D.logdet(A)
    if m:
        iv = inner(delta + 1, D.schur(A, B))
        if iv.sign <= 0:
            raise PreconditionError("inner constant must be positive")
        val += iv.log_abs
    return LogValue(1, val)


def det_derivative_identity(q, a):
    """Gamma_2(a+q) / Gamma_2(a): |d/dE|^q |E|^-a = ratio * |E|^-(a+q), 2 x 2 E."""
    if q < 0 or int(q) != q:
        raise PreconditionError("q must be a nonnegative integer")
    if not a > 0.5:
        raise PreconditionError("det_derivative_identity needs a > 1/2")
    return LogValue(1, log_multigamma(2, a + q) - log_multigamma(2, a))


# ---------------------------------------------------------------- driver

def general_D_driver(g, D, delta, tol=1e-8, caps=None, removal_order=None, route="auto"):
    """I_G(delta, D) for any SPD D: correlation scaling, chordal cover, fill removal.

    ``route`` is "auto" (tw2 when the cover's cliques allow, else the
    forest form), "tw2" or "forest".
    """
    caps = caps or Caps()
    if not delta > -1:
        raise PreconditionError("delta must exceed -1")
    D = as_spd(D, g.p)
    R, scaling = to_correlation(D)
    shift = scaling(delta, g)
    ok, ord = is_chordal(g)
    if ok:
        v = chordal_general_D(g, ord, R, delta)
        return SeriesValue.from_log(v.log_abs + shift, 0, 0.0, tol, diagnostics={
            "route": "chordal", "ordering": list(ord.perm), "fills": [], "steps": []})
    cover, order, fills = chordal_cover(g)
    perfect = _perfect_order_for(cover, order)
    val = chordal_general_D(cover, perfect, R, delta).log_abs
    if removal_order is None:
        removal_order = list(reversed(fills))
    cur = cover
    steps, rel, terms, certified = [], 0.0, 0, True
    for e in removal_order:
        e = tuple(sorted(e))
        nxt = cur.remove_edge(*e)
        cert = general_removal_certified(cur, e)
        use = route
        if use == "auto":
            use = "tw2" if max_clique_size(cur) <= 3 else "forest"
        try:
            if use == "tw2":
                sv = tw2_edge_removal(nxt, e, R, delta, tol, caps)
            else:
                sv = general_edge_removal_forest(nxt, e, R, delta, tol, caps)
        except UnsupportedStructureError as exc:
            raise UnsupportedStructureError(
                f"fill edge ({e[0] + 1}, {e[1] + 1}): {exc}") from None
        val += sv.value.log_abs
        rel += sv.rel_tail
        terms += sv.terms_used
        certified &= cert
        steps.append({"edge": e, "d": len(common_neighbors(cur, e)), "route": use,
                      "certified": cert, "terms": sv.terms_used, "rel_tail": sv.rel_tail})
        cur = nxt
    return SeriesValue.from_log(val + shift, terms, rel, tol, certified=certified, diagnostics={
        "route": "series", "ordering": list(perfect.perm), "fills": [tuple(f) for f in fills],
        "steps": steps})
