"""Exact normalizing constants.

Identity-D results are kept symbolic in delta as ``pi^(e/2) prod Gamma(delta + c)^m``;
general-D chordal results are evaluated numerically in the log domain.
"""

from dataclasses import dataclass, field
import json
import math

import numpy as np

from .errors import PreconditionError, UnsupportedStructureError
from .graph import (Graph, Ordering, chordal_cover, clique_decomposition, common_neighbors,
                    is_chordal, is_perfect, orient)
from .special import HalfInt, LogValue, log_gamma, log_multigamma


@dataclass(frozen=True)
class ExactConstant:
    pi_half_exp: int = 0
    gamma: tuple = ()  # sorted ((HalfInt, mult), ...) with mult != 0

    def __post_init__(self):
        acc = {}
        for c, m in self.gamma:
            c = c if isinstance(c, HalfInt) else HalfInt.of(c)
            acc[c] = acc.get(c, 0) + int(m)
        object.__setattr__(self, "gamma", tuple(sorted((c, m) for c, m in acc.items() if m)))
        object.__setattr__(self, "pi_half_exp", int(self.pi_half_exp))

    @classmethod
    def one(cls):
        return cls()

    @classmethod
    def gamma_of(cls, offset, mult=1):
        return cls(0, ((HalfInt.of(offset), mult),))

    @classmethod
    def multigamma(cls, p, offset):
        """Gamma_p(delta + offset) expanded into scalar factors."""
        off = HalfInt.of(offset)
        return cls(p * (p - 1) // 2, tuple((off - HalfInt(i), 1) for i in range(p)))

    @property
    def gamma_map(self):
        return dict(self.gamma)

    def __mul__(self, other):
        return ExactConstant(self.pi_half_exp + other.pi_half_exp, self.gamma + other.gamma)

    def __truediv__(self, other):
        return self * other ** -1

    def __pow__(self, k):
        k = int(k)
        return ExactConstant(self.pi_half_exp * k, tuple((c, m * k) for c, m in self.gamma))

    def min_offset(self):
        return min((c for c, _ in self.gamma), default=None)

    def evaluate(self, delta):
        lo = self.min_offset()
        if lo is not None and not delta + float(lo) > 0:
            raise PreconditionError(
                f"Gamma(delta + {float(lo)}) is undefined at delta={delta}")
        acc = self.pi_half_exp / 2 * math.log(math.pi)
        acc += math.fsum(m * log_gamma(delta + float(c)) for c, m in self.gamma)
        return LogValue(1, acc)

    def to_json(self):
        return {"pi_half_exp": self.pi_half_exp,
                "gamma": [{"offset_x2": c.twice_value, "mult": m} for c, m in self.gamma]}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(obj["pi_half_exp"],
                   tuple((HalfInt(g["offset_x2"]), g["mult"]) for g in obj["gamma"]))

    def __str__(self):
        parts = []
        if self.pi_half_exp:
            e = self.pi_half_exp
            parts.append(f"pi^{e // 2}" if e % 2 == 0 else f"pi^({e}/2)")
        for c, m in self.gamma:
            t = c.twice_value
            off = f"{t // 2}" if t % 2 == 0 else f"{t}/2"
            g = f"Gamma(delta+{off})" if t >= 0 else f"Gamma(delta-{off.lstrip('-')})"
            parts.append(g if m == 1 else f"{g}^{m}")
        return " * ".join(parts) if parts else "1"


class SPDMatrix:
    """Symmetric positive definite matrix, checked by Cholesky at construction."""

    def __init__(self, a, sym_tol=1e-12):
        a = np.array(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise PreconditionError("matrix must be square")
        scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
        if a.size and np.max(np.abs(a - a.T)) > sym_tol * scale:
            raise PreconditionError("matrix is not symmetric")
        a = (a + a.T) / 2
        try:
            self.chol = np.linalg.cholesky(a) if a.size else a
        except np.linalg.LinAlgError:
            raise PreconditionError("matrix is not positive definite") from None
        a.setflags(write=False)
        self.a = a

    @classmethod
    def identity(cls, p):
        return cls(np.eye(p))

    @property
    def p(self):
        return self.a.shape[0]

    def sub(self, idx):
        idx = list(idx)
        return self.a[np.ix_(idx, idx)]

    def logdet(self, idx=None):
        m = self.a if idx is None else self.sub(idx)
        if m.size == 0:
            return 0.0
        s, ld = np.linalg.slogdet(m)
        if s <= 0:
            raise PreconditionError("singular principal minor")
        return float(ld)

    def schur(self, A, B):
        A, B = list(A), list(B)
        DAB = self.a[np.ix_(A, B)]
        return self.sub(B) - DAB.T @ np.linalg.solve(self.sub(A), DAB)

    def is_identity(self, tol=0.0):
        return bool(np.all(np.abs(self.a - np.eye(self.p)) <= tol))

    def is_correlation(self, tol=1e-12):
        return bool(np.all(np.abs(np.diag(self.a) - 1.0) <= tol))

    def permuted(self, perm):
        return SPDMatrix(self.a[np.ix_(perm, perm)])


def as_spd(D, p=None):
    if D is None:
        if p is None:
            raise PreconditionError("dimension needed for the identity matrix")
        return SPDMatrix.identity(p)
    S = D if isinstance(D, SPDMatrix) else SPDMatrix(D)
    if p is not None and S.p != p:
        raise PreconditionError(f"matrix is {S.p}x{S.p}, graph has {p} vertices")
    return S


def chordal_identity(g, ord):
    """pi^(|E|/2) prod_i Gamma(delta + indeg(i)/2 + 1) for a perfect ordering."""
    if not is_perfect(g, ord):
        raise PreconditionError("ordering is not perfect (fill detected)")
    dag = orient(g, ord)
    indeg = [0] * g.p
    for _, j in dag.arcs:
        indeg[j] += 1
    return ExactConstant(g.num_edges, tuple((HalfInt(k + 2), 1) for k in indeg))


def edge_removal_factor(d):
    """pi^(-1/2) Gamma(delta + (d+2)/2) / Gamma(delta + (d+3)/2)."""
    return ExactConstant(-1, ((HalfInt(d + 2), 1), (HalfInt(d + 3), -1)))


@dataclass(frozen=True)
class RemovalStep:
    edge: tuple
    d: int
    certified: bool


@dataclass(frozen=True)
class IdentityPipeline:
    constant: ExactConstant
    cover: Graph
    ordering: Ordering
    fills: tuple
    steps: tuple = field(default=())

    @property
    def certified(self):
        return all(s.certified for s in self.steps)


def removal_split(ge, e):
    """(A, B, C) for removing e from ge: endpoints, common neighbours, the rest."""
    a1, a2 = e
    B = sorted(common_neighbors(ge, e))
    C = [v for v in range(ge.p) if v not in (a1, a2) and v not in B]
    return [a1, a2], B, C


def identity_removal_certified(ge, e):
    """Whether the edge-removal factor is proven for this step at D = I.

    The proof orders the endpoints around B and needs e to stay out of the
    moral closure of G = ge - e. That holds exactly when no path joins the
    endpoints through vertices outside A and B.
    """
    g = ge.remove_edge(*e)
    (a1, a2), B, C = removal_split(ge, e)
    allowed = set(C) | {a2}
    adj = g.adjacency()
    stack, seen = [a1], {a1}
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w in allowed and w not in seen:
                if w == a2:
                    return False
                seen.add(w)
                stack.append(w)
    return True


def general_removal_certified(ge, e):
    """Whether I_G / I_{G^e} reduces exactly to the subgraph on A and B for any D.

    True when each component of the remaining vertices attaches through a
    set that is a clique in G, so it splits off by a clique separator.
    """
    g = ge.remove_edge(*e)
    A, B, C = removal_split(ge, e)
    if not C:
        return True
    sub = g.induced(C)
    adj = g.adjacency()
    for comp in sub.components():
        verts = {C[k] for k in comp}
        attach = set()
        for v in verts:
            attach |= adj[v] - verts
        if not g.is_clique(attach):
            return False
    return True


def identity_pipeline(g, removal_order=None, ord=None):
    """Cover by min-fill, chordal product on the cover, then remove fills one by one.

    Fills are removed in reverse insertion order unless ``removal_order`` is
    given. d is counted in the graph that still holds the edge.
    """
    cover, order, fills = chordal_cover(g, ord)
    perfect = _perfect_order_for(cover, order)
    const = chordal_identity(cover, perfect)
    if removal_order is None:
        removal_order = list(reversed(fills))
    removal_order = [tuple(sorted(e)) for e in removal_order]
    if sorted(removal_order) != sorted(tuple(sorted(e)) for e in fills):
        raise PreconditionError("removal order must be a permutation of the fill edges")
    cur = cover
    steps = []
    for e in removal_order:
        d = len(common_neighbors(cur, e))
        cert = identity_removal_certified(cur, e)
        const = const * edge_removal_factor(d)
        steps.append(RemovalStep(e, d, cert))
        cur = cur.remove_edge(*e)
    return IdentityPipeline(const, cover, perfect, tuple(fills), tuple(steps))


def _perfect_order_for(cover, order):
    if is_perfect(cover, order):
        return order
    ok, perf = is_chordal(cover)
    assert ok
    return perf


def identity_constant(g, removal_order=None):
    return identity_pipeline(g, removal_order).constant


def bipartite_identity(m, n):
    """Closed form for the complete bipartite graph H_{m,n} at D = I."""
    off = HalfInt(m + n + 1)
    c = ExactConstant.gamma_of(HalfInt(n + 2), m) * ExactConstant.gamma_of(HalfInt(m + 2), n)
    c = c * ExactConstant.multigamma(m + n, off)
    return c / (ExactConstant.multigamma(m, off) * ExactConstant.multigamma(n, off))


def _clique_term(D, T, delta):
    t = len(T)
    if t == 0:
        return 0.0
    a = delta + (t + 1) / 2
    return -a * D.logdet(sorted(T)) + log_multigamma(t, a)


def chordal_general_D(g, ord, D, delta):
    """Clique/separator product for a chordal graph and any SPD D."""
    if not delta > -1:
        raise PreconditionError("delta must exceed -1")
    D = as_spd(D, g.p)
    cd = clique_decomposition(g, ord)
    acc = math.fsum(_clique_term(D, T, delta) for T in cd.cliques)
    acc -= math.fsum(_clique_term(D, S, delta) for S in cd.separators)
    return LogValue(1, acc)


def complete_constant(D, delta):
    """|D|^-(delta+(p+1)/2) Gamma_p(delta+(p+1)/2)."""
    D = as_spd(D)
    return LogValue(1, _clique_term(D, range(D.p), delta))


class CorrelationScaling:
    """``ln I_G(delta, D) = log_scale(delta, g) + ln I_G(delta, R)``."""

    def __init__(self, diag):
        self.log_diag = np.log(np.asarray(diag, dtype=float))

    def __call__(self, delta, g):
        s = -(delta + 1) * float(np.sum(self.log_diag))
        s -= 0.5 * math.fsum(self.log_diag[i] + self.log_diag[j] for i, j in g.edges)
        return s


def to_correlation(D):
    D = as_spd(D)
    diag = np.diag(D.a)
    if np.any(diag <= 0):
        raise PreconditionError("nonpositive diagonal")
    s = 1 / np.sqrt(diag)
    R = D.a * np.outer(s, s)
    np.fill_diagonal(R, 1.0)
    return SPDMatrix(R), CorrelationScaling(diag)


def log_i_exact(g, D, delta):
    """ln I_G(delta, D) wherever an exact path applies.

    Chordal graphs use the clique formula; other graphs need D = I.
    """
    D = as_spd(D, g.p)
    ok, ord = is_chordal(g)
    if ok:
        return chordal_general_D(g, ord, D, delta)
    if D.is_identity():
        return identity_constant(g).evaluate(delta)
    raise UnsupportedStructureError("no exact path for a non-chordal graph with D != I")


def c_from_i(g, delta_c, D, log_i=None):
    """C_G(delta_c, D) = 2^(p delta_c/2 + |E|) I_G((delta_c - 2)/2, D).

    ``log_i(g, D, delta) -> LogValue`` supplies I_G; defaults to the exact paths.
    """
    if not delta_c > 1:
        raise PreconditionError(f"C_G needs delta_c > 1 (got {delta_c}); the integral may diverge")
    D = as_spd(D, g.p)
    log_i = log_i or log_i_exact
    iv = log_i(g, D, (delta_c - 2) / 2)
    return LogValue(iv.sign, iv.log_abs + (g.p * delta_c / 2 + g.num_edges) * math.log(2))
