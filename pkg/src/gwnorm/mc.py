"""Importance-sampled estimates of I_G(delta, D) and a small quadrature oracle.

Coordinates are rank-ordered: the vertex at rank k becomes index k. K is
written as M M^T with M upper triangular. Diagonal and edge entries are
drawn from the Gamma / Gaussian part of the integrand. Entries off the
graph are then forced by K_ij = 0, and the weight carries the rest of the
exponent.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import permutations
import logging
import math

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from . import kernels
from .errors import PreconditionError
from .exact import as_spd
from .special import LogValue
from .graph import Ordering, is_chordal, min_fill_ordering, moral_closure, orient

log = logging.getLogger(__name__)

CHUNK = 4096


@dataclass(frozen=True)
class CholeskyFactor:
    """Upper-triangular factor in the ``a`` parametrization.

    ``a_diag[v]`` are the Gamma-scale diagonal values and ``a_off[(u, v)]``
    the arc entries (u before v). Fill entries follow
    a_uv = sum_k a_uk a_vk / sqrt(a_vv). K = Phi Phi^T with Phi_vv = sqrt(a_vv)
    and Phi_uv = -a_uv.
    """

    ord: Ordering
    a_diag: tuple
    a_off: dict
    fill: frozenset

    def phi(self):
        """Phi in vertex labels (rows and columns indexed by vertex)."""
        p = len(self.a_diag)
        F = np.zeros((p, p))
        for v in range(p):
            F[v, v] = math.sqrt(self.a_diag[v])
        for (u, v), x in self.a_off.items():
            F[u, v] = -x
        return F

    def K(self):
        r = self.ord.rank
        perm = list(self.ord.perm)
        F = self.phi()[np.ix_(perm, perm)]
        Kr = F @ F.T
        inv = [r[v] for v in range(len(perm))]
        return Kr[np.ix_(inv, inv)]


def _setup(g, ord):
    if ord is None:
        ok, ord = is_chordal(g)
        if not ok:
            ord = min_fill_ordering(g)
    if len(ord) != g.p:
        raise PreconditionError("ordering length differs from the vertex count")
    perm = list(ord.perm)
    r = ord.rank
    p = g.p
    eidx = -np.ones((p, p), dtype=np.int64)
    edges = []
    for (u, v) in sorted(g.edges, key=lambda e: tuple(sorted((r[e[0]], r[e[1]])))):
        i, j = sorted((r[u], r[v]))
        eidx[i, j] = len(edges)
        edges.append((i, j))
    indeg = np.zeros(p, dtype=int)
    deg = np.zeros(p, dtype=int)
    for i, j in edges:
        indeg[j] += 1
        deg[i] += 1
        deg[j] += 1
    return ord, perm, eidx, edges, indeg, deg


def _draw(rng, shapes, n_edges, n):
    phid = np.empty((n, len(shapes)))
    for k, a in enumerate(shapes):
        phid[:, k] = np.sqrt(rng.gamma(a, 1.0, n))
    phio = rng.normal(0.0, math.sqrt(0.5), (n, n_edges))
    return phid, phio


def draw_factor(g, ord, delta, rng):
    """One CholeskyFactor from the natural proposal at D = I."""
    ord, perm, eidx, edges, indeg, _ = _setup(g, ord)
    p = g.p
    phid, phio = _draw(rng, delta + 1 + indeg / 2, len(edges), 1)
    M = np.zeros((p, p))
    for j in range(p - 1, -1, -1):
        M[j, j] = phid[0, j]
        for i in range(j - 1, -1, -1):
            if eidx[i, j] >= 0:
                M[i, j] = phio[0, eidx[i, j]]
            else:
                M[i, j] = -M[i, j + 1:] @ M[j, j + 1:] / M[j, j]
    mc = moral_closure(orient(g, ord))
    a_diag = [0.0] * p
    a_off = {}
    for k, v in enumerate(perm):
        a_diag[v] = M[k, k] ** 2
    for i in range(p):
        for j in range(i + 1, p):
            if M[i, j] != 0.0 or eidx[i, j] >= 0:
                a_off[(perm[i], perm[j])] = -M[i, j]
    return CholeskyFactor(ord, tuple(a_diag), a_off, frozenset(mc.fill_arcs))


def _log_weights(phid, phio, eidx, L, coup, use_coup, backend=None):
    f = kernels.get("mc_logweights", backend)
    return f(np.ascontiguousarray(phid), np.ascontiguousarray(phio), eidx,
             np.ascontiguousarray(L), np.ascontiguousarray(coup), bool(use_coup))


def sample_weight_identity(g, ord, delta, rng):
    """exp(-sum of squared forced entries) for one draw; lies in (0, 1]."""
    ord, perm, eidx, edges, indeg, _ = _setup(g, ord)
    phid, phio = _draw(rng, delta + 1 + indeg / 2, len(edges), 1)
    p = g.p
    lw = _log_weights(phid, phio, eidx, np.eye(p), np.zeros((p, p)), False)
    return float(np.exp(lw[0]))


def sample_weight_general(g, ord, delta, D, rng):
    """Identity-proposal weight times exp(-2 sum_edges d_ij K_ij) for correlation D."""
    ord, perm, eidx, edges, indeg, _ = _setup(g, ord)
    D = as_spd(D, g.p)
    if not D.is_correlation(1e-10):
        raise PreconditionError("sample_weight_general needs a correlation matrix")
    phid, phio = _draw(rng, delta + 1 + indeg / 2, len(edges), 1)
    p = g.p
    Dr = D.a[np.ix_(perm, perm)]
    lw = _log_weights(phid, phio, eidx, np.eye(p), Dr, True)
    return float(np.exp(lw[0]))


@dataclass(frozen=True)
class McEstimate:
    """``mean`` is I_G (may overflow to inf; ``log_mean`` is always finite)."""

    mean: float
    std_error: float
    n: int
    ess: float
    log_mean: float
    rel_se: float
    seed: int
    proposal: str
    ordering: tuple

    @property
    def log_se(self):
        return self.rel_se


def estimate(g, ord=None, delta=0.0, D=None, n=100_000, seed=0, proposal="auto",
             workers=1, chunk=CHUNK, backend=None):
    """Importance-sampling estimate of I_G(delta, D).

    ``proposal``: "identity" draws from the D = I law, which needs a correlation D
    and reweights by the D coupling. "whitened" draws in coordinates where
    D = L L^T becomes the identity, so only the forced entries carry weight.
    "auto" uses identity for D = I and whitened otherwise. Chunks of
    ``chunk`` draws use streams spawned from (seed, chunk index) and are
    reduced in chunk order, so results do not depend on ``workers``.
    """
    if n < 1:
        raise PreconditionError("n must be at least 1")
    if not delta > -1:
        raise PreconditionError("delta must exceed -1")
    ord, perm, eidx, edges, indeg, deg = _setup(g, ord)
    p = g.p
    D = as_spd(D, p)
    Dr = D.a[np.ix_(perm, perm)]
    if proposal == "auto":
        proposal = "identity" if D.is_identity() else "whitened"
    if proposal == "identity":
        if not D.is_correlation(1e-10):
            raise PreconditionError("identity proposal needs a correlation matrix")
        L = np.eye(p)
        coup, use_coup = Dr, not D.is_identity()
        logZ = 0.0
    elif proposal == "whitened":
        L = np.linalg.cholesky(Dr)
        coup, use_coup = np.zeros((p, p)), False
        logZ = -float(np.sum((2 * delta + 2 + deg) * np.log(np.diag(L))))
    else:
        raise PreconditionError(f"unknown proposal {proposal!r}")
    shapes = delta + 1 + indeg / 2
    logZ += len(edges) / 2 * math.log(math.pi) + float(np.sum(gammaln(shapes)))
    sizes = [min(chunk, n - s) for s in range(0, n, chunk)]

    def run(c):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(c,))))
        phid, phio = _draw(rng, shapes, len(edges), sizes[c])
        return _log_weights(phid, phio, eidx, L, coup, use_coup, backend)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(run, range(len(sizes))))
    else:
        parts = [run(c) for c in range(len(sizes))]
    lw = np.concatenate(parts)
    top = float(lw.max())
    w = np.exp(lw - top)
    mw = float(w.mean())
    sd = float(w.std(ddof=1)) if n > 1 else 0.0
    ess = float(w.sum() ** 2 / np.sum(w * w))
    if ess / n < 0.01:
        log.warning("effective sample size %.1f is below 1%% of n=%d; estimate unreliable", ess, n)
    rel = sd / mw / math.sqrt(n)
    log_mean = logZ + top + math.log(mw)
    mean = math.exp(log_mean) if log_mean < 700 else math.inf
    return McEstimate(mean, rel * mean, n, ess, log_mean, rel, seed, proposal, tuple(ord.perm))


def _zero_fill_order(g):
    for perm in permutations(range(g.p)):
        r = {v: k for k, v in enumerate(perm)}
        ok = all(g.is_clique([w for w in g.neighbors(v) if r[w] > r[v]]) for v in range(g.p))
        if ok:
            return perm
    raise PreconditionError("no zero-fill ordering")


def quadrature_small(g, delta, D=None, trace_scale=1.0, epsrel=1e-10):
    """I_G (as a LogValue) by numerical integration for p <= 3, with exp(-s tr(KD)).

    Writes K = U^T diag(lam) U with U unit upper triangular in an order
    where each vertex's later neighbours form a clique. The lam integrals
    are Gamma functions and the U entries (at most two per row) are
    integrated numerically.
    """
    if g.p > 3:
        raise PreconditionError("quadrature_small supports at most 3 vertices")
    if not delta > -1:
        raise PreconditionError("delta must exceed -1")
    D = as_spd(D, g.p).a * trace_scale
    perm = _zero_fill_order(g)
    r = {v: k for k, v in enumerate(perm)}
    total = 0.0
    for v in range(g.p):
        nb = sorted((w for w in g.neighbors(v) if r[w] > r[v]), key=lambda w: r[w])
        n = len(nb)
        a = delta + n + 1
        total += float(gammaln(a))
        dvv = D[v, v]
        if n == 0:
            total -= a * math.log(dvv)
            continue
        Dn = D[np.ix_(nb, nb)]
        b = D[nb, v]
        xs = -np.linalg.solve(Dn, b)

        def form(*x):
            y = xs + np.array(x)
            return dvv + 2 * y @ b + y @ Dn @ y

        m = form(*([0.0] * n))
        # integrate the ratio to the minimum for conditioning
        f = lambda *x: (form(*x) / m) ** (-a)
        if n == 1:
            val, _ = integrate.quad(lambda x: f(x), -np.inf, np.inf, epsabs=0, epsrel=epsrel, limit=200)
        else:
            val, _ = integrate.dblquad(lambda y, x: f(x, y), -np.inf, np.inf, -np.inf, np.inf,
                                       epsabs=0, epsrel=epsrel)
        total += math.log(val) - a * math.log(m)
    return LogValue(1, total)
