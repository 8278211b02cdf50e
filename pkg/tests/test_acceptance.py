"""Acceptance criteria 1-11, one PASS/FAIL line each in the terminal summary.

Cases known to miss their criterion are marked xfail(strict=True) with the
reason next to them, so they still run at full tolerance.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate

from gwnorm import graphs
from gwnorm.exact import (
    bipartite_identity, c_from_i, chordal_general_D, chordal_identity,
    edge_removal_factor, identity_constant, identity_pipeline, to_correlation,
)
from gwnorm.graph import Graph, chordal_cover, common_neighbors, is_chordal, max_clique_size
from gwnorm.mc import estimate, quadrature_small
from gwnorm.series import (
    bipartite_series, general_D_driver, general_edge_removal_forest, tw2_edge_removal,
)
from gwnorm.special import hyp0f1_2x2, hyp0f1_scalar

from conftest import g5_reference_D

# the exact pipeline removes fills whose removal is not covered by the
# underlying reduction (a second path joins the endpoints); these values are
# off and the MC oracle detects it
NONCERT = "fill removal outside the proven reduction gives an inexact value"


def g5_direct(d):
    lg = math.lgamma
    return (3.5 * math.log(math.pi) + lg(d + 1) + lg(d + 1.5) + 2 * lg(d + 2)
            + 2 * lg(d + 2.5) - lg(d + 3))


# ---------------------------------------------------------------- 1

def test_criterion_1_g5_identity(criterion):
    g = graphs.g5()
    deltas = (0.0, 0.5, 1.0, 2.0)
    worst = 0.0
    for d in deltas:
        got = identity_constant(g).evaluate(d).log_abs
        worst = max(worst, abs(got - g5_direct(d)) / abs(g5_direct(d)))
    best = math.inf
    for _ in range(20):
        t = time.perf_counter()
        c = identity_constant(g)
        for d in deltas:
            c.evaluate(d)
        best = min(best, time.perf_counter() - t)
    ok = criterion(1, worst <= 1e-12 and best < 1e-3,
                   f"G5 max rel err {worst:.2e}, runtime {best * 1e3:.3f} ms")
    assert ok


# ---------------------------------------------------------------- 2

C2_GRAPHS = {
    "G5": graphs.g5(), "C4": graphs.cycle(4), "H23": graphs.bipartite(2, 3),
    "C5": pytest.param(graphs.cycle(5), marks=pytest.mark.xfail(strict=True, reason=NONCERT)),
    "P6": pytest.param(graphs.petersen_subgraph(), marks=pytest.mark.xfail(strict=True, reason=NONCERT)),
}


@pytest.mark.parametrize("g", list(C2_GRAPHS.values()), ids=list(C2_GRAPHS))
def test_criterion_2_mc_vs_exact_identity(g, criterion, request):
    name = request.node.callspec.id
    exact = identity_constant(g).evaluate(0.5).log_abs
    t = time.perf_counter()
    est = estimate(g, delta=0.5, n=1_000_000, seed=2024)
    dt = time.perf_counter() - t
    z = (math.exp(exact) - est.mean) / est.std_error
    ok = criterion(2, abs(z) <= 3 and dt < 30, f"{name}: z = {z:+.2f}, {dt:.1f} s")
    assert ok


# ---------------------------------------------------------------- 3

def test_criterion_3_chordal_equivalences(criterion):
    rng = np.random.default_rng(300)
    worst = 0.0
    for _ in range(50):
        g = graphs.random_chordal(rng, int(rng.integers(1, 9)))
        ok, ord = is_chordal(g)
        for d in (0.0, 0.5, 1.3):
            a = chordal_identity(g, ord).evaluate(d).log_abs
            b = chordal_general_D(g, ord, np.eye(g.p), d).log_abs
            worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    small = [graphs.empty(1), graphs.complete(2), graphs.empty(2), graphs.path(3),
             graphs.complete(3), Graph.from_edges(3, [(0, 2)]), graphs.empty(3)]
    worst_q = 0.0
    for g in small:
        ok, ord = is_chordal(g)
        for _ in range(3):
            D = graphs.random_spd(rng, g.p)
            d = float(rng.uniform(-0.5, 2))
            a = chordal_general_D(g, ord, D, d).log_abs
            b = quadrature_small(g, d, D).log_abs
            worst_q = max(worst_q, abs(a - b) / abs(b))
    assert criterion(3, worst <= 1e-10 and worst_q <= 1e-5,
                     f"product vs clique formula {worst:.1e}, vs quadrature {worst_q:.1e}")


# ---------------------------------------------------------------- 4

def test_criterion_4_bipartite_closed_form(criterion):
    bad = [(m, n) for m in range(1, 5) for n in range(1, 5)
           if bipartite_identity(m, n) != identity_constant(graphs.bipartite(m, n))]
    assert criterion(4, not bad, f"16 (m, n) pairs, mismatches {bad}")


# ---------------------------------------------------------------- 5

def test_criterion_5_identity_collapse(criterion):
    sv = bipartite_series(3, np.zeros((2, 3)), 0.7)
    exact_one = sv.value.log_abs == 0.0 and sv.terms_used == 1
    cases = [(graphs.cycle(4), (0, 2)), (graphs.bipartite(2, 3), (0, 1)),
             (graphs.bipartite(2, 1), (0, 1)), (Graph.from_edges(4, [(0, 1), (2, 3)]), (1, 2)),
             (graphs.g5(), (0, 2)), (Graph.from_edges(4, [(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]), (0, 1))]
    worst = 0.0
    for g, e in cases:
        d = len(common_neighbors(g.add_edge(*e), e))
        for delta in (0.0, 0.5, 2.0):
            f = edge_removal_factor(d).evaluate(delta).log_abs
            vals = [general_edge_removal_forest(g, e, np.eye(g.p), delta).value.log_abs]
            if max_clique_size(g.add_edge(*e)) <= 3:
                vals.append(tw2_edge_removal(g, e, np.eye(g.p), delta).value.log_abs)
            for v in vals:
                worst = max(worst, abs(v - f) / abs(f))
    assert criterion(5, exact_one and worst <= 1e-14,
                     f"C = 0 gives exactly 1 in one term: {exact_one}; max rel err {worst:.1e}")


# ---------------------------------------------------------------- 6

C6_GRAPHS = {
    "H22": graphs.bipartite(2, 2), "H23": graphs.bipartite(2, 3), "C4": graphs.cycle(4),
    "C5": pytest.param(graphs.cycle(5), marks=pytest.mark.xfail(strict=True, reason=NONCERT)),
    "G5": graphs.g5(),
}


@pytest.mark.parametrize("g", list(C6_GRAPHS.values()), ids=list(C6_GRAPHS))
def test_criterion_6_series_vs_mc(g, criterion, request):
    name = request.node.callspec.id
    rng = np.random.default_rng(600 + list(C6_GRAPHS).index(name))
    zs, tails, slow = [], [], 0.0
    for i in range(10):
        D = graphs.random_correlation(rng, g.p, 0.2)
        assert np.linalg.eigvalsh(D).min() >= 0.2 - 1e-12
        t = time.perf_counter()
        sv = general_D_driver(g, D, 0.5, tol=1e-8)
        est = estimate(g, delta=0.5, D=D, n=1_000_000, seed=100 + i)
        slow = max(slow, time.perf_counter() - t)
        zs.append((math.exp(sv.value.log_abs) - est.mean) / est.std_error)
        tails.append(sv.rel_tail)
    zmax = max(abs(z) for z in zs)
    ok = criterion(6, zmax <= 3 and max(tails) < 1e-6 and slow < 60,
                   f"{name}: max |z| = {zmax:.2f}, max rel tail {max(tails):.1e}, slowest {slow:.1f} s")
    assert ok


# ---------------------------------------------------------------- 7

def _rise(a, k):
    return math.prod(a + j for j in range(k))


def _power_series_2d(P, alpha, N):
    """Coefficients of P(t1, t2)^alpha to total degree N by the binomial series."""
    c0 = P[0, 0]
    u = np.zeros((N + 1, N + 1))
    u[:P.shape[0], :P.shape[1]] = P / c0
    u[0, 0] = 0.0
    out = np.zeros((N + 1, N + 1))
    out[0, 0] = 1.0
    uk = out.copy()
    binom = 1.0
    for k in range(1, N + 1):
        nxt = np.zeros_like(uk)
        for i in range(N + 1):
            for j in range(N + 1 - i):
                if uk[i, j]:
                    for a in range(N + 1 - i):
                        for b in range(N + 1 - i - j - a):
                            nxt[i + a, j + b] += uk[i, j] * u[a, b]
        uk = nxt
        binom *= (alpha - k + 1) / k
        out += binom * uk
    return out * c0 ** alpha


def printed_g5_terms(D, delta, max_order):
    """Terms (q, l1, l2) of the G5 general-D series exactly as printed, hand-coded."""
    A, B = [0, 2], [3, 4]
    DAB = D[np.ix_(A, B)]
    DBB = D[np.ix_(B, B)]
    schur = DBB - DAB.T @ np.linalg.solve(D[np.ix_(A, A)], DAB)
    a = delta + 1.5
    u1, u2 = np.outer(DAB[0], DAB[0]), np.outer(DAB[1], DAB[1])
    # |E(t)| = |D45 - t1 u1 - t2 u2| as a polynomial in (t1, t2)
    P = np.zeros((3, 3))
    P[0, 0] = np.linalg.det(DBB)
    P[1, 0] = -(DBB[0, 0] * u1[1, 1] + DBB[1, 1] * u1[0, 0] - 2 * DBB[0, 1] * u1[0, 1])
    P[0, 1] = -(DBB[0, 0] * u2[1, 1] + DBB[1, 1] * u2[0, 0] - 2 * DBB[0, 1] * u2[0, 1])
    P[2, 0] = u1[0, 0] * u1[1, 1] - u1[0, 1] ** 2
    P[0, 2] = u2[0, 0] * u2[1, 1] - u2[0, 1] ** 2
    P[1, 1] = u1[0, 0] * u2[1, 1] + u1[1, 1] * u2[0, 0] - 2 * u1[0, 1] * u2[0, 1]
    terms = {}
    for q in range(max_order + 1):
        coef = _power_series_2d(P, -(a + q), max_order) * np.linalg.det(schur) ** a
        cq = (_rise(delta + 2.5, q) * _rise(delta + 1.5, q) / (math.factorial(q) * _rise(delta + 3, 2 * q))
              * np.linalg.det(DAB) ** (2 * q))
        for l1 in range(max_order + 1 - q):
            for l2 in range(max_order + 1 - q - l1):
                l = l1 + l2
                deriv = math.factorial(l1) * math.factorial(l2) * coef[l1, l2]
                w = (math.comb(l, l1) * _rise(delta + q + 2.5, l1) * _rise(delta + q + 2.5, l2)
                     / (math.factorial(l) * _rise(delta + 2 * q + 3, l)))
                terms[(q, l1, l2)] = cq * w * deriv
    return terms


def test_printed_g5_terms_at_identity_reduce_to_one():
    t = printed_g5_terms(np.eye(5), 0.5, 4)
    assert t[(0, 0, 0)] == pytest.approx(1.0, rel=1e-15)
    assert all(v == 0.0 for k, v in t.items() if k != (0, 0, 0))


# the printed series uses delta where the inner constant needs delta + 1,
# drops the vertex-2 diagonal and minors and the (delta+1)_q factor; the
# engine follows the derivation and agrees with MC (criterion 6, G5 row)
@pytest.mark.xfail(strict=True, reason="printed worked-example series differs from the derivation")
def test_criterion_7_term_for_term(criterion):
    D, delta = g5_reference_D(), 0.5
    printed = printed_g5_terms(D, delta, 4)
    sv = general_edge_removal_forest(graphs.g5(), (0, 2), D, delta, tol=1e-12, keep_terms=8)
    ours = sv.diagnostics["terms"]
    worst = max(abs(ours.get(k, 0.0) - v) / max(abs(v), 1e-300) for k, v in printed.items())
    ok = criterion(7, worst <= 1e-8, f"max rel term mismatch through q+l <= 4: {worst:.2e}")
    assert ok


def test_criterion_7_identity_collapse(criterion):
    got = general_D_driver(graphs.g5(), np.eye(5), 0.5).value.log_abs
    direct = general_edge_removal_forest(graphs.g5(), (0, 2), np.eye(5), 0.5)
    f = edge_removal_factor(3).evaluate(0.5).log_abs
    ok = criterion(7, abs(got - g5_direct(0.5)) <= 1e-12 * g5_direct(0.5)
                   and abs(direct.value.log_abs - f) <= 1e-14 * abs(f),
                   f"D = I collapse: {got:.15g} vs {g5_direct(0.5):.15g}")
    assert ok


# ---------------------------------------------------------------- 8

# orders that pick an uncertified removal first produce a different constant
@pytest.mark.xfail(strict=True, reason=NONCERT)
def test_criterion_8_removal_order_invariance(criterion):
    rng = np.random.default_rng(800)
    cases = []
    while len(cases) < 20:
        p = int(rng.integers(4, 8))
        g = graphs.random_graph(rng, p, float(rng.uniform(0.3, 0.7)))
        _, _, fills = chordal_cover(g)
        if len(fills) >= 2:
            cases.append((g, fills))
    bad = 0
    for g, fills in cases:
        consts = {identity_pipeline(g, [fills[i] for i in rng.permutation(len(fills))]).constant
                  for _ in range(5)}
        bad += len(consts) > 1
    ok = criterion(8, bad == 0, f"{bad}/20 graphs give order-dependent constants")
    assert ok


# ---------------------------------------------------------------- 9

def test_criterion_9_special_identities(criterion):
    errs = {}
    rng = np.random.default_rng(900)
    # rank one argument reduces to the scalar function of the trace
    e = 0.0
    for _ in range(10):
        v = rng.normal(size=2)
        rho = float(rng.uniform(0.8, 4))
        e = max(e, abs(hyp0f1_2x2(rho, np.outer(v, v)) / hyp0f1_scalar(rho, v @ v) - 1))
    errs["rank-one"] = e
    e = 0.0
    for _ in range(10):
        Y = rng.normal(size=(2, 2))
        Y = Y + Y.T
        th = rng.uniform(0, 2 * math.pi)
        Q = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
        e = max(e, abs(hyp0f1_2x2(2.2, Q @ Y @ Q.T) / hyp0f1_2x2(2.2, Y) - 1))
    errs["rotation"] = e
    # Poisson integral for a single row X (k = 1) in one and two columns
    e = 0.0
    for p, rho, a in [(1, 1.7, np.array([1.3])), (2, 2.6, np.array([0.9, -1.4]))]:
        expo = rho - (p + 2) / 2
        if p == 1:
            lhs, _ = integrate.quad(lambda x: (1 - x * x) ** expo * math.exp(a[0] * x), -1, 1,
                                    epsabs=0, epsrel=1e-12)
        else:
            lhs, _ = integrate.dblquad(
                lambda y, x: (1 - x * x - y * y) ** expo * math.exp(a[0] * x + a[1] * y),
                -1, 1, lambda x: -math.sqrt(1 - x * x), lambda x: math.sqrt(1 - x * x),
                epsabs=0, epsrel=1e-12)
        rhs = math.pi ** (p / 2) * math.gamma(rho - p / 2) / math.gamma(rho) * hyp0f1_scalar(rho, a @ a / 4)
        e = max(e, abs(lhs / rhs - 1))
    errs["poisson"] = e
    # integral of (1 + v'v)^-rho over R^k
    e = 0.0
    for rho in (1.3, 2.5):
        v1, _ = integrate.quad(lambda x: (1 + x * x) ** -rho, -np.inf, np.inf, epsabs=0, epsrel=1e-12)
        e = max(e, abs(v1 / (math.sqrt(math.pi) * math.gamma(rho - 0.5) / math.gamma(rho)) - 1))
        # radial form in the plane
        v2, _ = integrate.quad(lambda r: 2 * math.pi * r * (1 + r * r) ** -rho, 0, np.inf,
                               epsabs=0, epsrel=1e-12)
        e = max(e, abs(v2 / (math.pi * math.gamma(rho - 1) / math.gamma(rho)) - 1))
    errs["polar"] = e
    worst = max(errs.values())
    assert criterion(9, worst <= 1e-8, ", ".join(f"{k} {v:.1e}" for k, v in errs.items()))


# ---------------------------------------------------------------- 10

def test_criterion_10_mc_determinism_and_scaling(criterion):
    g = graphs.g5()
    a = estimate(g, delta=0.5, n=200_000, seed=10, workers=1)
    b = estimate(g, delta=0.5, n=200_000, seed=10, workers=4)
    same = a.log_mean == b.log_mean and a.std_error == b.std_error
    ns = np.array([1_000, 10_000, 100_000, 1_000_000])
    ses = []
    for n in ns:
        ses.append(np.mean([estimate(g, delta=0.5, n=int(n), seed=s).rel_se for s in range(4)]))
    slope = np.polyfit(np.log(ns), np.log(ses), 1)[0]
    ok = criterion(10, same and abs(slope + 0.5) <= 0.05,
                   f"bit-identical across threads: {same}; SE slope {slope:.3f}")
    assert ok


# ---------------------------------------------------------------- 11

def test_criterion_11_derived_formula_gates(criterion):
    rng = np.random.default_rng(1100)
    small = [graphs.empty(1), graphs.complete(2), graphs.path(3), graphs.complete(3),
             Graph.from_edges(3, [(0, 1)])]
    es, ec = 0.0, 0.0
    for g in small:
        for _ in range(2):
            D = graphs.random_spd(rng, g.p)
            d = float(rng.uniform(-0.4, 1.5))
            R, scaling = to_correlation(D)
            direct = quadrature_small(g, d, D).log_abs
            via = quadrature_small(g, d, R).log_abs + scaling(d, g)
            es = max(es, abs(via - direct) / abs(direct))
            for dc in (1.5, 3.0, 5.5):
                q = quadrature_small(g, (dc - 2) / 2, D, trace_scale=0.5).log_abs
                ec = max(ec, abs(c_from_i(g, dc, D).log_abs - q) / abs(q))
    assert criterion(11, es <= 1e-5 and ec <= 1e-5,
                     f"correlation scaling {es:.1e}, C from I {ec:.1e}")
