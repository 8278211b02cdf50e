import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gwnorm import graphs
from gwnorm.errors import PreconditionError, UnsupportedStructureError
from gwnorm.exact import (
    ExactConstant, SPDMatrix, bipartite_identity, c_from_i, chordal_general_D,
    chordal_identity, complete_constant, edge_removal_factor,
    general_removal_certified, identity_constant, identity_pipeline,
    identity_removal_certified, log_i_exact, to_correlation,
)
from gwnorm.graph import Graph, is_chordal
from gwnorm.mc import quadrature_small
from gwnorm.special import HalfInt, log_multigamma


def g5_closed_form(d):
    lg = math.lgamma
    return (3.5 * math.log(math.pi) + lg(d + 1) + lg(d + 1.5) + 2 * lg(d + 2)
            + 2 * lg(d + 2.5) - lg(d + 3))


@pytest.mark.parametrize("delta", [0, 0.5, 1, 2, -0.5, 7.25])
def test_g5_identity_constant(delta):
    got = identity_constant(graphs.g5()).evaluate(delta)
    assert got.sign == 1
    assert got.log_abs == pytest.approx(g5_closed_form(delta), rel=1e-13)


def test_exact_constant_algebra_and_json():
    c = ExactConstant.gamma_of(HalfInt(3), 2) * ExactConstant(1, ()) / ExactConstant.gamma_of(HalfInt(3), 1)
    assert c == ExactConstant(1, ((HalfInt(3), 1),))
    assert ExactConstant.from_json(c.to_json()) == c
    c5 = identity_constant(graphs.g5())
    assert ExactConstant.from_json(c5.to_json()) == c5
    assert (c5 / c5) == ExactConstant.one()
    assert str(ExactConstant.one())


def test_evaluate_below_pole_raises():
    with pytest.raises(PreconditionError):
        identity_constant(graphs.g5()).evaluate(-1.0)


def test_multigamma_constant():
    for p in (1, 2, 3, 4):
        c = ExactConstant.multigamma(p, HalfInt(p + 1))
        assert c.evaluate(0.3).log_abs == pytest.approx(log_multigamma(p, 0.3 + (p + 1) / 2), rel=1e-14)


def test_edge_removal_factor_values():
    for d in range(5):
        v = edge_removal_factor(d).evaluate(0.5).log_abs
        expect = -0.5 * math.log(math.pi) + math.lgamma(0.5 + (d + 2) / 2) - math.lgamma(0.5 + (d + 3) / 2)
        assert v == pytest.approx(expect, rel=1e-14)


def test_chordal_identity_matches_general_formula():
    rng = np.random.default_rng(5)
    for _ in range(30):
        g = graphs.random_chordal(rng, int(rng.integers(1, 9)))
        ok, ord = is_chordal(g)
        a = chordal_identity(g, ord).evaluate(0.7).log_abs
        b = chordal_general_D(g, ord, None if g.p == 0 else np.eye(g.p), 0.7).log_abs
        assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


def test_complete_constant_is_siegel():
    D = graphs.random_spd(np.random.default_rng(3), 4)
    ok, ord = is_chordal(graphs.complete(4))
    assert complete_constant(D, 0.4).log_abs == pytest.approx(
        chordal_general_D(graphs.complete(4), ord, D, 0.4).log_abs, rel=1e-13)


@pytest.mark.parametrize("m,n", [(1, 1), (1, 3), (2, 2), (2, 3), (3, 3), (2, 4), (4, 4)])
def test_bipartite_closed_form_equals_pipeline(m, n):
    assert bipartite_identity(m, n) == identity_constant(graphs.bipartite(m, n))


def test_c4_value():
    assert identity_constant(graphs.cycle(4)).evaluate(0.5).log_abs == pytest.approx(2.3295789649223675, rel=1e-13)


def test_pipeline_certification_flags():
    assert identity_pipeline(graphs.g5()).certified
    assert identity_pipeline(graphs.cycle(4)).certified
    assert identity_pipeline(graphs.bipartite(2, 3)).certified
    p5 = identity_pipeline(graphs.cycle(5))
    assert [s.certified for s in p5.steps] == [True, False]
    assert not identity_pipeline(graphs.petersen_subgraph()).certified


def test_certification_chordal_ge_always_holds():
    rng = np.random.default_rng(8)
    for _ in range(40):
        g = graphs.random_chordal(rng, int(rng.integers(3, 8)), 0.6)
        for e in sorted(g.edges):
            assert identity_removal_certified(g, e)
            assert general_removal_certified(g, e)


def test_removal_order_must_be_permutation():
    with pytest.raises(PreconditionError):
        identity_pipeline(graphs.cycle(5), removal_order=[(0, 2)])


def test_spd_matrix_checks():
    with pytest.raises(PreconditionError):
        SPDMatrix([[1, 0.5], [0.4, 1]])
    with pytest.raises(PreconditionError):
        SPDMatrix([[1, 2], [2, 1]])
    S = SPDMatrix([[2.0, 0.3], [0.3, 1.0]])
    assert S.logdet() == pytest.approx(math.log(2 - 0.09))


def test_to_correlation_scaling_against_quadrature():
    rng = np.random.default_rng(21)
    for g in (graphs.path(3), graphs.complete(3), Graph.from_edges(3, [(0, 1)]), graphs.path(2)):
        D = graphs.random_spd(rng, g.p)
        R, sc = to_correlation(D)
        direct = quadrature_small(g, 0.3, D).log_abs
        via = quadrature_small(g, 0.3, R).log_abs + sc(0.3, g)
        assert via == pytest.approx(direct, rel=1e-8)


def test_c_from_i_against_quadrature():
    rng = np.random.default_rng(22)
    for g in (graphs.path(3), graphs.complete(2), graphs.complete(3), graphs.empty(1)):
        D = graphs.random_spd(rng, g.p)
        for dc in (1.5, 3.0, 4.2):
            direct = quadrature_small(g, (dc - 2) / 2, D, trace_scale=0.5).log_abs
            assert c_from_i(g, dc, D).log_abs == pytest.approx(direct, rel=1e-8)


def test_c_from_i_p1_closed_form():
    d, dc = 1.7, 3.3
    got = c_from_i(graphs.empty(1), dc, [[d]]).log_abs
    assert got == pytest.approx(dc / 2 * math.log(2 / d) + math.lgamma(dc / 2), rel=1e-13)


def test_c_from_i_rejects_improper():
    with pytest.raises(PreconditionError):
        c_from_i(graphs.empty(1), 1.0, [[1.0]])


def test_log_i_exact_dispatch():
    D = graphs.random_correlation(np.random.default_rng(1), 4)
    with pytest.raises(UnsupportedStructureError):
        log_i_exact(graphs.cycle(4), D, 0.5)
    assert log_i_exact(graphs.cycle(4), np.eye(4), 0.5).log_abs == pytest.approx(
        identity_constant(graphs.cycle(4)).evaluate(0.5).log_abs)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 7), st.integers(0, 10_000), st.floats(-0.9, 5.0))
def test_prop_product_equals_clique_formula(p, seed, delta):
    g = graphs.random_chordal(np.random.default_rng(seed), p)
    ok, ord = is_chordal(g)
    a = chordal_identity(g, ord).evaluate(delta).log_abs
    b = chordal_general_D(g, ord, np.eye(p), delta).log_abs
    assert a == pytest.approx(b, rel=1e-10, abs=1e-10)
