from fractions import Fraction
import random

import pytest
from hypothesis import given, strategies as st

from courant_brst.errors import ContextError, GradingError
from courant_brst.superpoly import (
    EVEN,
    ODD,
    ChartContext,
    Context,
    GradedVar,
    euler,
    invert_matrix,
    left_derivative,
    right_derivative,
    sort_odd,
    substitute,
    weight_decompose,
)
from oracles import mixed_chart, random_monomial

CTX = mixed_chart()


def polys(max_terms=3):
    def build(seed, n):
        rng = random.Random(seed)
        out = CTX.zero()
        for _ in range(n):
            out = out + random_monomial(CTX, rng, 6)
        return out
    return st.builds(build, st.integers(0, 10**6), st.integers(0, max_terms))


def test_odd_squares_vanish():
    xi1 = CTX.xi(0)
    assert xi1 * xi1 == 0
    assert CTX.monomial(odd=["xi1", "xi1"]).is_zero


def test_reordering_sign():
    assert CTX.xi(1) * CTX.xi(0) == -(CTX.xi(0) * CTX.xi(1))
    assert CTX.monomial(odd=["xi3", "xi1", "xi2"]) == CTX.xi(0) * CTX.xi(1) * CTX.xi(2)
    assert sort_odd([2, 0, 1]) == (1, (0, 1, 2))
    assert sort_odd([1, 0]) == (-1, (0, 1))
    assert sort_odd([1, 1]) == (0, None)


def test_weights_and_parity():
    f = CTX.q(0) * CTX.xi(0) * CTX.p(1)
    assert f.weight == 3 and f.parity == ODD
    assert CTX.zero().weight is None
    with pytest.raises(GradingError):
        (CTX.q(0) + CTX.xi(0)).weight


def test_string_form():
    assert str(3 - 2 * CTX.q(0) - CTX.xi(0)) == "3 - 2*q1 - xi1"
    assert str(CTX.zero()) == "0"


def test_context_mismatch():
    other = ChartContext.create(1, [[1]])
    with pytest.raises(ContextError):
        CTX.q(0) + other.q(0)


def test_gradedvar_validation():
    with pytest.raises(GradingError):
        GradedVar("x", EVEN, 1)
    with pytest.raises(GradingError):
        GradedVar("x", ODD, 1, bidegree=(1, 1))


def test_metric_validation():
    with pytest.raises(ContextError):
        ChartContext.create(0, [[1, 2], [0, 1]])
    with pytest.raises(ContextError):
        ChartContext.create(0, [[1, 1], [1, 1]])


def test_invert_matrix():
    m = [[2, 1], [1, 1]]
    inv = invert_matrix(m)
    assert inv == ((1, -1), (-1, 2))


def test_left_right_derivative_signs():
    xi1, xi2 = CTX.xi(0), CTX.xi(1)
    f = xi1 * xi2
    assert left_derivative("xi1", f) == xi2
    assert right_derivative("xi1", f) == -xi2
    assert left_derivative("xi2", f) == -xi1
    assert right_derivative("xi2", f) == xi1
    assert left_derivative("q1", CTX.q(0) ** 3) == 3 * CTX.q(0) ** 2


def test_substitute_checks_grading():
    with pytest.raises(GradingError):
        substitute(CTX.xi(0), {"xi1": CTX.q(0)})
    assert substitute(CTX.q(0) * CTX.xi(0), {"q1": CTX.q(1) + 1}) == (CTX.q(1) + 1) * CTX.xi(0)


@given(polys(), polys(), polys())
def test_ring_axioms(f, g, h):
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h
    assert (f + g) - g == f


@given(polys(1), polys(1))
def test_graded_commutativity(f, g):
    sign = -1 if (f.weight or 0) * (g.weight or 0) % 2 else 1
    assert f * g == (g * f).scale(sign)


@given(polys(1), polys(1), st.sampled_from([v.name for v in CTX.variables]))
def test_left_derivative_is_graded_derivation(f, g, v):
    pv = CTX.lookup(v).parity
    sign = -1 if pv * (f.weight or 0) % 2 else 1
    assert left_derivative(v, f * g) == left_derivative(v, f) * g + (f * left_derivative(v, g)).scale(sign)


@given(polys())
def test_euler_and_weight_decompose(f):
    parts = weight_decompose(f)
    assert sum(parts.values(), CTX.zero()) == f
    assert euler(f) == sum((p.scale(w) for w, p in parts.items()), CTX.zero())


@given(polys(), polys())
def test_substitution_is_homomorphism(f, g):
    images = {"q1": CTX.q(0) + CTX.q(1), "xi1": CTX.xi(0) + CTX.xi(2).scale(Fraction(1, 2)),
              "p2": CTX.p(1) + CTX.xi(0) * CTX.xi(1)}
    assert substitute(f * g, images) == substitute(f, images) * substitute(g, images)


def test_plain_context_monomial():
    ctx = Context([GradedVar("a", EVEN, 0)], [GradedVar("u", ODD, 1), GradedVar("v", ODD, 3)])
    m = ctx.monomial(even={"a": 2}, odd=["v", "u"], coeff=5)
    assert m.weight == 4
    assert m == -5 * ctx.var("a") ** 2 * ctx.var("u") * ctx.var("v")
