import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from courant_brst.cohomology import (
    composition_is_zero,
    cohomology_dims,
    differential_matrix,
    enumerate_basis,
    exactness_report,
    label_weights,
    rank,
)
from courant_brst.courant import (
    CourantData,
    TransitionMap,
    cartan_theta,
    hyperbolic_metric,
    point_chart,
    so3_structure_constants,
    standard_chart,
    theta0,
    theta_from_data,
    transform,
)
from courant_brst.errors import NotClosedError, ShapeError, TruncationError
from courant_brst.superpoly import ChartContext
from oracles import sympy_rank

SO3 = cartan_theta(so3_structure_constants(), [[1, 0, 0], [0, 1, 0], [0, 0, 1]])


def test_enumerate_examples():
    pt = point_chart([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert [str(b) for b in enumerate_basis(pt, 2, 0)] == ["xi1*xi2", "xi1*xi3", "xi2*xi3"]
    c1 = standard_chart(1)
    assert [str(b) for b in enumerate_basis(c1, 0, 1)] == ["1", "q1"]
    assert [str(b) for b in enumerate_basis(c1, 2, 0)] == ["xi1*theta1", "p1"]
    with pytest.raises(ShapeError):
        enumerate_basis(c1, -1, 0)


@pytest.mark.parametrize("w,N", [(0, 3), (1, 2), (3, 2), (4, 1)])
def test_enumerate_is_exact(w, N):
    ctx = standard_chart(2)
    basis = enumerate_basis(ctx, w, N)
    assert len(set(basis)) == len(basis)
    for b in basis:
        (key,) = b.terms
        assert ctx.key_weight(key) == w and sum(key[0][:2]) <= N


def test_so3_blocks():
    assert not any(differential_matrix(SO3, weight=0).columns[0])
    block = differential_matrix(SO3, weight=1)
    assert block.rank == 3
    assert block.dense()[2][0] == -1  # D xi1 = -xi2 xi3


def test_standard_block_weight1():
    ctx = standard_chart(1)
    block = differential_matrix(theta0(ctx), weight=1, max_qdeg=2)
    assert len(block.basis) == 6 and len(block.target_basis) == 6


@given(st.lists(st.dictionaries(st.integers(0, 6), st.fractions(min_value=-5, max_value=5, max_denominator=4),
                                max_size=5), max_size=7))
def test_rank_matches_sympy(cols):
    assert rank(cols) == sympy_rank(cols, 7)


def test_block_composition_zero():
    for theta, N in [(SO3, 0), (theta0(standard_chart(2)), 2)]:
        blocks = [differential_matrix(theta, weight=w, max_qdeg=N) for w in range(4)]
        for a, b in zip(blocks, blocks[1:]):
            assert composition_is_zero(a, b)


def test_golden_dims():
    assert cohomology_dims(SO3, max_weight=3) == [1, 0, 0, 1]
    ab = point_chart(hyperbolic_metric(1))
    assert cohomology_dims(ab.zero(), ab, 2, 0) == [1, 2, 1]
    assert cohomology_dims(theta0(standard_chart(2)), max_weight=4, max_qdeg=4) == [1, 0, 0, 0, 0]


def test_naive_truncation_overcounts():
    assert cohomology_dims(theta0(standard_chart(2)), max_weight=2, max_qdeg=2, slack=0)[1] > 0


@pytest.mark.parametrize("n,N", [(1, 1), (1, 3), (2, 2), (3, 1)])
def test_standard_is_acyclic_above_zero(n, N):
    dims = cohomology_dims(theta0(standard_chart(n)), max_weight=min(N, 3), max_qdeg=N)
    assert dims[0] == 1 and not any(dims[1:])


def test_truncation_refuses():
    ctx = ChartContext.create(1, [[1]])
    theta = theta_from_data(CourantData(ctx, ((ctx.q(0) * ctx.q(0),),)))
    with pytest.raises(TruncationError) as err:
        differential_matrix(theta, weight=0, max_qdeg=1)
    assert err.value.element is not None


def test_requires_structure_equation():
    ctx = standard_chart(4)
    theta = theta0(ctx) - ctx.q(3) * ctx.xi(0) * ctx.xi(1) * ctx.xi(2)
    with pytest.raises(NotClosedError):
        cohomology_dims(theta, max_weight=1, max_qdeg=1)


def test_invariant_under_constant_rotation():
    ctx = point_chart(hyperbolic_metric(2))
    d = CourantData(ctx, (), {(0, 1, 2): 1})
    z, o = ctx.zero(), ctx.one()
    T = ((o, z, z, 2 * o), (z, o, -2 * o, z), (z, z, o, z), (z, z, z, o))
    t = TransitionMap(ctx, ctx, (), (), T)
    before = cohomology_dims(theta_from_data(d), max_weight=4)
    after = cohomology_dims(theta_from_data(transform(d, t)), max_weight=4)
    assert before == after


def test_exactness_report():
    c3 = standard_chart(3)
    rep = exactness_report(theta0(c3), c3.xi(0) * c3.xi(1) * c3.xi(2), max_qdeg=1)
    assert rep.closed and rep.exact
    assert derham_image(c3, rep.preimage) == c3.xi(0) * c3.xi(1) * c3.xi(2)
    rep = exactness_report(SO3, SO3.ctx.xi(0) * SO3.ctx.xi(1) * SO3.ctx.xi(2), max_qdeg=0)
    assert rep.closed and rep.exact is False
    rep = exactness_report(SO3, SO3.ctx.xi(0), max_qdeg=0)
    assert not rep.closed and rep.residual


def derham_image(ctx, f):
    from courant_brst.brackets import poisson_bracket
    return poisson_bracket(theta0(ctx), f)


def test_labels():
    assert label_weights(range(3)) == [0, 1, 2]
    assert label_weights(range(3), True) == [-2, -1, 0]
