"""Bigraded calculus on the standard chart (q, xi, theta, p).

Bidegree (k, l): k counts p and theta (eigenvalue of eps1 = p d/dp + theta d/dtheta),
l counts xi and p (eps2 = p d/dp + xi d/dxi), so the total weight is k + l.

    D    = xi^i d/dq^i + p_i d/dtheta_i      bidegree (0, +1), equals {Theta_0, .}
    iota = theta_i d/dp_i                   bidegree (0, -1)
    D iota + iota D = eps1
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Tuple

from .brackets import OddChart, poisson_bracket, schouten_bracket
from .courant import is_standard_chart, standard_chart, theta0
from .errors import ContextError, IncompatibleError, NotClosedError, NotLieAlgebroidError, OutOfRangeError
from .superpoly import Superpolynomial, left_derivative, substitute


def _chart(f: Superpolynomial):
    ctx = f.ctx
    if not is_standard_chart(ctx):
        raise ContextError(f"{ctx!r} is not the standard bigraded chart")
    return ctx


def key_bidegree(ctx, key) -> Tuple[int, int]:
    exps, odd = key
    n = ctx.base_dim
    np_ = sum(exps[n:])
    ntheta = sum(1 for k in odd if k >= n)
    return np_ + ntheta, np_ + len(odd) - ntheta


@dataclass(frozen=True)
class BigradedElement:
    value: Superpolynomial
    bidegree: Tuple[int, int]

    def __post_init__(self):
        ctx = _chart(self.value)
        for key in self.value.terms:
            if key_bidegree(ctx, key) != tuple(self.bidegree):
                raise OutOfRangeError(f"{self.value} is not homogeneous of bidegree {self.bidegree}")


def bidegree_decompose(f: Superpolynomial) -> List[BigradedElement]:
    """Joint eigen-decomposition under (eps1, eps2), sorted by bidegree."""
    ctx = _chart(f)
    parts = {}
    for key, c in f.terms.items():
        parts.setdefault(key_bidegree(ctx, key), {})[key] = c
    return [BigradedElement(Superpolynomial(ctx, parts[b]), b) for b in sorted(parts)]


def epsilon1(f: Superpolynomial) -> Superpolynomial:
    ctx = _chart(f)
    return Superpolynomial(ctx, {k: c * key_bidegree(ctx, k)[0] for k, c in f.terms.items()})


def epsilon2(f: Superpolynomial) -> Superpolynomial:
    ctx = _chart(f)
    return Superpolynomial(ctx, {k: c * key_bidegree(ctx, k)[1] for k, c in f.terms.items()})


def _k_of(f) -> int:
    """The eps1 eigenvalue of a k-homogeneous element."""
    if isinstance(f, BigradedElement):
        return f.bidegree[0]
    ctx = _chart(f)
    ks = {key_bidegree(ctx, key)[0] for key in f.terms}
    if len(ks) > 1:
        raise OutOfRangeError(f"element mixes eps1 eigenvalues {sorted(ks)}")
    return ks.pop() if ks else None


def _value(f) -> Superpolynomial:
    return f.value if isinstance(f, BigradedElement) else f


def derham_D(f) -> Superpolynomial:
    f = _value(f)
    ctx = _chart(f)
    out = ctx.zero()
    for i in range(ctx.base_dim):
        dq = left_derivative(ctx.base_vars[i].name, f)
        if dq:
            out = out + ctx.xi(i) * dq
        dth = left_derivative(ctx.fiber_vars[ctx.base_dim + i].name, f)
        if dth:
            out = out + ctx.p(i) * dth
    return out


def iota_apply(f) -> Superpolynomial:
    f = _value(f)
    ctx = _chart(f)
    out = ctx.zero()
    for i in range(ctx.base_dim):
        dp = left_derivative(ctx.momenta[i].name, f)
        if dp:
            out = out + ctx.xi(ctx.base_dim + i) * dp
    return out


def homotopy_check(f) -> Superpolynomial:
    """D iota f + iota D f - eps1 f (identically zero)."""
    f = _value(f)
    return derham_D(iota_apply(f)) + iota_apply(derham_D(f)) - epsilon1(f)


def fn_decompose(f) -> Tuple[Superpolynomial, Superpolynomial]:
    """(1/k) D iota f and (1/k) iota D f: Lie-derivative and contraction parts."""
    k = _k_of(f)
    f = _value(f)
    if k is None:
        return f, f
    if k < 1:
        raise OutOfRangeError("the decomposition needs k >= 1")
    return derham_D(iota_apply(f)) / k, iota_apply(derham_D(f)) / k


def primitive(f) -> Superpolynomial:
    """g = (1/k) iota f with D g = f, for a closed f with k >= 1."""
    k = _k_of(f)
    f = _value(f)
    if k is None:
        return f
    if k < 1:
        raise OutOfRangeError("k = 0 is the de Rham complex itself, which is not acyclic")
    residual = derham_D(f)
    if residual:
        raise NotClosedError(f"D f = {residual} is nonzero", residual)
    return iota_apply(f) / k


def derived_schouten(f: Superpolynomial, g: Superpolynomial) -> Superpolynomial:
    """{{f, Theta_0}, g}."""
    ctx = _chart(f)
    return poisson_bracket(poisson_bracket(f, theta0(ctx), ctx), g, ctx)


def poisson_from_gamma(gamma) -> Superpolynomial:
    """pi = 1/2 iota gamma for gamma of bidegree (2, 1), D-closed and {gamma, gamma} = 0."""
    gamma = _value(gamma)
    ctx = _chart(gamma)
    if gamma:
        BigradedElement(gamma, (2, 1))
    residual = derham_D(gamma)
    if residual:
        raise IncompatibleError(f"D gamma = {residual} is nonzero", residual)
    obstruction = poisson_bracket(gamma, gamma, ctx)
    if obstruction:
        raise NotLieAlgebroidError(f"{{gamma, gamma}} = {obstruction} is nonzero", obstruction)
    pi = iota_apply(gamma) / 2
    # both follow from the homotopy; kept as cheap exact postconditions
    assert derham_D(pi) == gamma
    assert not derived_schouten(pi, pi)
    return pi


# ---------------------------------------------------------------------------
# identification with T*[1]M0


def _qtheta_names(ctx):
    return ctx.base_names() + [v.name for v in ctx.fiber_vars[ctx.base_dim:]]


def to_odd_chart(f: Superpolynomial, chart: OddChart = None) -> Superpolynomial:
    """x <-> q, theta <-> theta for polynomials in q and theta only."""
    ctx = _chart(f)
    if not f.depends_only_on(_qtheta_names(ctx)):
        raise ContextError(f"{f} involves xi or p")
    chart = chart or OddChart.create(ctx.base_dim)
    images = {}
    for i in range(ctx.base_dim):
        images[ctx.base_vars[i].name] = chart.x(i)
        images[ctx.fiber_vars[ctx.base_dim + i].name] = chart.theta(i)
    # xi and p have no counterpart on the odd chart
    return _substitute_partial(f, images, chart)


def from_odd_chart(f: Superpolynomial, ctx=None) -> Superpolynomial:
    chart = f.ctx
    if not isinstance(chart, OddChart):
        raise ContextError("expected a polynomial on an OddChart")
    ctx = ctx or standard_chart(chart.dim)
    images = {chart.base_vars[i].name: ctx.q(i) for i in range(chart.dim)}
    images.update({chart.odd_momenta[i].name: ctx.xi(ctx.base_dim + i) for i in range(chart.dim)})
    return substitute(f, images)


def _substitute_partial(f, images, target):
    out = target.zero()
    src = f.ctx
    for (exps, odd), c in f.terms.items():
        term = target.const(c)
        for j, e in enumerate(exps):
            if e:
                term = term * images[src.even_vars[j].name] ** e
        for k in odd:
            term = term * images[src.odd_vars[k].name]
        out = out + term
    return out


def random_monomial(ctx, rng, max_weight: int, max_qdeg: int = 2) -> Superpolynomial:
    """Seeded random monomial of weight <= max_weight with a small coefficient."""
    n = ctx.base_dim
    while True:
        odd = tuple(k for k in range(2 * n) if rng.random() < 0.4)
        pexps = [rng.randint(0, 2) for _ in range(n)]
        if len(odd) + 2 * sum(pexps) <= max_weight:
            break
    qexps = [0] * n
    for _ in range(rng.randint(0, max_qdeg)):
        qexps[rng.randrange(n)] += 1
    coeff = Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.choice([1, 1, 2]))
    return Superpolynomial(ctx, {(tuple(qexps + pexps), odd): coeff})
