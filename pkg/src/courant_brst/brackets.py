"""Canonical brackets: the even weight -2 Poisson bracket and the odd Schouten bracket.

Both are evaluated through a bidifferential formula built from left and right
derivatives.  The formula is checked against the generator table by the
property tests (antisymmetry, Leibniz, Jacobi), which are the authority on
signs.

Orientation: {p_i, q^j} = +delta_i^j, so that {Theta_0, .} is exactly the
coordinate vector field xi^i d/dq^i + p_i d/dtheta_i.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Tuple

from .errors import ContextError, NotPoissonError
from .superpoly import (
    EVEN,
    ODD,
    ChartContext,
    Context,
    GradedVar,
    Superpolynomial,
    left_derivative,
    right_derivative,
)


class OddChart(Context):
    """Chart (x^i, theta_i) of T*[1]M0; functions are multivector fields."""

    def __init__(self, base_vars, odd_momenta):
        base_vars, odd_momenta = tuple(base_vars), tuple(odd_momenta)
        if len(base_vars) != len(odd_momenta):
            raise ContextError("need exactly one odd momentum per base variable")
        if any(v.weight != 0 for v in base_vars) or any(v.weight != 1 for v in odd_momenta):
            raise ContextError("OddChart needs weight-0 base variables and weight-1 momenta")
        super().__init__(base_vars, odd_momenta)
        self.base_vars, self.odd_momenta = base_vars, odd_momenta

    @classmethod
    def create(cls, dim: int, base="x", momentum="theta"):
        return cls(
            [GradedVar(f"{base}{i + 1}", EVEN, 0) for i in range(dim)],
            [GradedVar(f"{momentum}{i + 1}", ODD, 1) for i in range(dim)],
        )

    @property
    def dim(self) -> int:
        return len(self.base_vars)

    def x(self, i):
        return self.var(self.base_vars[i].name)

    def theta(self, i):
        return self.var(self.odd_momenta[i].name)


@dataclass(frozen=True)
class BracketTable:
    """Nonzero brackets of ordered generator pairs, keyed by variable names."""

    entries: Dict[Tuple[str, str], Fraction]

    def __getitem__(self, pair):
        return self.entries.get(pair, Fraction(0))


def bracket_table(ctx) -> BracketTable:
    """The generator table a chart's bracket is extended from."""
    entries = {}
    if isinstance(ctx, ChartContext):
        for q, p in zip(ctx.base_vars, ctx.momenta):
            entries[(p.name, q.name)] = Fraction(1)
            entries[(q.name, p.name)] = Fraction(-1)
        for a, va in enumerate(ctx.fiber_vars):
            for b, vb in enumerate(ctx.fiber_vars):
                if ctx.inverse_metric[a][b]:
                    entries[(va.name, vb.name)] = ctx.inverse_metric[a][b]
    elif isinstance(ctx, OddChart):
        for x, th in zip(ctx.base_vars, ctx.odd_momenta):
            entries[(th.name, x.name)] = Fraction(1)
            entries[(x.name, th.name)] = Fraction(-1)
    else:
        raise ContextError(f"{ctx!r} carries no bracket")
    return BracketTable(entries)


def _resolve(f, g, ctx, kind):
    if f.ctx != g.ctx:
        raise ContextError(f"context mismatch: {f.ctx!r} vs {g.ctx!r}")
    if ctx is None:
        ctx = f.ctx
    elif ctx != f.ctx:
        raise ContextError(f"operands are not over {ctx!r}")
    if not isinstance(ctx, kind):
        raise ContextError(f"{ctx!r} is not a {kind.__name__}")
    return ctx


def poisson_bracket(f: Superpolynomial, g: Superpolynomial, ctx: ChartContext = None) -> Superpolynomial:
    """Even bracket of weight -2 on a degree-2 Darboux chart."""
    ctx = _resolve(f, g, ctx, ChartContext)
    out = ctx.zero()
    for q, p in zip(ctx.base_vars, ctx.momenta):
        dfp = left_derivative(p.name, f)
        if dfp:
            out = out + dfp * left_derivative(q.name, g)
        dfq = left_derivative(q.name, f)
        if dfq:
            out = out - dfq * left_derivative(p.name, g)
    right = [right_derivative(v.name, f) for v in ctx.fiber_vars]
    left = [left_derivative(v.name, g) for v in ctx.fiber_vars]
    for a in range(ctx.rank):
        if not right[a]:
            continue
        for b in range(ctx.rank):
            gab = ctx.inverse_metric[a][b]
            if gab and left[b]:
                out = out + (right[a] * left[b]).scale(gab)
    return out


def schouten_bracket(f: Superpolynomial, g: Superpolynomial, chart: OddChart = None) -> Superpolynomial:
    """Odd bracket of weight -1 generated by [theta_i, x^j] = delta_i^j."""
    chart = _resolve(f, g, chart, OddChart)
    out = chart.zero()
    for x, th in zip(chart.base_vars, chart.odd_momenta):
        dft = right_derivative(th.name, f)
        if dft:
            out = out + dft * left_derivative(x.name, g)
        dfx = left_derivative(x.name, f)
        if dfx:
            out = out - dfx * left_derivative(th.name, g)
    return out


def derived_poisson(pi: Superpolynomial, f: Superpolynomial, g: Superpolynomial,
                    chart: OddChart = None) -> Superpolynomial:
    """The derived bracket [[f, pi], g] of two functions on the base.

    Raises NotPoissonError when [pi, pi] != 0, carrying the obstruction.
    """
    chart = _resolve(f, g, chart, OddChart)
    _resolve(pi, f, chart, OddChart)
    if not pi.is_weight_homogeneous(2):
        raise ContextError("pi must be a bivector (weight 2)")
    if not (f.is_weight_homogeneous(0) and g.is_weight_homogeneous(0)):
        raise ContextError("f and g must be functions on the base (weight 0)")
    obstruction = schouten_bracket(pi, pi, chart)
    if obstruction:
        raise NotPoissonError(f"[pi, pi] = {obstruction} is nonzero", obstruction)
    return schouten_bracket(schouten_bracket(f, pi, chart), g, chart)


def bracket(f: Superpolynomial, g: Superpolynomial) -> Superpolynomial:
    """Dispatch to the bracket carried by the operands' context."""
    if isinstance(f.ctx, OddChart):
        return schouten_bracket(f, g)
    return poisson_bracket(f, g)


def generator_pairs_nondegenerate(ctx) -> bool:
    """Every generator has a partner with nonzero bracket."""
    table = bracket_table(ctx)
    names = [v.name for v in ctx.variables]
    return all(any(table[(u, w)] for w in names) for u in names)
