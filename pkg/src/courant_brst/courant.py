"""Courant algebroids as cubic Hamiltonians (BRST charges) on a Darboux chart.

Sections of E are weight-1 polynomials, functions on the base are weight-0
polynomials, and every geometric operation is a nested bracket with Theta:

    a(e) . f   = {{e, Theta}, f}
    e1 o e2    = {{e1, Theta}, e2}
    <e1, e2>   = {e1, e2}
    D F        = {Theta, F}
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .brackets import bracket_table, poisson_bracket
from .errors import ContextError, GradingError, InvarianceError, IsometryError, ShapeError
from .superpoly import (
    ChartContext,
    Superpolynomial,
    from_terms,
    left_derivative,
    substitute,
)


# --------------------------------------------------------------------------
# charts


def standard_chart(n: int) -> ChartContext:
    """Chart (q^i, xi^i, theta_i, p_i) of T*[2]T[1]R^n with the bigrading.

    xi^i stands for dx^i and theta_i for d/dx^i; the metric pairs xi^i with
    theta_i, so {xi^i, theta_j} = delta^i_j.
    """
    names = [f"xi{i + 1}" for i in range(n)] + [f"theta{i + 1}" for i in range(n)]
    bideg = {f"q{i + 1}": (0, 0) for i in range(n)}
    bideg.update({f"xi{i + 1}": (0, 1) for i in range(n)})
    bideg.update({f"theta{i + 1}": (1, 0) for i in range(n)})
    bideg.update({f"p{i + 1}": (1, 1) for i in range(n)})
    return ChartContext.create(n, hyperbolic_metric(n), fiber_names=names, bidegrees=bideg)


def hyperbolic_metric(m: int):
    """Split-signature metric pairing fiber slot a with slot a + m."""
    g = [[0] * (2 * m) for _ in range(2 * m)]
    for a in range(m):
        g[a][a + m] = g[a + m][a] = 1
    return g


def brst_chart(dim_g: int, n: int) -> ChartContext:
    """(g + g*)[1] x T*[2]R^n: ghosts xi^a, antighosts theta_a, canonical pairing."""
    names = [f"xi{a + 1}" for a in range(dim_g)] + [f"theta{a + 1}" for a in range(dim_g)]
    return ChartContext.create(n, hyperbolic_metric(dim_g), fiber_names=names)


def point_chart(metric) -> ChartContext:
    return ChartContext.create(0, metric)


def is_standard_chart(ctx) -> bool:
    return isinstance(ctx, ChartContext) and ctx == standard_chart(ctx.base_dim)


def theta0(ctx: ChartContext) -> Superpolynomial:
    """Theta_0 = xi^i p_i on the standard chart."""
    if not is_standard_chart(ctx):
        raise ContextError("Theta_0 is defined on the standard chart only")
    out = ctx.zero()
    for i in range(ctx.base_dim):
        out = out + ctx.xi(i) * ctx.p(i)
    return out


# --------------------------------------------------------------------------
# data types


def _check_base_poly(ctx: ChartContext, f: Superpolynomial, where: str):
    if f.ctx != ctx:
        raise ContextError(f"{where}: polynomial is over {f.ctx!r}, expected {ctx!r}")
    if not f.depends_only_on(ctx.base_names()):
        raise ShapeError(f"{where}: must depend on base variables only, got {f}")


def _as_poly(ctx, value):
    return value if isinstance(value, Superpolynomial) else ctx.const(value)


@dataclass(frozen=True, eq=False)
class CourantData:
    """Anchor coefficients A^i_a(q) (indexed [i][a]) and structure functions phi_abc(q).

    ``phi`` maps strictly increasing triples (a, b, c) to polynomials; the
    remaining entries follow from total antisymmetry.
    """

    ctx: ChartContext
    anchor: Tuple[Tuple[Superpolynomial, ...], ...]
    phi: Mapping[Tuple[int, int, int], Superpolynomial] = field(default_factory=dict)

    def __post_init__(self):
        ctx = self.ctx
        anchor = tuple(tuple(_as_poly(ctx, x) for x in row) for row in self.anchor)
        if len(anchor) != ctx.base_dim or any(len(row) != ctx.rank for row in anchor):
            raise ShapeError(f"anchor must be {ctx.base_dim}x{ctx.rank}")
        phi = {}
        for idx, value in self.phi.items():
            idx = tuple(idx)
            if len(idx) != 3 or not (0 <= idx[0] < idx[1] < idx[2] < ctx.rank):
                raise ShapeError(f"phi index {idx} must be a strictly increasing triple below {ctx.rank}")
            value = _as_poly(ctx, value)
            if value:
                phi[idx] = value
        for i, row in enumerate(anchor):
            for a, f in enumerate(row):
                _check_base_poly(ctx, f, f"anchor[{i}][{a}]")
        for idx, f in phi.items():
            _check_base_poly(ctx, f, f"phi{idx}")
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "phi", phi)

    def phi_entry(self, a: int, b: int, c: int) -> Superpolynomial:
        """phi_abc for any index order (zero on repeated indices)."""
        sign, idx = _perm_sign((a, b, c))
        if not sign:
            return self.ctx.zero()
        val = self.phi.get(idx, self.ctx.zero())
        return val if sign > 0 else -val

    def __eq__(self, other):
        return (
            isinstance(other, CourantData)
            and self.ctx == other.ctx
            and self.anchor == other.anchor
            and self.phi == other.phi
        )

    def __repr__(self):
        return f"CourantData(ctx={self.ctx!r}, anchor={self.anchor}, phi={self.phi})"


def _perm_sign(idx):
    if len(set(idx)) < len(idx):
        return 0, None
    inv = sum(1 for i, j in itertools.combinations(range(len(idx)), 2) if idx[i] > idx[j])
    return (-1 if inv % 2 else 1), tuple(sorted(idx))


@dataclass(frozen=True)
class SectionExpr:
    """A section of E: weight-1, odd-linear, base-polynomial coefficients."""

    value: Superpolynomial

    def __post_init__(self):
        as_section(self.value)


def as_section(e) -> Superpolynomial:
    """Validate and unwrap a section."""
    if isinstance(e, SectionExpr):
        return e.value
    ctx = e.ctx
    if not isinstance(ctx, ChartContext):
        raise ContextError("sections live on a Darboux chart")
    if not e.is_weight_homogeneous(1):
        raise GradingError(f"a section must have weight 1, got {e}")
    if not e.depends_only_on(ctx.base_names() + [v.name for v in ctx.fiber_vars]):
        raise ShapeError(f"a section cannot involve momenta: {e}")
    return e


def _as_function(f) -> Superpolynomial:
    if not f.is_weight_homogeneous(0):
        raise GradingError(f"a base function must have weight 0, got {f}")
    return f


def _chart_of(theta, ctx):
    if ctx is None:
        ctx = theta.ctx
    if not isinstance(ctx, ChartContext) or theta.ctx != ctx:
        raise ContextError(f"Theta is not over {ctx!r}")
    return ctx


# --------------------------------------------------------------------------
# Theta <-> data


def theta_from_data(d: CourantData) -> Superpolynomial:
    """Theta = xi^a A^i_a p_i - 1/6 phi_abc xi^a xi^b xi^c."""
    ctx = d.ctx
    theta = ctx.zero()
    for i in range(ctx.base_dim):
        for a in range(ctx.rank):
            if d.anchor[i][a]:
                theta = theta + ctx.xi(a) * d.anchor[i][a] * ctx.p(i)
    # -1/6 sum over all orderings = -sum over increasing triples
    for (a, b, c), f in d.phi.items():
        theta = theta - f * ctx.xi(a) * ctx.xi(b) * ctx.xi(c)
    return theta


def data_from_theta(theta: Superpolynomial, ctx: ChartContext = None) -> CourantData:
    """Read A and phi off the coefficients of a cubic Hamiltonian."""
    ctx = _chart_of(theta, ctx)
    if not theta.is_weight_homogeneous(3):
        raise ShapeError(f"Theta must be weight-homogeneous of weight 3, got weights {sorted(theta.weights())}")
    nb = ctx.base_dim
    anchor = [[{} for _ in range(ctx.rank)] for _ in range(nb)]
    phi: Dict[Tuple[int, int, int], dict] = {}
    for (exps, odd), coeff in theta.terms.items():
        base_exps, mom = exps[:nb], exps[nb:]
        if sum(mom) == 1 and len(odd) == 1:
            i = mom.index(1)
            key = (base_exps + (0,) * nb, ())
            anchor[i][odd[0]][key] = coeff
        elif sum(mom) == 0 and len(odd) == 3:
            key = (base_exps + (0,) * nb, ())
            phi.setdefault(odd, {})[key] = -coeff
        else:
            raise ShapeError(f"term of unexpected shape in Theta: exps={exps}, odd={odd}")
    return CourantData(
        ctx,
        tuple(tuple(Superpolynomial(ctx, t) for t in row) for row in anchor),
        {idx: Superpolynomial(ctx, t) for idx, t in phi.items()},
    )


# --------------------------------------------------------------------------
# derived brackets


def structure_obstruction(theta: Superpolynomial, ctx: ChartContext = None) -> Superpolynomial:
    """{Theta, Theta}; zero exactly when Theta defines a Courant algebroid."""
    ctx = _chart_of(theta, ctx)
    if not theta.is_weight_homogeneous(3):
        raise ShapeError("Theta must have weight 3")
    return poisson_bracket(theta, theta, ctx)


def pairing(e1, e2) -> Superpolynomial:
    return poisson_bracket(as_section(e1), as_section(e2))


def anchor_apply(theta: Superpolynomial, e, f: Superpolynomial, ctx: ChartContext = None) -> Superpolynomial:
    """a(e) . f = {{e, Theta}, f}."""
    ctx = _chart_of(theta, ctx)
    e = as_section(e)
    return poisson_bracket(poisson_bracket(e, theta, ctx), _as_function(f), ctx)


def anchor_vector(theta: Superpolynomial, e, ctx: ChartContext = None) -> List[Superpolynomial]:
    """Components a(e)^i = a(e) . q^i."""
    ctx = _chart_of(theta, ctx)
    return [anchor_apply(theta, e, ctx.q(i), ctx) for i in range(ctx.base_dim)]


def _dorfman(theta, e1, e2, ctx):
    return poisson_bracket(poisson_bracket(e1, theta, ctx), e2, ctx)


def dorfman(theta: Superpolynomial, e1, e2, ctx: ChartContext = None) -> SectionExpr:
    """e1 o e2 = {{e1, Theta}, e2}."""
    ctx = _chart_of(theta, ctx)
    return SectionExpr(_dorfman(theta, as_section(e1), as_section(e2), ctx))


def standard_differential(theta: Superpolynomial, F: Superpolynomial, ctx: ChartContext = None) -> Superpolynomial:
    """D F = {Theta, F}."""
    ctx = _chart_of(theta, ctx)
    return poisson_bracket(theta, F, ctx)


# --------------------------------------------------------------------------
# random inputs


def random_base_poly(ctx: ChartContext, rng: random.Random, max_deg: int = 2, coeff_bound: int = 3,
                     density: float = 0.5) -> Superpolynomial:
    """Seeded random polynomial in the base variables with small integer coefficients."""
    nb = ctx.base_dim
    terms = []
    for deg in range(max_deg + 1):
        for combo in itertools.combinations_with_replacement(range(nb), deg):
            if rng.random() < density:
                exps = [0] * ctx.n_even
                for i in combo:
                    exps[i] += 1
                terms.append((rng.randint(-coeff_bound, coeff_bound), exps, ()))
    return from_terms(ctx, terms)


def random_section(ctx: ChartContext, rng: random.Random, max_deg: int = 2, coeff_bound: int = 3) -> Superpolynomial:
    out = ctx.zero()
    for a in range(ctx.rank):
        out = out + random_base_poly(ctx, rng, max_deg, coeff_bound) * ctx.xi(a)
    return out


# --------------------------------------------------------------------------
# axioms


@dataclass
class AxiomCheck:
    name: str
    trials: int = 0
    failures: int = 0
    residual: Optional[Superpolynomial] = None

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, residual: Superpolynomial):
        self.trials += 1
        if residual:
            self.failures += 1
            if self.residual is None:
                self.residual = residual


@dataclass
class AxiomReport:
    checks: Dict[str, AxiomCheck]
    seed: int
    trials: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failed(self) -> List[str]:
        return [name for name, c in self.checks.items() if not c.passed]


AXIOMS = (
    "leibniz",            # (1) e o (e1 o e2) = (e o e1) o e2 + e1 o (e o e2)
    "anchor_morphism",    # (2) a(e1 o e2) = [a(e1), a(e2)]
    "anchor_leibniz",     # (3) e1 o (f e2) = f (e1 o e2) + (a(e1) f) e2
    "symmetric_part",     # (4) <e, e1 o e2 + e2 o e1> = a(e) <e1, e2>
    "invariance",         # (5) a(e) <e1, e2> = <e o e1, e2> + <e1, e o e2>
    "aa_star",            # a a* = 0
    "exact_left",         # e o Df = D<e, Df>
    "exact_right",        # Df o e = 0
    "coanchor_left",      # e o a*nu = a* L_{a(e)} nu
    "coanchor_right",     # a*nu o e = -a* i_{a(e)} d nu
)


def _coanchor(theta, nu, ctx):
    """a*(nu_i dx^i) = nu_i D q^i."""
    out = ctx.zero()
    for i, c in enumerate(nu):
        if c:
            out = out + c * standard_differential(theta, ctx.q(i), ctx)
    return out


def _d(ctx, f, i):
    return left_derivative(ctx.base_vars[i].name, f)


def axiom_report(theta: Superpolynomial, ctx: ChartContext = None, seed: int = 0, trials: int = 3,
                 max_deg: int = 2) -> AxiomReport:
    """Evaluate both sides of every Courant axiom on seeded random inputs.

    Failures are data: the report carries the first nonzero residual of each
    check.  Trial ``t`` draws from its own generator seeded by ``(seed, t)``.
    """
    ctx = _chart_of(theta, ctx)
    checks = {name: AxiomCheck(name) for name in AXIOMS}
    n = ctx.base_dim
    for t in range(trials):
        rng = random.Random(f"{seed}:{t}")
        e, e1, e2 = (random_section(ctx, rng, max_deg) for _ in range(3))
        f, g = (random_base_poly(ctx, rng, max_deg) for _ in range(2))
        nu = [random_base_poly(ctx, rng, max_deg) for _ in range(n)]

        def circ(x, y):
            return _dorfman(theta, x, y, ctx)

        def act(x, h):
            return poisson_bracket(poisson_bracket(x, theta, ctx), h, ctx)

        def D(h):
            return standard_differential(theta, h, ctx)

        def pair(x, y):
            return poisson_bracket(x, y, ctx)

        e1e2 = circ(e1, e2)
        checks["leibniz"].record(circ(e, e1e2) - circ(circ(e, e1), e2) - circ(e1, circ(e, e2)))
        checks["anchor_morphism"].record(act(e1e2, f) - act(e1, act(e2, f)) + act(e2, act(e1, f)))
        checks["anchor_leibniz"].record(circ(e1, f * e2) - f * e1e2 - act(e1, f) * e2)
        checks["symmetric_part"].record(pair(e, e1e2 + circ(e2, e1)) - act(e, pair(e1, e2)))
        checks["invariance"].record(act(e, pair(e1, e2)) - pair(circ(e, e1), e2) - pair(e1, circ(e, e2)))
        Df = D(f)
        checks["aa_star"].record(act(Df, g))
        checks["exact_left"].record(circ(e, Df) - D(pair(e, Df)))
        checks["exact_right"].record(circ(Df, e))

        X = anchor_vector(theta, e, ctx)
        lie = [
            sum((X[j] * _d(ctx, nu[i], j) + nu[j] * _d(ctx, X[j], i) for j in range(n)), ctx.zero())
            for i in range(n)
        ]
        contraction = [
            sum((X[j] * (_d(ctx, nu[i], j) - _d(ctx, nu[j], i)) for j in range(n)), ctx.zero())
            for i in range(n)
        ]
        a_nu = _coanchor(theta, nu, ctx)
        checks["coanchor_left"].record(circ(e, a_nu) - _coanchor(theta, lie, ctx))
        checks["coanchor_right"].record(circ(a_nu, e) + _coanchor(theta, contraction, ctx))
    return AxiomReport(checks, seed, trials)


# --------------------------------------------------------------------------
# Lie-algebra instances


def _structure_constants(C):
    m = len(C)
    C = [[[Fraction(C[a][b][c]) for c in range(m)] for b in range(m)] for a in range(m)]
    return m, C


def lower_structure_constants(C, g):
    """phi_abc = C^d_ab g_dc, with C given as C[a][b][d] = C^d_ab."""
    m, C = _structure_constants(C)
    g = [[Fraction(x) for x in row] for row in g]
    return [[[sum(C[a][b][d] * g[d][c] for d in range(m)) for c in range(m)] for b in range(m)] for a in range(m)]


def cartan_theta(C, g, check_invariance: bool = True) -> Superpolynomial:
    """Point-base Theta for a quadratic Lie algebra: phi(X, Y, Z) = <[X, Y], Z>.

    With ``check_invariance`` the lowered tensor must be totally
    antisymmetric; otherwise it is antisymmetrized.
    """
    ctx = point_chart(g)
    low = lower_structure_constants(C, g)
    m = len(low)
    phi = {}
    for idx in itertools.combinations(range(m), 3):
        alt = Fraction(0)
        for perm in itertools.permutations(idx):
            sign, _ = _perm_sign(perm)
            alt += sign * low[perm[0]][perm[1]][perm[2]]
        value = alt / 6
        if check_invariance:
            for perm in itertools.permutations(idx):
                sign, _ = _perm_sign(perm)
                if low[perm[0]][perm[1]][perm[2]] != sign * low[idx[0]][idx[1]][idx[2]]:
                    raise InvarianceError(f"C^d_ab g_dc is not totally antisymmetric at {perm}")
        if value:
            phi[idx] = ctx.const(value)
    if check_invariance:
        for a, b, c in itertools.product(range(m), repeat=3):
            if len({a, b, c}) < 3 and low[a][b][c]:
                raise InvarianceError(f"C^d_ab g_dc is not totally antisymmetric at {(a, b, c)}")
    return theta_from_data(CourantData(ctx, (), phi))


def brst_theta(C, v, n: int, ctx: ChartContext = None) -> Superpolynomial:
    """Theta = xi^a v^i_a p_i - 1/2 xi^a xi^b C^c_ab theta_c.

    ``v[a][i]`` are base polynomials on ``brst_chart(len(C), n)``; rational
    constants are accepted too.
    """
    m, C = _structure_constants(C)
    ctx = ctx or brst_chart(m, n)
    if ctx != brst_chart(m, n):
        raise ContextError("v must be given over brst_chart(len(C), n)")
    theta = ctx.zero()
    for a in range(m):
        for i in range(n):
            via = _as_poly(ctx, v[a][i])
            if via.ctx != ctx:
                raise ContextError("v must be given over brst_chart(len(C), n)")
            _check_base_poly(ctx, via, f"v[{a}][{i}]")
            if via:
                theta = theta + ctx.xi(a) * via * ctx.p(i)
    for a, b, c in itertools.product(range(m), repeat=3):
        if C[a][b][c]:
            theta = theta - (ctx.xi(a) * ctx.xi(b) * ctx.xi(m + c)).scale(C[a][b][c] / 2)
    return theta


def so3_structure_constants():
    """C^c_ab = epsilon_abc."""
    eps = [[[0] * 3 for _ in range(3)] for _ in range(3)]
    for perm in itertools.permutations(range(3)):
        eps[perm[0]][perm[1]][perm[2]] = _perm_sign(perm)[0]
    return eps


def so3_rotation_action(ctx: ChartContext):
    """v_a = epsilon_aij q^j d/dq^i, a Lie algebra homomorphism [v_a, v_b] = eps_abc v_c."""
    eps = so3_structure_constants()
    return [[sum((ctx.q(j).scale(eps[a][i][j]) for j in range(3)), ctx.zero()) for i in range(3)]
            for a in range(3)]


# --------------------------------------------------------------------------
# twists


def _require_standard(ctx):
    if not is_standard_chart(ctx):
        raise ContextError("twists are defined on the standard chart")


def _forms_only(ctx, f, weight, what):
    names = ctx.base_names() + [f"xi{i + 1}" for i in range(ctx.base_dim)]
    if not f.depends_only_on(names) or not f.is_weight_homogeneous(weight):
        raise ShapeError(f"{what} must be a weight-{weight} polynomial in q and xi only, got {f}")


def twist_by_3form(ctx: ChartContext, phi: Superpolynomial) -> Superpolynomial:
    """Theta_phi = Theta_0 - phi; a Courant algebroid iff d phi = 0."""
    _require_standard(ctx)
    _forms_only(ctx, phi, 3, "phi")
    return theta0(ctx) - phi


def _p_theta_degree(f: Superpolynomial) -> int:
    ctx = f.ctx
    n = ctx.base_dim
    best = 0
    for (exps, odd), _ in f.terms.items():
        best = max(best, sum(exps[n:]) + sum(1 for k in odd if k >= n))
    return best


def twist_by_2form(theta: Superpolynomial, beta: Superpolynomial) -> Superpolynomial:
    """exp(ad_beta) Theta with ad_beta = {beta, .}.

    ad_beta removes one p or theta per application, so the series stops after
    at most (p, theta)-degree + 1 terms.
    """
    ctx = theta.ctx
    _require_standard(ctx)
    _forms_only(ctx, beta, 2, "beta")
    bound = _p_theta_degree(theta) + 1
    total, term = theta, theta
    for k in range(1, bound + 2):
        term = poisson_bracket(beta, term, ctx) / k
        if not term:
            return total
        total = total + term
    raise AssertionError("ad_beta series failed to terminate")  # impossible by grading


# --------------------------------------------------------------------------
# coordinate changes


def _compose_base(f: Superpolynomial, images: Sequence[Superpolynomial], target) -> Superpolynomial:
    """Substitute q^i -> images[i] into a base-only polynomial."""
    src = f.ctx
    nb = len(images)
    out = target.zero()
    for (exps, odd), c in f.terms.items():
        if odd or any(exps[nb:]):
            raise ShapeError(f"expected a base-only polynomial, got {f}")
        term = target.const(c)
        for i in range(nb):
            if exps[i]:
                term = term * images[i] ** exps[i]
        out = out + term
    return out


@dataclass(frozen=True, eq=False)
class TransitionMap:
    """Change of trivialization: q = base_map(q'), xi^a = T^a_{a'}(q') xi^{a'}.

    ``base_map`` and ``frame`` live over ``target`` (primed chart),
    ``base_inverse`` expresses q' as polynomials in q over ``source``.
    """

    source: ChartContext
    target: ChartContext
    base_map: Tuple[Superpolynomial, ...]
    base_inverse: Tuple[Superpolynomial, ...]
    frame: Tuple[Tuple[Superpolynomial, ...], ...]

    def __post_init__(self):
        src, tgt = self.source, self.target
        base_map = tuple(_as_poly(tgt, x) for x in self.base_map)
        base_inverse = tuple(_as_poly(src, x) for x in self.base_inverse)
        frame = tuple(tuple(_as_poly(tgt, x) for x in row) for row in self.frame)
        object.__setattr__(self, "base_map", base_map)
        object.__setattr__(self, "base_inverse", base_inverse)
        object.__setattr__(self, "frame", frame)
        if src.base_dim != tgt.base_dim or src.rank != tgt.rank:
            raise ContextError("source and target charts must have matching dimensions")
        if len(base_map) != src.base_dim or len(base_inverse) != src.base_dim:
            raise ShapeError("base_map and base_inverse need one entry per base variable")
        if len(frame) != src.rank or any(len(row) != src.rank for row in frame):
            raise ShapeError("frame must be rank x rank")
        for f in base_map + tuple(x for row in frame for x in row):
            _check_base_poly(tgt, f, "transition")
        for f in base_inverse:
            _check_base_poly(src, f, "base_inverse")
        # base_map and base_inverse are mutually inverse
        for i in range(src.base_dim):
            if _compose_base(base_inverse[i], base_map, tgt) != tgt.q(i):
                raise IsometryError(f"base_inverse o base_map is not the identity on q'{i + 1}")
            if _compose_base(base_map[i], base_inverse, src) != src.q(i):
                raise IsometryError(f"base_map o base_inverse is not the identity on q{i + 1}")
        # T^t g T = g'
        r = src.rank
        for a1 in range(r):
            for b1 in range(r):
                s = tgt.zero()
                for a in range(r):
                    for b in range(r):
                        if src.metric[a][b]:
                            s = s + (frame[a][a1] * frame[b][b1]).scale(src.metric[a][b])
                if s != tgt.const(tgt.metric[a1][b1]):
                    raise IsometryError(f"T^t g T differs from g' at ({a1}, {b1}): {s}")

    @classmethod
    def identity(cls, ctx: ChartContext):
        r = ctx.rank
        return cls(ctx, ctx, tuple(ctx.q(i) for i in range(ctx.base_dim)),
                   tuple(ctx.q(i) for i in range(ctx.base_dim)),
                   tuple(tuple(ctx.const(int(a == b)) for b in range(r)) for a in range(r)))

    def inverse_jacobian(self) -> List[List[Superpolynomial]]:
        """M[j'][i] = (d q'^{j'} / d q^i) evaluated at q = base_map(q')."""
        src, tgt = self.source, self.target
        return [[_compose_base(_d(src, self.base_inverse[j], i), self.base_map, tgt)
                 for i in range(src.base_dim)] for j in range(src.base_dim)]

    def frame_derivative(self, M=None):
        """dT^a_{a'}/dq^i expressed through q' by the chain rule; indexed [i][a][a']."""
        tgt = self.target
        M = M or self.inverse_jacobian()
        n, r = tgt.base_dim, tgt.rank
        return [[[sum((M[j][i] * _d(tgt, self.frame[a][a1], j) for j in range(n)), tgt.zero())
                  for a1 in range(r)] for a in range(r)] for i in range(n)]

    def images(self) -> Dict[str, Superpolynomial]:
        """Images of the source generators in the target chart.

        p_i -> (d q'^{j'}/d q^i) p_{j'} - 1/2 xi^{a'} (dT^a_{a'}/dx^i) g_ab T^b_{b'} xi^{b'}
        """
        src, tgt = self.source, self.target
        n, r = src.base_dim, src.rank
        M = self.inverse_jacobian()
        dT = self.frame_derivative(M)
        out = {}
        for i in range(n):
            out[src.base_vars[i].name] = self.base_map[i]
        for a in range(r):
            out[src.fiber_vars[a].name] = sum((self.frame[a][a1] * tgt.xi(a1) for a1 in range(r)), tgt.zero())
        for i in range(n):
            img = sum((M[j][i] * tgt.p(j) for j in range(n)), tgt.zero())
            for a1 in range(r):
                for b1 in range(r):
                    coeff = tgt.zero()
                    for a in range(r):
                        if not dT[i][a][a1]:
                            continue
                        for b in range(r):
                            if src.metric[a][b]:
                                coeff = coeff + (dT[i][a][a1] * self.frame[b][b1]).scale(src.metric[a][b])
                    if coeff:
                        img = img - (tgt.xi(a1) * coeff * tgt.xi(b1)) / 2
            out[src.momenta[i].name] = img
        return out

    def apply(self, f: Superpolynomial) -> Superpolynomial:
        if f.ctx != self.source:
            raise ContextError("polynomial is not over the transition's source chart")
        return substitute(f, self.images())

    def bracket_failures(self) -> List[Tuple[str, str]]:
        """Generator pairs whose bracket is not preserved by the substitution."""
        src = self.source
        imgs = self.images()
        table = bracket_table(src)
        bad = []
        for u in src.variables:
            for w in src.variables:
                lhs = poisson_bracket(imgs[u.name], imgs[w.name], self.target)
                if lhs != self.target.const(table[(u.name, w.name)]):
                    bad.append((u.name, w.name))
        return bad


def transform(d: CourantData, t: TransitionMap) -> CourantData:
    """Courant data in the primed chart, by explicit transformation rules.

    A'^{i'}_{a'} = T^a_{a'} A^i_a M^{i'}_i and phi' = phi(T, T, T) plus the
    contribution of the affine p-term; everything evaluated at q(q').
    """
    if d.ctx != t.source:
        raise ContextError("data is not over the transition's source chart")
    src, tgt = t.source, t.target
    n, r = src.base_dim, src.rank
    M = t.inverse_jacobian()
    dT = t.frame_derivative(M)
    A = [[_compose_base(d.anchor[i][a], t.base_map, tgt) for a in range(r)] for i in range(n)]
    T = t.frame
    anchor = [[sum((T[a][a1] * A[i][a] * M[j][i] for a in range(r) for i in range(n)), tgt.zero())
               for a1 in range(r)] for j in range(n)]

    phi_full = {}
    for idx, f in d.phi.items():
        phi_full[idx] = _compose_base(f, t.base_map, tgt)

    def phi_src(a, b, c):
        sign, idx = _perm_sign((a, b, c))
        if not sign or idx not in phi_full:
            return None
        return phi_full[idx] if sign > 0 else -phi_full[idx]

    # affine coefficient c_{a'c'e'} of xi^{a'} xi^{c'} xi^{e'}
    TA = [[sum((T[a][a1] * A[i][a] for a in range(r)), tgt.zero()) for a1 in range(r)] for i in range(n)]
    gT = [[sum((T[b][b1].scale(src.metric[d_][b]) for b in range(r) if src.metric[d_][b]), tgt.zero())
           for b1 in range(r)] for d_ in range(r)]
    affine = {}
    for a1, c1, e1 in itertools.product(range(r), repeat=3):
        s = tgt.zero()
        for i in range(n):
            if not TA[i][a1]:
                continue
            for d_ in range(r):
                if dT[i][d_][c1] and gT[d_][e1]:
                    s = s + TA[i][a1] * dT[i][d_][c1] * gT[d_][e1]
        if s:
            affine[(a1, c1, e1)] = s / 2

    phi = {}
    for idx in itertools.combinations(range(r), 3):
        total = tgt.zero()
        for a, b, c in itertools.product(range(r), repeat=3):
            ph = phi_src(a, b, c)
            if ph is not None:
                coeff = T[a][idx[0]] * T[b][idx[1]] * T[c][idx[2]]
                if coeff:
                    total = total + ph * coeff
        for perm in itertools.permutations(idx):
            if perm in affine:
                total = total + affine[perm].scale(_perm_sign(perm)[0])
        if total:
            phi[idx] = total
    return CourantData(tgt, tuple(tuple(row) for row in anchor), phi)


# --------------------------------------------------------------------------
# Severa curvature of the Alekseev algebroid


def _check_ad_invariant(C, K, m):
    for x, y, z in itertools.product(range(m), repeat=3):
        lhs = sum(C[x][y][d] * K[d][z] for d in range(m))
        rhs = sum(C[x][z][d] * K[y][d] for d in range(m))
        if lhs + rhs != 0:
            raise InvarianceError(f"K is not ad-invariant: K([e{x},e{y}],e{z}) + K(e{y},[e{x},e{z}]) != 0")


def severa_curvature(C, K):
    """Curvature phi(u, v, w) = <sigma(u) o sigma(v), sigma(w)> at the identity.

    E = g + g over G with pairing K(X, X') - K(Y, Y'), anchor X^l - Y^r,
    constant-section bracket ([X, X'], [Y, Y']) and splitting
    sigma(Z) = 1/2 (Z, -Ad_g Z).  Sections are handled through their value
    and first derivatives at the identity; d/dV (Ad_g Z)|_e = [V, Z].
    Returns phi[a][b][c].
    """
    m, C = _structure_constants(C)
    K = [[Fraction(x) for x in row] for row in K]
    if any(K[a][b] != K[b][a] for a in range(m) for b in range(m)):
        raise InvarianceError("K is not symmetric")
    _check_ad_invariant(C, K, m)
    dim = 2 * m

    # frame: alpha < m is (e_alpha, 0); alpha >= m is (0, e_{alpha - m})
    def frame_bracket(alpha, beta):
        out = [Fraction(0)] * dim
        if (alpha < m) == (beta < m):
            off = 0 if alpha < m else m
            for c in range(m):
                out[off + c] = C[alpha - off][beta - off][c]
        return out

    G = [[Fraction(0)] * dim for _ in range(dim)]
    for a in range(m):
        for b in range(m):
            G[a][b] = K[a][b]
            G[m + a][m + b] = -K[a][b]
    anchor = [[Fraction(int(a == c)) if alpha < m else -Fraction(int(a == c)) for c in range(m)]
              for alpha in range(dim) for a in [alpha % m]]

    def sigma(z):
        """(value, derivative[alpha][direction]) of sigma(e_z) at the identity."""
        value = [Fraction(0)] * dim
        value[z] = Fraction(1, 2)
        value[m + z] = Fraction(-1, 2)
        deriv = [[Fraction(0)] * m for _ in range(dim)]
        for v in range(m):
            for c in range(m):
                deriv[m + c][v] = -C[v][z][c] / 2
        return value, deriv

    def vec_anchor(value):
        return [sum(value[al] * anchor[al][c] for al in range(dim)) for c in range(m)]

    def along(vec, deriv, alpha):
        return sum(vec[v] * deriv[alpha][v] for v in range(m))

    phi = [[[Fraction(0)] * m for _ in range(m)] for _ in range(m)]
    for u, v, w in itertools.product(range(m), repeat=3):
        s, ds = sigma(u)
        t, dt = sigma(v)
        r, dr = sigma(w)
        a_s, a_t, a_r = vec_anchor(s), vec_anchor(t), vec_anchor(r)
        circ = [Fraction(0)] * dim
        for al in range(dim):
            for be in range(dim):
                if s[al] and t[be]:
                    fb = frame_bracket(al, be)
                    for g_ in range(dim):
                        circ[g_] += s[al] * t[be] * fb[g_]
        for be in range(dim):
            circ[be] += along(a_s, dt, be)
        for al in range(dim):
            circ[al] -= along(a_t, ds, al)
        value = sum(circ[al] * G[al][be] * r[be] for al in range(dim) for be in range(dim))
        # <e_alpha, e_beta> t^beta D s^alpha, paired with r: <D h, r> = a(r) . h
        value += sum(G[al][be] * t[be] * along(a_r, ds, al) for al in range(dim) for be in range(dim))
        phi[u][v][w] = value
    return phi
