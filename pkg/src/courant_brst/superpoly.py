"""Exact sparse polynomials in commuting and anticommuting graded variables.

A term is stored as a key ``(even_exponents, odd_indices)`` mapped to a
nonzero :class:`fractions.Fraction`:

* ``even_exponents`` is a tuple aligned with ``ctx.even_vars``;
* ``odd_indices`` is a strictly increasing tuple of positions in
  ``ctx.odd_vars``.

The monomial a key stands for is the product of the even powers followed by
the odd generators in increasing index order.  Every reordering sign is
absorbed into the coefficient when a term is built, so this is the only place
Koszul signs are decided.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from .errors import ContextError, GradingError

EVEN, ODD = 0, 1

Key = Tuple[Tuple[int, ...], Tuple[int, ...]]
Terms = Dict[Key, Fraction]


@dataclass(frozen=True)
class GradedVar:
    name: str
    parity: int
    weight: int
    bidegree: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if not self.name.isidentifier():
            raise ValueError(f"variable name {self.name!r} is not an identifier")
        if self.weight < 0:
            raise GradingError(f"{self.name}: negative weight {self.weight}")
        if self.parity not in (EVEN, ODD) or self.parity != self.weight % 2:
            raise GradingError(f"{self.name}: parity must equal weight mod 2")
        if self.bidegree is not None and sum(self.bidegree) != self.weight:
            raise GradingError(f"{self.name}: bidegree {self.bidegree} does not sum to weight")


class Context:
    """An ordered roster of even and odd variables.

    Subclasses attach a bracket (see :mod:`courant_brst.brackets`); the
    polynomial arithmetic itself only needs the roster.
    """

    def __init__(self, even_vars: Sequence[GradedVar], odd_vars: Sequence[GradedVar]):
        self.even_vars = tuple(even_vars)
        self.odd_vars = tuple(odd_vars)
        if any(v.parity != EVEN for v in self.even_vars):
            raise GradingError("even roster contains an odd variable")
        if any(v.parity != ODD for v in self.odd_vars):
            raise GradingError("odd roster contains an even variable")
        self._index: Dict[str, Tuple[int, int]] = {}
        for i, v in enumerate(self.even_vars):
            self._register(v.name, (EVEN, i))
        for i, v in enumerate(self.odd_vars):
            self._register(v.name, (ODD, i))
        self._even_weights = tuple(v.weight for v in self.even_vars)
        self._odd_weights = tuple(v.weight for v in self.odd_vars)

    def _register(self, name, slot):
        if name in self._index:
            raise ContextError(f"duplicate variable name {name!r}")
        self._index[name] = slot

    # identity ---------------------------------------------------------------
    def _key(self):
        return (type(self).__name__, self.even_vars, self.odd_vars)

    def __eq__(self, other):
        return isinstance(other, Context) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        names = [v.name for v in self.even_vars + self.odd_vars]
        return f"{type(self).__name__}({', '.join(names)})"

    # lookup -----------------------------------------------------------------
    @property
    def n_even(self) -> int:
        return len(self.even_vars)

    @property
    def n_odd(self) -> int:
        return len(self.odd_vars)

    @property
    def variables(self) -> Tuple[GradedVar, ...]:
        return self.even_vars + self.odd_vars

    def slot(self, var) -> Tuple[int, int]:
        """Return ``(parity, position)`` for a variable or variable name."""
        name = var.name if isinstance(var, GradedVar) else var
        try:
            slot = self._index[name]
        except KeyError:
            raise ContextError(f"unknown variable {name!r} in {self!r}") from None
        if isinstance(var, GradedVar):
            roster = self.even_vars if slot[0] == EVEN else self.odd_vars
            if roster[slot[1]] != var:
                raise ContextError(f"variable {var!r} differs from the one declared in {self!r}")
        return slot

    def lookup(self, name: str) -> GradedVar:
        parity, i = self.slot(name)
        return (self.even_vars if parity == EVEN else self.odd_vars)[i]

    def var(self, name: str) -> "Superpolynomial":
        parity, i = self.slot(name)
        if parity == EVEN:
            exps = [0] * self.n_even
            exps[i] = 1
            return Superpolynomial(self, {(tuple(exps), ()): Fraction(1)})
        return Superpolynomial(self, {(self.zero_exps, (i,)): Fraction(1)})

    def gens(self) -> Tuple["Superpolynomial", ...]:
        return tuple(self.var(v.name) for v in self.variables)

    def const(self, c) -> "Superpolynomial":
        c = Fraction(c)
        return Superpolynomial(self, {(self.zero_exps, ()): c} if c else {})

    def zero(self) -> "Superpolynomial":
        return Superpolynomial(self, {})

    def one(self) -> "Superpolynomial":
        return self.const(1)

    @property
    def zero_exps(self) -> Tuple[int, ...]:
        return (0,) * self.n_even

    def key_weight(self, key: Key) -> int:
        exps, odd = key
        return sum(e * w for e, w in zip(exps, self._even_weights)) + sum(
            self._odd_weights[i] for i in odd
        )

    def monomial(self, even: Mapping[str, int] = None, odd: Sequence[str] = (), coeff=1):
        """Build ``coeff * prod(even) * odd[0] * odd[1] * ...`` with the sign of reordering."""
        exps = [0] * self.n_even
        for name, e in (even or {}).items():
            parity, i = self.slot(name)
            if parity != EVEN:
                raise ContextError(f"{name!r} is odd; pass it in `odd`")
            exps[i] += e
        idx = []
        for name in odd:
            parity, i = self.slot(name)
            if parity != ODD:
                raise ContextError(f"{name!r} is even; pass it in `even`")
            idx.append(i)
        return from_terms(self, [(coeff, tuple(exps), idx)])


def sort_odd(seq: Sequence[int]) -> Tuple[int, Optional[Tuple[int, ...]]]:
    """Sort odd indices by adjacent swaps; return (sign, sorted) or (0, None) on a repeat."""
    seq = list(seq)
    inversions = 0
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                inversions += 1
            elif seq[i] == seq[j]:
                return 0, None
    return (-1 if inversions % 2 else 1), tuple(sorted(seq))


def from_terms(ctx: Context, terms: Iterable[Tuple[object, Sequence[int], Sequence[int]]]):
    """Canonicalize raw ``(coeff, even_exponents, odd_sequence)`` triples."""
    out: Terms = {}
    for coeff, exps, odd in terms:
        exps = tuple(exps)
        if len(exps) != ctx.n_even or any(e < 0 for e in exps):
            raise ContextError(f"exponent vector {exps} does not fit {ctx!r}")
        if any(not 0 <= i < ctx.n_odd for i in odd):
            raise ContextError(f"odd index out of range in {tuple(odd)} for {ctx!r}")
        sign, odd_sorted = sort_odd(odd)
        if not sign:
            continue
        key = (exps, odd_sorted)
        out[key] = out.get(key, Fraction(0)) + sign * Fraction(coeff)
    return Superpolynomial(ctx, out)


def _merge_sign(a: Tuple[int, ...], b: Tuple[int, ...]):
    """Sign of reordering the concatenation a+b (both sorted) into sorted order."""
    inversions = 0
    j = 0
    nb = len(b)
    for x in a:
        while j < nb and b[j] < x:
            j += 1
        if j < nb and b[j] == x:
            return 0, None
        inversions += j
    return (-1 if inversions % 2 else 1), tuple(sorted(a + b))


class Superpolynomial:
    """Immutable canonical superpolynomial over a :class:`Context`."""

    __slots__ = ("ctx", "_terms", "_hash")

    def __init__(self, ctx: Context, terms: Mapping[Key, Fraction]):
        self.ctx = ctx
        self._terms = {k: Fraction(c) for k, c in terms.items() if c}
        self._hash = None

    # access -----------------------------------------------------------------
    @property
    def terms(self) -> Mapping[Key, Fraction]:
        return self._terms

    def items(self):
        """Terms in the canonical order: (weight, even exponents, odd indices)."""
        return sorted(self._terms.items(), key=lambda kv: (self.ctx.key_weight(kv[0]), kv[0]))

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def constant_term(self) -> Fraction:
        return self._terms.get((self.ctx.zero_exps, ()), Fraction(0))

    def weights(self):
        return {self.ctx.key_weight(k) for k in self._terms}

    @property
    def weight(self) -> Optional[int]:
        """The weight when homogeneous (zero counts as homogeneous of any weight: None)."""
        ws = self.weights()
        if len(ws) > 1:
            raise GradingError(f"{self!r} is not weight-homogeneous")
        return ws.pop() if ws else None

    @property
    def parity(self) -> int:
        ps = {len(odd) % 2 for _, odd in self._terms}
        if len(ps) > 1:
            raise GradingError(f"{self!r} is not parity-homogeneous")
        return ps.pop() if ps else EVEN

    def is_weight_homogeneous(self, w: Optional[int] = None) -> bool:
        ws = self.weights()
        if w is None:
            return len(ws) <= 1
        return ws <= {w}

    def depends_only_on(self, names) -> bool:
        allowed = set(names)
        for exps, odd in self._terms:
            if any(e and self.ctx.even_vars[i].name not in allowed for i, e in enumerate(exps)):
                return False
            if any(self.ctx.odd_vars[i].name not in allowed for i in odd):
                return False
        return True

    def coefficient(self, key: Key) -> Fraction:
        return self._terms.get(key, Fraction(0))

    # arithmetic -------------------------------------------------------------
    def _check(self, other):
        if isinstance(other, Superpolynomial):
            if other.ctx != self.ctx:
                raise ContextError(f"context mismatch: {self.ctx!r} vs {other.ctx!r}")
            return other
        if isinstance(other, (int, Fraction)):
            return self.ctx.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0) + c
        return Superpolynomial(self.ctx, out)

    __radd__ = __add__

    def __neg__(self):
        return Superpolynomial(self.ctx, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Superpolynomial":
        c = Fraction(c)
        return Superpolynomial(self.ctx, {k: c * v for k, v in self._terms.items()} if c else {})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._check(other)
        if other is NotImplemented:
            return other
        return multiply(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, c):
        return self.scale(Fraction(1) / Fraction(c))

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        out = self.ctx.one()
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.ctx.const(other)
        if not isinstance(other, Superpolynomial):
            return NotImplemented
        return self.ctx == other.ctx and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ctx, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self):
        return f"Superpolynomial({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for (exps, odd), c in self.items():
            factors = []
            for i, e in enumerate(exps):
                if e:
                    name = self.ctx.even_vars[i].name
                    factors.append(name if e == 1 else f"{name}^{e}")
            factors.extend(self.ctx.odd_vars[i].name for i in odd)
            if not factors:
                body = str(abs(c))
            elif abs(c) == 1:
                body = "*".join(factors)
            else:
                body = f"{abs(c)}*" + "*".join(factors)
            parts.append(("- " if c < 0 else "+ ") + body)
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]


def _same_ctx(f: Superpolynomial, g: Superpolynomial):
    if f.ctx != g.ctx:
        raise ContextError(f"context mismatch: {f.ctx!r} vs {g.ctx!r}")


def multiply(f: Superpolynomial, g: Superpolynomial) -> Superpolynomial:
    """Supercommutative product; terms with a repeated odd factor vanish."""
    _same_ctx(f, g)
    out: Terms = {}
    for (e1, o1), c1 in f.terms.items():
        for (e2, o2), c2 in g.terms.items():
            sign, odd = _merge_sign(o1, o2)
            if not sign:
                continue
            key = (tuple(a + b for a, b in zip(e1, e2)), odd)
            out[key] = out.get(key, 0) + sign * c1 * c2
    return Superpolynomial(f.ctx, out)


def _even_derivative(f: Superpolynomial, i: int) -> Superpolynomial:
    out: Terms = {}
    for (exps, odd), c in f.terms.items():
        e = exps[i]
        if e:
            new = exps[:i] + (e - 1,) + exps[i + 1:]
            out[(new, odd)] = out.get((new, odd), 0) + e * c
    return Superpolynomial(f.ctx, out)


def _odd_derivative(f: Superpolynomial, k: int, right: bool) -> Superpolynomial:
    out: Terms = {}
    for (exps, odd), c in f.terms.items():
        if k not in odd:
            continue
        pos = odd.index(k)
        moves = len(odd) - 1 - pos if right else pos
        rest = odd[:pos] + odd[pos + 1:]
        out[(exps, rest)] = out.get((exps, rest), 0) + (-c if moves % 2 else c)
    return Superpolynomial(f.ctx, out)


def left_derivative(v, f: Superpolynomial) -> Superpolynomial:
    """d/dv acting from the left: odd v is moved to the front (Koszul sign) and deleted."""
    parity, i = f.ctx.slot(v)
    if parity == EVEN:
        return _even_derivative(f, i)
    return _odd_derivative(f, i, right=False)


def right_derivative(v, f: Superpolynomial) -> Superpolynomial:
    """d/dv acting from the right: odd v is moved to the back and deleted."""
    parity, i = f.ctx.slot(v)
    if parity == EVEN:
        return _even_derivative(f, i)
    return _odd_derivative(f, i, right=True)


def substitute(f: Superpolynomial, images: Mapping[str, Superpolynomial]) -> Superpolynomial:
    """Apply the algebra homomorphism sending each variable to its image.

    Variables missing from ``images`` are mapped to the variable of the same
    name in the target context, which must then exist there.  All images must
    share one target context; each must match its variable's parity and weight.
    """
    ctx = f.ctx
    target = None
    for img in images.values():
        if target is None:
            target = img.ctx
        elif img.ctx != target:
            raise ContextError("substitution images live in different contexts")
    target = target or ctx
    for name in images:
        ctx.slot(name)
    even_img, odd_img = [], []
    for v in ctx.variables:
        img = images.get(v.name)
        if img is None:
            img = target.var(v.name)
            if target.lookup(v.name) != v:
                raise GradingError(f"{v.name}: implicit image has a different grading")
        if not img.is_weight_homogeneous(v.weight):
            raise GradingError(f"image of {v.name} is not of weight {v.weight}: {img}")
        if img and img.parity != v.parity:
            raise GradingError(f"image of {v.name} has the wrong parity: {img}")
        (even_img if v.parity == EVEN else odd_img).append(img)

    powers: Dict[Tuple[int, int], Superpolynomial] = {}

    def power(i, e):
        if (i, e) not in powers:
            powers[(i, e)] = target.one() if e == 0 else power(i, e - 1) * even_img[i]
        return powers[(i, e)]

    result = target.zero()
    for (exps, odd), c in f.terms.items():
        term = target.const(c)
        for i, e in enumerate(exps):
            if e:
                term = term * power(i, e)
        for k in odd:
            term = term * odd_img[k]
        result = result + term
    return result


def weight_decompose(f: Superpolynomial) -> Dict[int, Superpolynomial]:
    """Split f into weight-homogeneous components."""
    parts: Dict[int, Terms] = {}
    for key, c in f.terms.items():
        parts.setdefault(f.ctx.key_weight(key), {})[key] = c
    return {w: Superpolynomial(f.ctx, t) for w, t in sorted(parts.items())}


def euler(f: Superpolynomial) -> Superpolynomial:
    """The Euler derivation sum_x w(x) x d/dx, applied through the derivatives."""
    out = f.ctx.zero()
    for v in f.ctx.variables:
        if v.weight:
            out = out + (f.ctx.var(v.name) * left_derivative(v.name, f)).scale(v.weight)
    return out


def _fraction_matrix(rows) -> Tuple[Tuple[Fraction, ...], ...]:
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


def invert_matrix(m) -> Tuple[Tuple[Fraction, ...], ...]:
    """Exact Gauss-Jordan inverse; raises ZeroDivisionError on a singular matrix."""
    n = len(m)
    a = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(_fraction_matrix(m))]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise ZeroDivisionError("singular matrix")
        a[col], a[pivot] = a[pivot], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                factor = a[r][col]
                a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
    return tuple(tuple(row[n:]) for row in a)


class ChartContext(Context):
    """Affine Darboux chart (q^i, xi^a, p_i) of a degree-2 symplectic N-manifold.

    ``metric`` is the constant fiber pairing g_ab; the induced bracket has
    {xi^a, xi^b} = g^{ab} (inverse matrix) and {p_i, q^j} = delta_i^j.
    """

    def __init__(self, base_vars, fiber_vars, momenta, metric):
        base_vars, fiber_vars, momenta = tuple(base_vars), tuple(fiber_vars), tuple(momenta)
        if len(momenta) != len(base_vars):
            raise ContextError("need exactly one momentum per base variable")
        for v in base_vars:
            if v.weight != 0:
                raise GradingError(f"base variable {v.name} must have weight 0")
        for v in fiber_vars:
            if v.weight != 1:
                raise GradingError(f"fiber variable {v.name} must have weight 1")
        for v in momenta:
            if v.weight != 2:
                raise GradingError(f"momentum {v.name} must have weight 2")
        super().__init__(base_vars + momenta, fiber_vars)
        self.base_vars, self.fiber_vars, self.momenta = base_vars, fiber_vars, momenta
        self.metric = _fraction_matrix(metric)
        r = len(fiber_vars)
        if len(self.metric) != r or any(len(row) != r for row in self.metric):
            raise ContextError(f"metric must be {r}x{r}")
        if any(self.metric[a][b] != self.metric[b][a] for a in range(r) for b in range(r)):
            raise ContextError("metric is not symmetric")
        try:
            self.inverse_metric = invert_matrix(self.metric) if r else ()
        except ZeroDivisionError:
            raise ContextError("metric is degenerate (zero determinant)") from None

    @classmethod
    def create(cls, base_dim: int, metric, *, base="q", fiber="xi", momentum="p",
               fiber_names=None, bidegrees=None):
        """Chart with default names q1.., xi1.., p1..; ``bidegrees`` maps a name to (k, l)."""
        bidegrees = bidegrees or {}
        r = len(metric)
        fiber_names = fiber_names or [f"{fiber}{a + 1}" for a in range(r)]

        def mk(name, parity, weight):
            return GradedVar(name, parity, weight, bidegrees.get(name))

        return cls(
            [mk(f"{base}{i + 1}", EVEN, 0) for i in range(base_dim)],
            [mk(name, ODD, 1) for name in fiber_names],
            [mk(f"{momentum}{i + 1}", EVEN, 2) for i in range(base_dim)],
            metric,
        )

    def _key(self):
        return super()._key() + (self.metric,)

    @property
    def base_dim(self) -> int:
        return len(self.base_vars)

    @property
    def rank(self) -> int:
        return len(self.fiber_vars)

    def q(self, i: int) -> Superpolynomial:
        return self.var(self.base_vars[i].name)

    def xi(self, a: int) -> Superpolynomial:
        return self.var(self.fiber_vars[a].name)

    def p(self, i: int) -> Superpolynomial:
        return self.var(self.momenta[i].name)

    def frame_section(self, a: int) -> Superpolynomial:
        """e_a = g_ab xi^b, the section dual to xi^a under the pairing."""
        out = self.zero()
        for b in range(self.rank):
            if self.metric[a][b]:
                out = out + self.xi(b).scale(self.metric[a][b])
        return out

    def base_names(self):
        return [v.name for v in self.base_vars]
