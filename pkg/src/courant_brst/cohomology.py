"""Cohomology of (A, D = {Theta, .}) on finite monomial windows.

A window is the span of monomials of a fixed weight whose base (weight-0)
degree is at most N.  Because D may lower the base degree (d/dq), the image of
the full complex meets the window in more than the image of the window, so the
incoming differential is taken from a wider window of degree N + slack and
intersected with the target window.  slack=0 gives the naive truncation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Dict, List, Optional, Sequence, Tuple

from .brackets import poisson_bracket
from .errors import ContextError, NotClosedError, ShapeError, TruncationError
from .superpoly import ChartContext, Superpolynomial

Key = Tuple[Tuple[int, ...], Tuple[int, ...]]


# ---------------------------------------------------------------------------
# bases


def _weight0_slots(ctx):
    return [j for j, v in enumerate(ctx.even_vars) if v.weight == 0]


def _compositions(total, parts):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_keys(ctx, weight: int, max_qdeg: int) -> List[Key]:
    if weight < 0:
        raise ShapeError("weight must be non-negative")
    q_slots = _weight0_slots(ctx)
    heavy = [j for j, v in enumerate(ctx.even_vars) if v.weight > 0]
    odd_w = [v.weight for v in ctx.odd_vars]
    q_monos = [m for d in range(max_qdeg + 1) for m in _compositions(d, len(q_slots))]
    keys = []
    for n_heavy in range(weight + 1):
        heavy_monos = []
        for m in itertools.product(*(range(weight // ctx.even_vars[j].weight + 1) for j in heavy)):
            if sum(m) == n_heavy:
                heavy_monos.append(m)
        for size in range(len(odd_w) + 1):
            for odd in itertools.combinations(range(len(odd_w)), size):
                ow = sum(odd_w[k] for k in odd)
                for hm in sorted(heavy_monos, reverse=True):
                    hw = sum(e * ctx.even_vars[j].weight for e, j in zip(hm, heavy))
                    if ow + hw != weight:
                        continue
                    for qm in q_monos:
                        exps = [0] * ctx.n_even
                        for j, e in zip(q_slots, qm):
                            exps[j] = e
                        for j, e in zip(heavy, hm):
                            exps[j] = e
                        keys.append((tuple(exps), odd))
    return keys


def enumerate_basis(ctx, weight: int, max_qdeg: int) -> List[Superpolynomial]:
    """Monomials of the given weight with base degree <= max_qdeg, in a fixed order."""
    return [Superpolynomial(ctx, {k: Fraction(1)}) for k in enumerate_keys(ctx, weight, max_qdeg)]


def _qdeg(ctx, key):
    return sum(key[0][j] for j in _weight0_slots(ctx))


# ---------------------------------------------------------------------------
# exact sparse linear algebra


def _integer_row(row: Dict[int, Fraction]) -> Dict[int, int]:
    den = lcm(*(c.denominator for c in row.values())) if row else 1
    out = {j: int(c * den) for j, c in row.items()}
    g = 0
    for v in out.values():
        g = gcd(g, v)
    return {j: v // g for j, v in out.items()} if g > 1 else out


def rank(rows: Sequence[Dict[int, Fraction]]) -> int:
    """Rank of a sparse rational matrix by fraction-free elimination.

    Rows are scaled to primitive integer vectors; each new row is reduced
    against the pivots found so far by integer cross-multiplication and gcd
    normalization, so entries stay integral and small.
    """
    pivots: Dict[int, Dict[int, int]] = {}
    for row in rows:
        r = _integer_row({j: Fraction(c) for j, c in row.items() if c})
        while r:
            col = min(r)
            piv = pivots.get(col)
            if piv is None:
                pivots[col] = r
                break
            a, b = piv[col], r[col]
            new = {}
            for j in set(r) | set(piv):
                v = a * r.get(j, 0) - b * piv.get(j, 0)
                if v:
                    new[j] = v
            g = 0
            for v in new.values():
                g = gcd(g, v)
            r = {j: v // g for j, v in new.items()} if g > 1 else new
    return len(pivots)


def solve(columns: Sequence[Dict[int, Fraction]], target: Dict[int, Fraction]) -> Optional[List[Fraction]]:
    """Some x with sum_c x_c columns[c] = target, or None."""
    # Gauss-Jordan over Fractions on the transposed system; sizes here are small
    rows = sorted(set().union(*(set(c) for c in columns), set(target))) if columns else sorted(target)
    idx = {r: i for i, r in enumerate(rows)}
    n = len(columns)
    mat = [[Fraction(0)] * (n + 1) for _ in rows]
    for c, col in enumerate(columns):
        for r, v in col.items():
            mat[idx[r]][c] = Fraction(v)
    for r, v in target.items():
        mat[idx[r]][n] = Fraction(v)
    pivot_cols = []
    row = 0
    for c in range(n):
        p = next((i for i in range(row, len(mat)) if mat[i][c]), None)
        if p is None:
            continue
        mat[row], mat[p] = mat[p], mat[row]
        inv = 1 / mat[row][c]
        mat[row] = [v * inv for v in mat[row]]
        for i in range(len(mat)):
            if i != row and mat[i][c]:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[row])]
        pivot_cols.append(c)
        row += 1
    if any(mat[i][n] for i in range(row, len(mat))):
        return None
    x = [Fraction(0)] * n
    for i, c in enumerate(pivot_cols):
        x[c] = mat[i][n]
    return x


# ---------------------------------------------------------------------------
# blocks


@dataclass
class CochainBlock:
    """Matrix of D from the weight-w window to the weight-(w+1) window.

    ``columns[c]`` maps target-basis indices to the coefficients of D(basis[c]).
    """

    weight: int
    max_qdeg: int
    basis: List[Key]
    target_basis: List[Key]
    columns: List[Dict[int, Fraction]]

    def dense(self) -> List[List[Fraction]]:
        m = [[Fraction(0)] * len(self.basis) for _ in self.target_basis]
        for c, col in enumerate(self.columns):
            for r, v in col.items():
                m[r][c] = v
        return m

    @property
    def rank(self) -> int:
        return rank(self.columns)


def _check_theta(theta, ctx):
    if ctx is None:
        ctx = theta.ctx
    if theta.ctx != ctx or not isinstance(ctx, ChartContext):
        raise ContextError(f"Theta is not over {ctx!r}")
    if not theta.is_weight_homogeneous(3):
        raise ShapeError("Theta must have weight 3")
    return ctx


def differential_matrix(theta: Superpolynomial, ctx: ChartContext = None, weight: int = 0,
                        max_qdeg: int = 0) -> CochainBlock:
    """D restricted to the window; refuses if D leaves the target window."""
    ctx = _check_theta(theta, ctx)
    basis = enumerate_keys(ctx, weight, max_qdeg)
    target = enumerate_keys(ctx, weight + 1, max_qdeg)
    index = {k: i for i, k in enumerate(target)}
    columns = []
    for key in basis:
        img = poisson_bracket(theta, Superpolynomial(ctx, {key: Fraction(1)}), ctx)
        col = {}
        for k, c in img.terms.items():
            if k not in index:
                raise TruncationError(
                    f"D of basis element {Superpolynomial(ctx, {key: 1})} leaves the window (max_qdeg={max_qdeg})",
                    Superpolynomial(ctx, {key: Fraction(1)}),
                )
            col[index[k]] = c
        columns.append(col)
    return CochainBlock(weight, max_qdeg, basis, target, columns)


def composition_is_zero(first: CochainBlock, second: CochainBlock) -> bool:
    """second . first == 0 exactly (needs matching windows)."""
    if first.target_basis != second.basis:
        raise ShapeError("blocks are not consecutive")
    for col in first.columns:
        acc: Dict[int, Fraction] = {}
        for j, v in col.items():
            for r, w in second.columns[j].items():
                acc[r] = acc.get(r, 0) + v * w
        if any(acc.values()):
            return False
    return True


def _require_structure(theta, ctx):
    obstruction = poisson_bracket(theta, theta, ctx)
    if obstruction:
        raise NotClosedError(f"{{Theta, Theta}} = {obstruction} is nonzero; D is not a differential", obstruction)


def _incoming_dim(theta, ctx, weight, max_qdeg, slack):
    """dim( D(window_{w-1} at N + slack) intersected with window_w at N )."""
    if weight == 0:
        return 0
    wide = differential_matrix(theta, ctx, weight - 1, max_qdeg + slack)
    inside = {i for i, k in enumerate(wide.target_basis) if _qdeg(ctx, k) <= max_qdeg}
    outside_rows = [{r: v for r, v in col.items() if r not in inside} for col in wide.columns]
    return rank(wide.columns) - rank(outside_rows)


def cohomology_dims(theta: Superpolynomial, ctx: ChartContext = None, max_weight: int = 0,
                    max_qdeg: int = 0, slack: int = 1) -> List[int]:
    """dim H^w for w = 0..max_weight: dim ker D_w minus the incoming image in the window."""
    ctx = _check_theta(theta, ctx)
    _require_structure(theta, ctx)
    dims = []
    for w in range(max_weight + 1):
        block = differential_matrix(theta, ctx, w, max_qdeg)
        kernel = len(block.basis) - block.rank
        dims.append(kernel - _incoming_dim(theta, ctx, w, max_qdeg, slack))
    return dims


def label_weights(weights: Sequence[int], shift_minus_2: bool = False) -> List[int]:
    """Output labels; the deformation convention shifts the grading by -2."""
    return [w - 2 for w in weights] if shift_minus_2 else list(weights)


@dataclass
class ExactnessReport:
    closed: bool
    exact: Optional[bool]
    preimage: Optional[Superpolynomial]
    residual: Superpolynomial


def exactness_report(theta: Superpolynomial, f: Superpolynomial, max_qdeg: int, slack: int = 1) -> ExactnessReport:
    """Whether a homogeneous f is D-closed, and D-exact within the window N + slack."""
    ctx = _check_theta(theta, f.ctx)
    residual = poisson_bracket(theta, f, ctx)
    if residual:
        return ExactnessReport(False, None, None, residual)
    w = f.weight
    if w is None or w == 0:
        return ExactnessReport(True, not f if w is None else False, ctx.zero() if w is None else None, residual)
    wide = differential_matrix(theta, ctx, w - 1, max_qdeg + slack)
    index = {k: i for i, k in enumerate(wide.target_basis)}
    target = {}
    for k, c in f.terms.items():
        if k not in index:
            raise TruncationError(f"{f} lies outside the window", f)
        target[index[k]] = c
    x = solve(wide.columns, target)
    if x is None:
        return ExactnessReport(True, False, None, residual)
    pre = Superpolynomial(ctx, {k: c for k, c in zip(wide.basis, x) if c})
    return ExactnessReport(True, True, pre, residual)
