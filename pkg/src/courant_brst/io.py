"""JSON text forms for polynomials, Courant data and command documents.

A polynomial is either the string "0" or a list of terms

    {"coeff": "num/den", "even": [exponents in even-variable order], "odd": [0-based indices]}

where the even variables are the base coordinates followed by the momenta.
Rationals are strings (or JSON integers); floats are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from .courant import CourantData, TransitionMap, brst_chart, point_chart, standard_chart
from .errors import AlgebraError, SchemaError
from .superpoly import ChartContext, Superpolynomial, from_terms

POLY_FIELDS = ("theta", "e", "e1", "e2", "f", "beta", "phi", "gamma")
INT_FIELDS = ("seed", "trials", "max_weight", "max_qdeg")


# ---------------------------------------------------------------------------
# scalars


def parse_rational(value, loc: str) -> Fraction:
    if isinstance(value, bool):
        raise SchemaError("expected a rational, got a boolean", loc)
    if isinstance(value, int):
        return Fraction(value)
    if not isinstance(value, str):
        raise SchemaError(f"expected a rational string, got {type(value).__name__}", loc)
    text = value.strip()
    num, _, den = text.partition("/")
    try:
        n = int(num)
        d = int(den) if den else 1
    except ValueError:
        raise SchemaError(f"malformed rational {value!r}", loc) from None
    if d == 0:
        raise SchemaError(f"zero denominator in {value!r}", loc)
    return Fraction(n, d)


def emit_rational(x) -> str:
    return str(Fraction(x))


def _int(value, loc: str, minimum: int = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError("expected an integer", loc)
    if minimum is not None and value < minimum:
        raise SchemaError(f"must be >= {minimum}", loc)
    return value


def _list(value, loc: str, length: int = None) -> list:
    if not isinstance(value, list):
        raise SchemaError("expected an array", loc)
    if length is not None and len(value) != length:
        raise SchemaError(f"expected {length} entries, got {len(value)}", loc)
    return value


def _obj(value, loc: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError("expected an object", loc)
    return value


def _field(obj: dict, name: str, loc: str):
    if name not in obj:
        raise SchemaError("missing field", f"{loc}.{name}" if loc else name)
    return obj[name]


def parse_matrix(value, loc: str, rows: int = None) -> List[List[Fraction]]:
    value = _list(value, loc, rows)
    n = len(value)
    return [[parse_rational(x, f"{loc}[{i}][{j}]") for j, x in enumerate(_list(row, f"{loc}[{i}]", n))]
            for i, row in enumerate(value)]


def parse_metric(value, loc: str, rows: int = None) -> List[List[Fraction]]:
    g = parse_matrix(value, loc, rows)
    for i, row in enumerate(g):
        for j, x in enumerate(row):
            if x != g[j][i]:
                raise SchemaError(f"metric is not symmetric at ({i}, {j})", loc)
    return g


def parse_structure_constants(value, loc: str):
    value = _list(value, loc)
    m = len(value)
    return [[[parse_rational(x, f"{loc}[{a}][{b}][{c}]") for c, x in enumerate(_list(row, f"{loc}[{a}][{b}]", m))]
             for b, row in enumerate(_list(plane, f"{loc}[{a}]", m))] for a, plane in enumerate(value)]


# ---------------------------------------------------------------------------
# polynomials


def parse_poly(value, ctx, loc: str) -> Superpolynomial:
    if isinstance(value, str) and value.strip() == "0":
        return ctx.zero()
    terms = []
    for t, term in enumerate(_list(value, loc)):
        tl = f"{loc}[{t}]"
        term = _obj(term, tl)
        extra = set(term) - {"coeff", "even", "odd"}
        if extra:
            raise SchemaError(f"unknown keys {sorted(extra)}", tl)
        coeff = parse_rational(_field(term, "coeff", tl), f"{tl}.coeff")
        even = [_int(e, f"{tl}.even[{j}]", 0) for j, e in enumerate(_list(term.get("even", [0] * ctx.n_even),
                                                                         f"{tl}.even", ctx.n_even))]
        odd = [_int(k, f"{tl}.odd[{j}]", 0) for j, k in enumerate(_list(term.get("odd", []), f"{tl}.odd"))]
        if any(k >= ctx.n_odd for k in odd):
            raise SchemaError(f"odd index out of range (context has {ctx.n_odd} odd variables)", f"{tl}.odd")
        if len(set(odd)) != len(odd):
            raise SchemaError("repeated odd index", f"{tl}.odd")
        terms.append((coeff, even, odd))
    return from_terms(ctx, terms)


def emit_poly(f: Superpolynomial):
    if not f:
        return "0"
    out = []
    for (exps, odd), c in f.items():
        out.append({"coeff": emit_rational(c), "even": list(exps), "odd": list(odd)})
    return out


# ---------------------------------------------------------------------------
# contexts and Courant data


def parse_context(value, loc: str = "context") -> ChartContext:
    value = _obj(value, loc)
    kind = _field(value, "kind", loc)
    if kind == "standard":
        return standard_chart(_int(_field(value, "base_dim", loc), f"{loc}.base_dim", 0))
    if kind == "darboux":
        n = _int(_field(value, "base_dim", loc), f"{loc}.base_dim", 0)
        g = parse_metric(_field(value, "metric", loc), f"{loc}.metric")
        return _chart(n, g, f"{loc}.metric")
    if kind == "brst":
        m = _int(_field(value, "dim_g", loc), f"{loc}.dim_g", 0)
        return brst_chart(m, _int(_field(value, "base_dim", loc), f"{loc}.base_dim", 0))
    raise SchemaError(f"unknown context kind {kind!r}", f"{loc}.kind")


def _chart(n, g, loc):
    try:
        return ChartContext.create(n, g)
    except ZeroDivisionError:
        raise SchemaError("metric is degenerate", loc) from None
    except AlgebraError as exc:
        raise SchemaError(str(exc), loc) from None


def emit_context(ctx: ChartContext) -> dict:
    if ctx == standard_chart(ctx.base_dim):
        return {"kind": "standard", "base_dim": ctx.base_dim}
    if ctx.rank % 2 == 0 and ctx == brst_chart(ctx.rank // 2, ctx.base_dim):
        return {"kind": "brst", "dim_g": ctx.rank // 2, "base_dim": ctx.base_dim}
    return {"kind": "darboux", "base_dim": ctx.base_dim,
            "metric": [[emit_rational(x) for x in row] for row in ctx.metric]}


def parse_courant_data(value, loc: str = "courant") -> CourantData:
    """CourantData document; ``anchor`` is indexed [a][i]."""
    value = _obj(value, loc)
    n = _int(_field(value, "base_dim", loc), f"{loc}.base_dim", 0)
    g = parse_metric(_field(value, "metric", loc), f"{loc}.metric")
    ctx = _chart(n, g, f"{loc}.metric")
    r = ctx.rank
    raw = _list(value.get("anchor", [["0"] * n for _ in range(r)]), f"{loc}.anchor", r)
    anchor_ai = [[parse_poly(x, ctx, f"{loc}.anchor[{a}][{i}]") for i, x in enumerate(_list(row, f"{loc}.anchor[{a}]", n))]
                 for a, row in enumerate(raw)]
    phi = {}
    for t, entry in enumerate(_list(value.get("phi", []), f"{loc}.phi")):
        el = f"{loc}.phi[{t}]"
        entry = _obj(entry, el)
        idx = tuple(_int(k, f"{el}.index[{j}]", 0) for j, k in enumerate(_list(_field(entry, "index", el), f"{el}.index", 3)))
        if len(set(idx)) < 3:
            raise SchemaError(f"repeated index {list(idx)}; antisymmetry forces such entries to vanish", f"{el}.index")
        if not idx[0] < idx[1] < idx[2]:
            raise SchemaError(f"index {list(idx)} must be strictly increasing", f"{el}.index")
        if idx[2] >= r:
            raise SchemaError(f"index {list(idx)} out of range for rank {r}", f"{el}.index")
        if idx in phi:
            raise SchemaError(f"duplicate triple {list(idx)}", f"{el}.index")
        phi[idx] = parse_poly(_field(entry, "value", el), ctx, f"{el}.value")
    try:
        return CourantData(ctx, tuple(tuple(anchor_ai[a][i] for a in range(r)) for i in range(n)), phi)
    except AlgebraError as exc:
        raise SchemaError(str(exc), loc) from None


def emit_courant_data(d: CourantData) -> dict:
    ctx = d.ctx
    return {
        "base_dim": ctx.base_dim,
        "metric": [[emit_rational(x) for x in row] for row in ctx.metric],
        "anchor": [[emit_poly(d.anchor[i][a]) for i in range(ctx.base_dim)] for a in range(ctx.rank)],
        "phi": [{"index": list(idx), "value": emit_poly(d.phi[idx])} for idx in sorted(d.phi)],
    }


# ---------------------------------------------------------------------------
# command documents


@dataclass
class CommandDocument:
    command: Optional[str] = None
    ctx: Optional[ChartContext] = None
    courant: Optional[CourantData] = None
    cartan: Optional[Tuple[list, list]] = None          # (C, metric)
    brst: Optional[Tuple[list, int, list]] = None       # (C, base_dim, action[a][i])
    severa: Optional[Tuple[list, list]] = None          # (C, K)
    polys: Dict[str, Superpolynomial] = field(default_factory=dict)
    transition: Optional[dict] = None
    params: Dict[str, int] = field(default_factory=dict)

    def transition_map(self) -> TransitionMap:
        t = self.transition
        try:
            return TransitionMap(self.ctx, t["target"], t["base_map"], t["base_inverse"], t["frame"])
        except AlgebraError as exc:
            raise SchemaError(str(exc), "transition") from None


def parse_document(text: str) -> CommandDocument:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from None
    return document_from_json(raw)


def document_from_json(raw: Any) -> CommandDocument:
    raw = _obj(raw, "document")
    known = {"command", "context", "courant", "cartan", "brst", "severa", "transition"} | set(POLY_FIELDS) | set(INT_FIELDS)
    extra = set(raw) - known
    if extra:
        raise SchemaError(f"unknown fields {sorted(extra)}", "document")
    doc = CommandDocument()
    if "command" in raw:
        if not isinstance(raw["command"], str):
            raise SchemaError("expected a string", "command")
        doc.command = raw["command"]
    sources = [k for k in ("context", "courant", "cartan", "brst") if k in raw]
    if len(sources) > 1:
        raise SchemaError(f"at most one of context/courant/cartan/brst may be given, got {sources}", "document")
    if "context" in raw:
        doc.ctx = parse_context(raw["context"])
    elif "courant" in raw:
        doc.courant = parse_courant_data(raw["courant"])
        doc.ctx = doc.courant.ctx
    elif "cartan" in raw:
        block = _obj(raw["cartan"], "cartan")
        C = parse_structure_constants(_field(block, "structure_constants", "cartan"), "cartan.structure_constants")
        g = parse_metric(_field(block, "metric", "cartan"), "cartan.metric", len(C))
        doc.cartan = (C, g)
        doc.ctx = _point(g)
    elif "brst" in raw:
        block = _obj(raw["brst"], "brst")
        C = parse_structure_constants(_field(block, "structure_constants", "brst"), "brst.structure_constants")
        n = _int(_field(block, "base_dim", "brst"), "brst.base_dim", 0)
        doc.ctx = brst_chart(len(C), n)
        act = _list(_field(block, "action", "brst"), "brst.action", len(C))
        v = [[parse_poly(x, doc.ctx, f"brst.action[{a}][{i}]") for i, x in enumerate(_list(row, f"brst.action[{a}]", n))]
             for a, row in enumerate(act)]
        doc.brst = (C, n, v)
    if "severa" in raw:
        block = _obj(raw["severa"], "severa")
        C = parse_structure_constants(_field(block, "structure_constants", "severa"), "severa.structure_constants")
        K = parse_metric(_field(block, "form", "severa"), "severa.form", len(C))
        doc.severa = (C, K)
    for name in POLY_FIELDS:
        if name in raw:
            if doc.ctx is None:
                raise SchemaError("a polynomial needs a context, courant, cartan or brst block", name)
            doc.polys[name] = parse_poly(raw[name], doc.ctx, name)
    for name in INT_FIELDS:
        if name in raw:
            doc.params[name] = _int(raw[name], name, 0 if name != "seed" else None)
    if "transition" in raw:
        if doc.ctx is None:
            raise SchemaError("a transition needs a source chart", "transition")
        block = _obj(raw["transition"], "transition")
        src = doc.ctx
        if "target_metric" in block:
            target = _chart(src.base_dim, parse_metric(block["target_metric"], "transition.target_metric"),
                            "transition.target_metric")
        else:
            target = src
        n, r = src.base_dim, src.rank
        doc.transition = {
            "target": target,
            "base_map": tuple(parse_poly(x, target, f"transition.base_map[{i}]")
                              for i, x in enumerate(_list(_field(block, "base_map", "transition"), "transition.base_map", n))),
            "base_inverse": tuple(parse_poly(x, src, f"transition.base_inverse[{i}]")
                                  for i, x in enumerate(_list(_field(block, "base_inverse", "transition"), "transition.base_inverse", n))),
            "frame": tuple(tuple(parse_poly(x, target, f"transition.frame[{a}][{b}]")
                                 for b, x in enumerate(_list(row, f"transition.frame[{a}]", r)))
                           for a, row in enumerate(_list(_field(block, "frame", "transition"), "transition.frame", r))),
        }
    return doc


def _point(g):
    try:
        return point_chart(g)
    except ZeroDivisionError:
        raise SchemaError("metric is degenerate", "cartan.metric") from None


def _emit_constants(C):
    return [[[emit_rational(x) for x in row] for row in plane] for plane in C]


def document_to_json(doc: CommandDocument) -> dict:
    out: Dict[str, Any] = {}
    if doc.command is not None:
        out["command"] = doc.command
    if doc.courant is not None:
        out["courant"] = emit_courant_data(doc.courant)
    elif doc.cartan is not None:
        C, g = doc.cartan
        out["cartan"] = {"structure_constants": _emit_constants(C), "metric": [[emit_rational(x) for x in r] for r in g]}
    elif doc.brst is not None:
        C, n, v = doc.brst
        out["brst"] = {"structure_constants": _emit_constants(C), "base_dim": n,
                       "action": [[emit_poly(x) for x in row] for row in v]}
    elif doc.ctx is not None:
        out["context"] = emit_context(doc.ctx)
    if doc.severa is not None:
        C, K = doc.severa
        out["severa"] = {"structure_constants": _emit_constants(C), "form": [[emit_rational(x) for x in r] for r in K]}
    for name, f in doc.polys.items():
        out[name] = emit_poly(f)
    out.update(doc.params)
    if doc.transition is not None:
        t = doc.transition
        block = {
            "base_map": [emit_poly(x) for x in t["base_map"]],
            "base_inverse": [emit_poly(x) for x in t["base_inverse"]],
            "frame": [[emit_poly(x) for x in row] for row in t["frame"]],
        }
        if t["target"] != doc.ctx:
            block["target_metric"] = [[emit_rational(x) for x in row] for row in t["target"].metric]
        out["transition"] = block
    return out


def emit(report: Any) -> str:
    """Canonical JSON: sorted keys, no float formatting anywhere."""
    return json.dumps(report, sort_keys=True, ensure_ascii=True)


def emit_document(doc: CommandDocument) -> str:
    return emit(document_to_json(doc))
