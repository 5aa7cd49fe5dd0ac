"""Command-line front end.

    courant-brst <subcommand> [path|-] [--seed N] [--trials N] [--max-weight N] [--max-qdeg N] [--shift-minus-2]

Reports go to stdout as canonical JSON.  Exit status: 0 computed and holds,
1 computed and fails, 2 input error (diagnostic with location on stderr).
"""

from __future__ import annotations

import argparse
import sys
from typing import Callable, Dict, Tuple

from . import cohomology, courant, derham
from .errors import (
    AlgebraError,
    IncompatibleError,
    NotClosedError,
    NotLieAlgebroidError,
    SchemaError,
    TruncationError,
)
from .io import CommandDocument, emit, emit_courant_data, emit_poly, emit_rational, parse_document

Report = Tuple[dict, int]


def _theta(doc: CommandDocument, required=True):
    if "theta" in doc.polys:
        return doc.polys["theta"]
    if doc.courant is not None:
        return courant.theta_from_data(doc.courant)
    if doc.cartan is not None:
        try:
            return courant.cartan_theta(*doc.cartan)
        except AlgebraError as exc:
            raise SchemaError(str(exc), "cartan") from None
    if doc.brst is not None:
        C, n, v = doc.brst
        return courant.brst_theta(C, v, n, doc.ctx)
    if doc.ctx is not None and courant.is_standard_chart(doc.ctx):
        return courant.theta0(doc.ctx)
    if required:
        raise SchemaError("no Theta: give theta, courant, cartan, brst or a standard context", "document")
    return None


def _poly(doc, name):
    if name not in doc.polys:
        raise SchemaError("missing field", name)
    return doc.polys[name]


def _param(doc, args, name, default=None):
    flag = getattr(args, name, None)
    if flag is not None:
        return flag
    if name in doc.params:
        return doc.params[name]
    if default is None:
        raise SchemaError(f"missing parameter (pass --{name.replace('_', '-')} or set it in the document)", name)
    return default


def cmd_check_structure(doc, args) -> Report:
    obstruction = courant.structure_obstruction(_theta(doc))
    return {"obstruction": emit_poly(obstruction)}, int(bool(obstruction))


def cmd_dorfman(doc, args) -> Report:
    theta = _theta(doc)
    out = courant.dorfman(theta, _poly(doc, "e1"), _poly(doc, "e2"))
    return {"result": emit_poly(out.value)}, 0


def cmd_anchor(doc, args) -> Report:
    theta = _theta(doc)
    e = _poly(doc, "e")
    report = {"components": [emit_poly(x) for x in courant.anchor_vector(theta, e)]}
    if "f" in doc.polys:
        report["result"] = emit_poly(courant.anchor_apply(theta, e, doc.polys["f"]))
    return report, 0


def cmd_axioms(doc, args) -> Report:
    seed = _param(doc, args, "seed")  # no default: randomized runs need an explicit seed
    trials = _param(doc, args, "trials", 3)
    rep = courant.axiom_report(_theta(doc), seed=seed, trials=trials)
    checks = {
        name: {"trials": c.trials, "failures": c.failures, "passed": c.passed,
               "residual": emit_poly(c.residual) if c.residual is not None else "0"}
        for name, c in rep.checks.items()
    }
    return {"seed": seed, "trials": trials, "passed": rep.passed, "checks": checks}, int(not rep.passed)


def cmd_twist2(doc, args) -> Report:
    theta = _theta(doc)
    out = courant.twist_by_2form(theta, _poly(doc, "beta"))
    return {"theta": emit_poly(out)}, 0


def cmd_twist3(doc, args) -> Report:
    out = courant.twist_by_3form(doc.ctx, _poly(doc, "phi"))
    obstruction = courant.structure_obstruction(out)
    return {"theta": emit_poly(out), "obstruction": emit_poly(obstruction)}, int(bool(obstruction))


def cmd_transform(doc, args) -> Report:
    if doc.courant is None or doc.transition is None:
        raise SchemaError("transform needs a courant block and a transition block", "document")
    t = doc.transition_map()
    new = courant.transform(doc.courant, t)
    failures = t.bracket_failures()
    before = courant.structure_obstruction(courant.theta_from_data(doc.courant))
    after = courant.structure_obstruction(courant.theta_from_data(new))
    substituted = t.apply(courant.theta_from_data(doc.courant))
    routes_agree = substituted == courant.theta_from_data(new)
    holds = not failures and routes_agree and bool(before) == bool(after)
    return {
        "courant": emit_courant_data(new),
        "bracket_failures": [list(p) for p in failures],
        "routes_agree": routes_agree,
        "obstruction_before": emit_poly(before),
        "obstruction_after": emit_poly(after),
    }, int(not holds)


def cmd_severa(doc, args) -> Report:
    if doc.severa is None:
        raise SchemaError("missing field", "severa")
    try:
        phi = courant.severa_curvature(*doc.severa)
    except AlgebraError as exc:
        raise SchemaError(str(exc), "severa") from None
    return {"phi": [[[emit_rational(x) for x in row] for row in plane] for plane in phi]}, 0


def cmd_brst(doc, args) -> Report:
    if doc.brst is None:
        raise SchemaError("missing field", "brst")
    theta = _theta(doc)
    obstruction = courant.structure_obstruction(theta)
    return {"theta": emit_poly(theta), "obstruction": emit_poly(obstruction)}, int(bool(obstruction))


def cmd_homotopy(doc, args) -> Report:
    residual = derham.homotopy_check(_poly(doc, "f"))
    return {"residual": emit_poly(residual)}, int(bool(residual))


def cmd_decompose(doc, args) -> Report:
    f = _poly(doc, "f")
    parts = derham.bidegree_decompose(f)
    report = {"components": [{"bidegree": list(b.bidegree), "value": emit_poly(b.value)} for b in parts]}
    ks = {b.bidegree[0] for b in parts}
    if len(ks) == 1 and ks.pop() >= 1:
        lie, contraction = derham.fn_decompose(f)
        report["lie_part"] = emit_poly(lie)
        report["contraction_part"] = emit_poly(contraction)
    return report, 0


def cmd_primitive(doc, args) -> Report:
    try:
        g = derham.primitive(_poly(doc, "f"))
    except NotClosedError as exc:
        return {"error": "not closed", "residual": emit_poly(exc.residual)}, 1
    return {"primitive": emit_poly(g)}, 0


def cmd_poisson_from_gamma(doc, args) -> Report:
    try:
        pi = derham.poisson_from_gamma(_poly(doc, "gamma"))
    except IncompatibleError as exc:
        return {"error": "incompatible", "residual": emit_poly(exc.residual)}, 1
    except NotLieAlgebroidError as exc:
        return {"error": "not a Lie algebroid", "obstruction": emit_poly(exc.obstruction)}, 1
    return {"pi": emit_poly(pi)}, 0


def cmd_cohomology(doc, args) -> Report:
    theta = _theta(doc)
    max_weight = _param(doc, args, "max_weight")
    max_qdeg = _param(doc, args, "max_qdeg", 0)
    try:
        dims = cohomology.cohomology_dims(theta, theta.ctx, max_weight, max_qdeg)
    except TruncationError as exc:
        return {"error": str(exc), "element": emit_poly(exc.element)}, 1
    except NotClosedError as exc:
        return {"error": "structure equation fails", "obstruction": emit_poly(exc.residual)}, 1
    weights = cohomology.label_weights(range(max_weight + 1), args.shift_minus_2)
    return {"weights": weights, "dims": dims, "truncation": {"max_qdeg": max_qdeg}}, 0


COMMANDS: Dict[str, Callable[[CommandDocument, argparse.Namespace], Report]] = {
    "check-structure": cmd_check_structure,
    "dorfman": cmd_dorfman,
    "anchor": cmd_anchor,
    "axioms": cmd_axioms,
    "twist2": cmd_twist2,
    "twist3": cmd_twist3,
    "transform": cmd_transform,
    "severa": cmd_severa,
    "brst": cmd_brst,
    "homotopy": cmd_homotopy,
    "decompose": cmd_decompose,
    "primitive": cmd_primitive,
    "poisson-from-gamma": cmd_poisson_from_gamma,
    "cohomology": cmd_cohomology,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="courant-brst", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("input", nargs="?", default="-", help="document path, or - for stdin")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--max-weight", dest="max_weight", type=int)
    parser.add_argument("--max-qdeg", dest="max_qdeg", type=int)
    parser.add_argument("--shift-minus-2", dest="shift_minus_2", action="store_true",
                        help="label weights with the deformation convention (labels only)")
    return parser


def run(text: str, args: argparse.Namespace) -> Tuple[str, int]:
    """Parse, dispatch and emit; raises AlgebraError on input problems."""
    doc = parse_document(text)
    if doc.command is not None and doc.command != args.command:
        raise SchemaError(f"document is for {doc.command!r}, invoked as {args.command!r}", "command")
    report, status = COMMANDS[args.command](doc, args)
    return emit(report), status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.input == "-":
            text = sys.stdin.read()
        else:
            with open(args.input, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        print(f"error: cannot read {args.input}: {exc.strerror}", file=sys.stderr)
        return 2
    try:
        out, status = run(text, args)
    except AlgebraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return status


if __name__ == "__main__":
    sys.exit(main())
