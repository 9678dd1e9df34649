"""Command-line front end: JSON input, deterministic run reports on stdout.

Exit codes: 0 success, 1 usage error, 2 input-invariant violation,
3 negative comparison outcome (unequal types, violated identity).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import random
import sys
import time
from fractions import Fraction
from itertools import combinations
from typing import Any, Sequence

from . import hilbert_canon, krivine, legendre, lp_canon, oracle, rv_canon, ultra_ball
from .errors import InvariantError
from .measure_core import ExtensionPair, LatticeElement, MeasureSpace, SubStructure


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); remap to usage error
        raise UsageError(message)


# ---------------------------------------------------------------------------
# Input documents
# ---------------------------------------------------------------------------

def _read_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InvariantError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvariantError(f"{path}: invalid JSON ({exc})") from exc


def load_space(path: str) -> ExtensionPair:
    doc = _read_json(path)
    for key in ("base_weights", "fiber_cells"):
        if key not in doc:
            raise InvariantError(f"{path}: /{key}: missing")
    return ExtensionPair(
        tuple(float(w) for w in doc["base_weights"]),
        int(doc["fiber_cells"]),
        bool(doc.get("orthogonal_part", False)),
    )


def load_element(path: str, pair: ExtensionPair) -> LatticeElement:
    doc = _read_json(path)
    rows = doc.get("rows")
    if rows is None:
        raise InvariantError(f"{path}: /rows: missing")
    if len(rows) != pair.m:
        raise InvariantError(f"{path}: /rows: expected {pair.m} fibers, got {len(rows)}")
    for i, row in enumerate(rows):
        if len(row) != pair.n:
            raise InvariantError(
                f"{path}: /rows/{i}: expected {pair.n} values, got {len(row)}"
            )
    for key in ("plus", "minus"):
        part = doc.get(key)
        if part is not None and len(part) != pair.n:
            raise InvariantError(
                f"{path}: /{key}: expected {pair.n} values, got {len(part)}"
            )
        if part is not None and not pair.has_orthogonal:
            raise InvariantError(f"{path}: /{key}: space document has no orthogonal part")
    return pair.element(rows, doc.get("plus"), doc.get("minus"))


def _load_blocks(doc: Any, path: str) -> SubStructure:
    blocks = doc.get("blocks")
    if blocks is None:
        raise InvariantError(f"{path}: /blocks: missing")
    return SubStructure(tuple(tuple(int(i) for i in b) for b in blocks))


def load_probability_space(path: str) -> tuple[MeasureSpace, SubStructure]:
    doc = _read_json(path)
    if "weights" not in doc:
        raise InvariantError(f"{path}: /weights: missing")
    space = MeasureSpace(tuple(float(w) for w in doc["weights"]))
    return space, _load_blocks(doc, path)


def _digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InvariantError(f"not a rational number: {text!r}") from exc


def _proj_point(text: str) -> ultra_ball.ProjPoint:
    if text.strip().lower() in ("inf", "infinity", "oo"):
        return ultra_ball.INFINITY
    return ultra_ball.ProjPoint.of(_fraction(text))


# ---------------------------------------------------------------------------
# Report plumbing
# ---------------------------------------------------------------------------

def _emit(report: dict) -> None:
    print(json.dumps(report, sort_keys=True, indent=2))


def emit_curve(cb: lp_canon.LpCanonicalBase, path: str) -> None:
    """CSV of the partial family: header t,atom_0,...; 12 significant digits."""
    if cb.partials is None:
        raise InvariantError("curve export needs the partial (non-interval) form")
    atom_count = len(next(iter(cb.partials.values())).values) if cb.partials else 0
    lines = ["t," + ",".join(f"atom_{i}" for i in range(atom_count))]
    for t in cb.grid:
        vals = cb.partials[t].values
        lines.append(",".join(f"{x:.12g}" for x in (t, *vals)))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Command handlers: return (exit_code, outputs, checks, inputs)
# ---------------------------------------------------------------------------

def _cmd_legendre(args) -> tuple[int, dict, dict, dict]:
    phi = legendre.fn_from_dict(_read_json(args.fn))
    conj = legendre.conjugate(phi)
    doc = legendre.fn_to_dict(conj)
    back = legendre.conjugate(conj)
    ok = all(
        abs(back.evaluate(b) - phi.evaluate(b)) <= 1e-9 for b in phi.breakpoints
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)
    return 0, {"conjugate": doc}, {"biconjugate_roundtrip": ok}, {args.fn: _digest(args.fn)}


def _cmd_krivine(args) -> tuple[int, dict, dict, dict]:
    if args.action == "parse":
        term = krivine.parse_term(args.term, args.arity)
        text = krivine.to_text(term)
        ok = krivine.parse_term(text, args.arity) == term
        return 0, {"term": text}, {"roundtrip": ok}, {}
    if args.action == "eval":
        term = krivine.parse_term(args.term, args.arity)
        point = [float(Fraction(v)) for v in args.point.split(",")]
        value = krivine.eval_scalar(term, point)
        return 0, {"value": value}, {}, {}
    fn = krivine.registry_function(args.fn)
    term, cert = krivine.approximate_on_sphere(
        fn, args.eps, args.grid, seed=args.seed
    )
    text = krivine.to_text(term)
    outputs = {"certified_error": cert, "term_chars": len(text), "function": fn.name}
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    elif len(text) <= 4096:
        outputs["term"] = text
    return 0, outputs, {"reached_eps": cert <= args.eps}, {}


def _cmd_lp_cb(args) -> tuple[int, dict, dict, dict]:
    pair = load_space(args.space)
    f = load_element(args.element, pair)
    n = args.grid
    if args.intervals:
        grid = [k / n for k in range(n + 1)]
    else:
        grid = [k / n for k in range(1, n + 1)]
    cb = lp_canon.canonical_base_1type(f, pair, args.p, grid, intervals=args.intervals)
    outputs: dict[str, Any] = {
        "pos_norm": cb.pos_norm,
        "neg_norm": cb.neg_norm,
        "grid": list(cb.grid),
        "p": cb.p,
    }
    if cb.partials is not None:
        outputs["partials"] = {f"{t:.12g}": list(v.values) for t, v in cb.partials.items()}
    if cb.intervals is not None:
        outputs["intervals"] = {
            f"{a:.12g}:{b:.12g}": list(v.values) for (a, b) in sorted(cb.intervals)
            for v in [cb.intervals[(a, b)]]
        }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(outputs, fh, sort_keys=True, indent=2)
    if args.curve:
        emit_curve(cb, args.curve)
    inputs = {args.space: _digest(args.space), args.element: _digest(args.element)}
    return 0, outputs, {}, inputs


def _cmd_typeq(args) -> tuple[int, dict, dict, dict]:
    pair = load_space(args.space)
    fa = load_element(args.a, pair)
    fb = load_element(args.b, pair)
    if args.absolute:
        equal = oracle.absolute_type_equal([fa], [fb], args.p)
    else:
        equal = oracle.type_equal_1(fa, fb, pair, args.p)
    inputs = {
        args.space: _digest(args.space),
        args.a: _digest(args.a),
        args.b: _digest(args.b),
    }
    return (0 if equal else 3), {"equal": equal}, {}, inputs


def _cmd_rv_cb(args) -> tuple[int, dict, dict, dict]:
    space, blocks = load_probability_space(args.space)
    doc = _read_json(args.elements)
    elems = doc.get("elements")
    if elems is None:
        raise InvariantError(f"{args.elements}: /elements: missing")
    xs = [LatticeElement(space, tuple(float(v) for v in row)) for row in elems]
    for x in xs:
        rv_canon.validate_rv(x)
    moments: dict[str, list[float]] = {}
    from itertools import product as iproduct

    for ks in iproduct(range(args.k_max + 1), repeat=len(xs)):
        if all(k == 0 for k in ks):
            continue
        val = rv_canon.cond_moment(xs, ks, blocks)
        moments[",".join(map(str, ks))] = list(val.values)
    outputs = {"moments": moments, "k_max": args.k_max}
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(outputs, fh, sort_keys=True, indent=2)
    inputs = {args.space: _digest(args.space), args.elements: _digest(args.elements)}
    return 0, outputs, {}, inputs


def _cmd_apr_cb(args) -> tuple[int, dict, dict, dict]:
    doc = _read_json(args.events)
    if "weights" not in doc:
        raise InvariantError(f"{args.events}: /weights: missing")
    space = MeasureSpace(tuple(float(w) for w in doc["weights"]))
    blocks = _load_blocks(doc, args.events)
    events_doc = doc.get("events")
    if events_doc is None:
        raise InvariantError(f"{args.events}: /events: missing")
    events = [LatticeElement(space, tuple(float(v) for v in row)) for row in events_doc]
    cb = rv_canon.apr_cb(events, blocks)
    outputs = {
        "conditional_probabilities": {
            ",".join(map(str, sorted(subset))): list(val.values)
            for subset, val in cb.items()
        }
    }
    return 0, outputs, {}, {args.events: _digest(args.events)}


def _cmd_hs_cb(args) -> tuple[int, dict, dict, dict]:
    vecs_doc = _read_json(args.vectors)
    sub_doc = _read_json(args.subspace)
    if "vectors" not in vecs_doc:
        raise InvariantError(f"{args.vectors}: /vectors: missing")
    if "dim" not in sub_doc or "basis" not in sub_doc:
        raise InvariantError(f"{args.subspace}: needs /dim and /basis")
    sub = hilbert_canon.Subspace(
        int(sub_doc["dim"]), tuple(tuple(float(v) for v in row) for row in sub_doc["basis"])
    )
    base = hilbert_canon.hs_cb(vecs_doc["vectors"], sub)
    outputs = {
        "projections": [list(p) for p in base.projections],
        "gram": [list(r) for r in base.gram],
    }
    inputs = {args.vectors: _digest(args.vectors), args.subspace: _digest(args.subspace)}
    return 0, outputs, {}, inputs


def _cmd_ultra(args) -> tuple[int, dict, dict, dict]:
    ctx = ultra_ball.PAdicContext(args.prime)
    if args.action == "ball-dist":
        a = ultra_ball.Ball(_proj_point(args.a), _fraction(args.r))
        b = ultra_ball.Ball(_proj_point(args.b), _fraction(args.s))
        dist = ultra_ball.ball_distance(a, b, ctx)
        return 0, {"distance": str(dist)}, {}, {}
    # check-triangles over a seeded rational sample
    rng = random.Random(args.seed)
    balls = []
    for _ in range(args.samples):
        if rng.random() < 0.1:
            center = ultra_ball.INFINITY
        else:
            num = rng.randint(-60, 60)
            den = rng.randint(1, 24)
            center = ultra_ball.ProjPoint.of(Fraction(num, den))
        radius = Fraction(rng.randint(0, 16), 16)
        balls.append(ultra_ball.Ball(center, radius))
    dist = [
        [ultra_ball.ball_distance(x, y, ctx) for y in balls] for x in balls
    ]
    violations = 0
    idx = range(len(balls))
    for i, j, k in combinations(idx, 3):
        for a, b, c in ((i, j, k), (j, i, k), (i, k, j)):
            if dist[a][c] > dist[a][b] + dist[b][c]:
                violations += 1
    outputs = {"samples": args.samples, "violations": violations}
    checks = {"triangle_inequality": violations == 0}
    return (0 if violations == 0 else 3), outputs, checks, {}


def _cmd_demo(args) -> tuple[int, dict, dict, dict]:
    if args.which == "p1":
        eps = _fraction(args.eps)
        report = lp_canon.p1_counterexample(eps, args.p)
        outputs = {
            "eps": str(report.eps),
            "p": report.p,
            "f_norm": report.f_norm,
            "partial_values": list(report.partial.values),
            "partial_norm": report.partial_norm,
        }
        checks = {"f_norm_is_one": abs(report.f_norm - 1.0) <= 1e-9}
        if args.p == 1.0:
            checks["partial_norm_is_one"] = abs(report.partial_norm - 1.0) <= 1e-9
        return 0, outputs, checks, {}
    report = lp_canon.remark_counterexample()
    outputs = {
        "k_bound": report.k_bound,
        "witness_with_h": report.witness_with_h,
        "witness_with_minus_h": report.witness_with_minus_h,
    }
    checks = {
        "single_types_all_equal": report.single_types_all_equal,
        "joint_types_differ": not report.joint_types_equal,
        "witness_separates": abs(report.witness_with_h - report.witness_with_minus_h) > 1e-9,
    }
    ok = all(checks.values())
    return (0 if ok else 3), outputs, checks, {}


# ---------------------------------------------------------------------------
# Argument tree
# ---------------------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="canonlab", description=__doc__)
    default_seed = int(os.environ.get("CANONLAB_SEED", "0"))
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("legendre", help="conjugate of a piecewise-linear convex function")
    p.add_argument("--fn", required=True)
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_legendre)

    p = sub.add_parser("krivine", help="lattice-term utilities")
    ksub = p.add_subparsers(dest="action", required=True)
    kp = ksub.add_parser("parse")
    kp.add_argument("--term", required=True)
    kp.add_argument("--arity", type=int, required=True)
    ke = ksub.add_parser("eval")
    ke.add_argument("--term", required=True)
    ke.add_argument("--arity", type=int, required=True)
    ke.add_argument("--point", required=True, help="comma-separated coordinates")
    ka = ksub.add_parser("approx")
    ka.add_argument("--fn", required=True, help="registry function, e.g. geomean(1/2)")
    ka.add_argument("--eps", type=float, required=True)
    ka.add_argument("--grid", type=int, default=64)
    ka.add_argument("--seed", type=int, default=default_seed)
    ka.add_argument("--out")
    p.set_defaults(handler=_cmd_krivine)

    p = sub.add_parser("lp-cb", help="canonical base of an element over a pair")
    p.add_argument("--space", required=True)
    p.add_argument("--element", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--grid", type=int, required=True, help="n for the grid {k/n}")
    p.add_argument("--intervals", action="store_true")
    p.add_argument("--out")
    p.add_argument("--curve", help="CSV path for the partial curves")
    p.set_defaults(handler=_cmd_lp_cb)

    p = sub.add_parser("typeq", help="type-equality oracle; exit 3 when unequal")
    p.add_argument("--space", required=True)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--absolute", action="store_true")
    p.set_defaults(handler=_cmd_typeq)

    p = sub.add_parser("rv-cb", help="conditional moment base of [0,1]-valued variables")
    p.add_argument("--space", required=True, help="JSON with weights and blocks")
    p.add_argument("--elements", required=True)
    p.add_argument("--k-max", dest="k_max", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_rv_cb)

    p = sub.add_parser("apr-cb", help="conditional probabilities of event meets")
    p.add_argument("--events", required=True, help="JSON with weights, blocks, events")
    p.set_defaults(handler=_cmd_apr_cb)

    p = sub.add_parser("hs-cb", help="projections and Gram matrix")
    p.add_argument("--vectors", required=True)
    p.add_argument("--subspace", required=True)
    p.set_defaults(handler=_cmd_hs_cb)

    p = sub.add_parser("ultra", help="ultrametric ball sort")
    p.add_argument("--prime", type=int, required=True)
    usub = p.add_subparsers(dest="action", required=True)
    ut = usub.add_parser("check-triangles")
    ut.add_argument("--samples", type=int, default=60)
    ut.add_argument("--seed", type=int, default=default_seed)
    ub = usub.add_parser("ball-dist")
    ub.add_argument("a")
    ub.add_argument("r")
    ub.add_argument("b")
    ub.add_argument("s")
    p.set_defaults(handler=_cmd_ultra)

    p = sub.add_parser("demo", help="worked counterexample families")
    dsub = p.add_subparsers(dest="which", required=True)
    dp = dsub.add_parser("p1")
    dp.add_argument("--p", type=float, default=1.0)
    dp.add_argument("--eps", default="1/4")
    dsub.add_parser("remark")
    p.set_defaults(handler=_cmd_demo)

    return parser


def dispatch(argv: Sequence[str]) -> int:
    """Run one command; print the run report; return the exit code."""
    parser = _build_parser()
    started = time.perf_counter()
    try:
        args = parser.parse_args(list(argv))
        code, outputs, checks, inputs = args.handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except InvariantError as exc:
        _emit({"command": list(argv), "error": str(exc), "exit_code": 2})
        return 2
    report = {
        "command": list(argv),
        "inputs": inputs,
        "outputs": outputs,
        "checks": checks,
        "exit_code": code,
        "wall_time_s": round(time.perf_counter() - started, 6),
    }
    _emit(report)
    return code


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
