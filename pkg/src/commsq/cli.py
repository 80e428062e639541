"""``commsq`` command line: verify, norms, factorize, fourstar, multmaps, fusiongraph.

Exit codes: 0 success, 1 verification failure or an empty result where one
was required, 2 malformed input. Every float is printed as a 17 significant
digit string so reports are byte-stable.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import catalog, factorization, fourstar, fusion
from .connection import ShapeError, connection_from_json, connection_to_json, verify
from .graphs import GraphError, graph_from_json, graph_to_dot, make_star, spectral

DEFAULT_TOL = 1e-10
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Malformed command input (exit code 2)."""


def num(x) -> str:
    return format(float(x), ".17g")


def plain(obj):
    """Recursively convert numbers to 17-digit strings and arrays to lists."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [num(obj.real), num(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return num(obj)
    return obj


def emit(payload, fmt: str, text_lines=None, dot=None, out=None):
    out = out or sys.stdout
    if fmt == "json":
        out.write(json.dumps(plain(payload), indent=2) + "\n")
    elif fmt == "text":
        out.write("\n".join(text_lines if text_lines is not None else _text(plain(payload))) + "\n")
    elif fmt == "dot":
        if dot is None:
            raise InputError("this command has no dot output")
        out.write(dot)


def _text(obj, prefix="") -> list[str]:
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)):
                lines.append(f"{prefix}{k}:")
                lines.extend(_text(v, prefix + "  "))
            else:
                lines.append(f"{prefix}{k}: {v}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)):
                lines.extend(_text(v, prefix + "- "))
            else:
                lines.append(f"{prefix}{v}")
    return lines


def default_tol() -> float:
    env = os.environ.get("COMMSQ_TOL")
    if env is None:
        return DEFAULT_TOL
    try:
        val = float(env)
    except ValueError:
        raise InputError(f"COMMSQ_TOL={env!r} is not a number") from None
    if not val > 0:
        raise InputError("COMMSQ_TOL must be positive")
    return val


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None


# ---------------------------------------------------------------- verify

def _shape_dot(shape) -> str:
    return "".join(graph_to_dot(shape.graph(n), n) for n in "GHKL")


def cmd_verify(args, fmt, tol) -> int:
    target = args.target
    if target in catalog.CATALOG_NAMES:
        entry = catalog.catalog_entry(target)
        conn, name = entry.connection, target
    else:
        obj = _read_json(target)
        try:
            conn = connection_from_json(obj)
        except (KeyError, TypeError, ValueError, ShapeError) as exc:
            raise InputError(f"{target}: malformed connection JSON ({exc})") from None
        name = obj.get("name") or Path(target).stem
    try:
        rep = verify(conn, tol)
    except (KeyError, ValueError, ShapeError) as exc:
        raise InputError(f"{target}: connection does not match its shape ({exc})") from None
    payload = {"name": name, "report": rep.to_json()}
    lines = [
        f"{name}: {'PASS' if rep.passed else 'FAIL'} at tol {num(tol)}",
        f"  nondegenerate: {rep.nondegenerate}",
        f"  max unitarity residual u: {num(rep.max_unitarity_residual_u)}",
        f"  max unitarity residual v: {num(rep.max_unitarity_residual_v)}",
        f"  bi-dual residual: {num(rep.bidual_residual)}",
    ]
    if args.export:
        doc = catalog.catalog_json(target) if target in catalog.CATALOG_NAMES else connection_to_json(conn, name)
        Path(args.export).write_text(json.dumps(doc, indent=1) + "\n")
    emit(payload, fmt, lines, _shape_dot(conn.shape))
    return EXIT_OK if rep.passed else EXIT_FAIL


# ---------------------------------------------------------------- norms

def _quipu_index() -> float:
    roots = np.roots([1, -8, 17, -5])
    return float(max(r.real for r in roots if abs(r.imag) < 1e-12))


def norm_rows() -> list[dict]:
    """Indices of finite depth subfactors in (4, 5.25] against the package's graphs."""
    s = math.sqrt
    star = lambda *arms: spectral(make_star(arms)).norm_sq
    cat = lambda name: spectral(getattr(catalog, f"{name}_shape")().graph("G")).norm_sq
    rows = [
        ("(5+sqrt13)/2", (5 + s(13)) / 2, []),
        ("~4.37720 (largest root of x^3-8x^2+17x-5)", _quipu_index(), [("quipu", cat("quipu"))]),
        ("(5+sqrt17)/2", (5 + s(17)) / 2,
         [("large_broom", cat("large_broom")), ("S(1,1,2,2)", star(1, 1, 2, 2))]),
        ("3+sqrt3", 3 + s(3), [("medium_broom", cat("medium_broom")), ("S(1,1,3,3)", star(1, 1, 3, 3))]),
        ("(5+sqrt21)/2", (5 + s(21)) / 2, [("S(1,1,4,4)", star(1, 1, 4, 4))]),
        ("5", 5.0, [("small_broom", cat("small_broom")), ("S(2,2,2,2)", star(2, 2, 2, 2))]),
        ("~5.04892", None, []),
        ("3+sqrt5", 3 + s(5), [("S(3,3,3,3)", star(3, 3, 3, 3))]),
    ]
    out = []
    for label, value, graphs in rows:
        out.append({
            "index": label,
            "value": value,
            "graphs": [{"graph": g, "norm_sq": v, "residual": abs(v - value)} for g, v in graphs],
        })
    return out


def cmd_norms(args, fmt, tol) -> int:
    rows = norm_rows()
    worst = max((g["residual"] for r in rows for g in r["graphs"]), default=0.0)
    ok = worst <= max(tol, 1e-9)
    lines = []
    for r in rows:
        val = "n/a" if r["value"] is None else num(r["value"])
        if not r["graphs"]:
            lines.append(f"{r['index']:<45} {val:<22} (no graph in this package)")
        for g in r["graphs"]:
            lines.append(f"{r['index']:<45} {val:<22} {g['graph']:<14} {num(g['norm_sq']):<22} "
                         f"residual {num(g['residual'])}")
    emit({"rows": rows, "max_residual": worst, "passed": ok}, fmt, lines)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- factorize

NAMED_GRAPHS = {
    "star3333": lambda: make_star([3, 3, 3, 3]),
    "small_broom": lambda: catalog.small_broom_shape().graph("G"),
    "medium_broom": lambda: catalog.medium_broom_shape().graph("G"),
    "large_broom": lambda: catalog.large_broom_shape().graph("G"),
    "quipu": lambda: catalog.quipu_shape().graph("G"),
}


def _graph_matrix(spec: str) -> np.ndarray:
    if spec in NAMED_GRAPHS:
        return NAMED_GRAPHS[spec]().adjacency
    if spec.startswith("star:"):
        try:
            return make_star([int(x) for x in spec[5:].split(",")]).adjacency
        except (ValueError, GraphError) as exc:
            raise InputError(f"bad star spec {spec!r}: {exc}") from None
    obj = _read_json(spec)
    try:
        if isinstance(obj, list):
            return np.asarray(obj)
        return graph_from_json(obj).adjacency
    except (GraphError, TypeError, ValueError) as exc:
        raise InputError(f"{spec}: malformed graph ({exc})") from None


def cmd_factorize(args, fmt, tol) -> int:
    G = _graph_matrix(args.graph)
    try:
        facs = factorization.enumerate_factorizations(G)
    except factorization.FactorizationError as exc:
        raise InputError(str(exc)) from None
    payload = {"graph": args.graph, "count": len(facs)}
    lines = [f"{args.graph}: {len(facs)} factorizations up to middle-index permutation"]
    if args.raw_count:
        labeled = sum(f.labeled_count() for f in facs)
        payload["labeled_count"] = labeled
        lines.append(f"  labeled (middle index ordered): {labeled}")
    if args.target_norm_sq is not None:
        t = tol
        hits = factorization.screen_intermediate(G, args.target_norm_sq, t, facs)
        payload["target_norm_sq"] = args.target_norm_sq
        payload["screen_tol"] = t
        payload["matches"] = [f.to_json() for f in hits]
        lines.append(f"  with ||H||^2 = {num(args.target_norm_sq)} +- {num(t)}: {len(hits)}")
    if args.list:
        payload["factorizations"] = [f.to_json() for f in facs]
    emit(payload, fmt, lines, graph_to_dot(_as_graph(G), "G"))
    return EXIT_OK


def _as_graph(G):
    from .graphs import from_adjacency
    m, n = np.shape(G)
    return from_adjacency([f"r{i}" for i in range(m)], [f"c{j}" for j in range(n)], G)


# ---------------------------------------------------------------- fourstar

def cmd_fourstar(args, fmt, tol) -> int:
    if args.mode == "table":
        if args.max is None or args.max < 1:
            raise InputError("fourstar table needs --max N with N >= 1")
        tab = fourstar.index_table(args.max, args.max, limits=True)
        trunc = tab.pop("_truncation")
        key = lambda v: "inf" if v == math.inf else str(v)
        cells = [{"i": key(i), "j": key(j), "norm_sq": v,
                  **({"truncation": trunc[(i, j)]} if (i, j) in trunc else {})}
                 for (i, j), v in tab.items()]
        lines = [f"S({c['i']},{c['i']},{c['j']},{c['j']})  {num(c['norm_sq'])}" for c in cells]
        emit({"proxy_arm_length": fourstar.INF_PROXY, "cells": cells}, fmt, lines)
        return EXIT_OK
    if args.mode is not None:
        raise InputError(f"unknown fourstar mode {args.mode!r}")
    if args.i is None or args.j is None or args.s is None:
        raise InputError("fourstar needs --i, --j and --s (or the 'table' mode)")
    if args.i < 1 or args.j < 1:
        raise InputError("--i and --j must be positive")
    c = fourstar.fourstar_constants(args.i, args.j)
    pt = fourstar.family_point(c, args.s)
    try:
        conn = fourstar.family_connection(args.i, args.j, args.s, tol)
        rep = verify(conn, tol)
        passed = rep.passed
    except fourstar.FamilyError as exc:
        conn, rep, passed = None, None, False
        sys.stderr.write(f"{exc}\n")
    payload = {
        "i": args.i, "j": args.j, "s": args.s, "t": pt.t,
        "norm_sq": c.norm_sq,
        "constants": {"alpha1": c.alpha1, "alpha2": c.alpha2, "alpha3": c.alpha3,
                      "beta": c.beta, "xi": c.xi},
        "w": pt.w, "z1": pt.z1, "z2": pt.z2, "z3": pt.z3,
        "central_block": pt.block,
        "unitarity_residual": pt.unitarity_residual(),
        "verify": rep.to_json() if rep else None,
        "passed": passed,
    }
    if rep:
        payload["verify"].pop("blocks")
    if args.export and conn is not None:
        Path(args.export).write_text(json.dumps(
            connection_to_json(conn, f"fourstar_{args.i}_{args.j}"), indent=1) + "\n")
        payload["exported"] = args.export
    lines = [
        f"S({args.i},{args.i},{args.j},{args.j}) s={num(args.s)} t={num(pt.t)} norm^2={num(c.norm_sq)}",
        f"  central block unitarity residual: {num(pt.unitarity_residual())}",
        f"  full connection: {'PASS' if passed else 'FAIL'}",
    ]
    emit(payload, fmt, lines, graph_to_dot(fourstar.fourstar_graph(args.i, args.j), "G"))
    return EXIT_OK if passed else EXIT_FAIL


# ---------------------------------------------------------------- fusion

def _load_bimodule(spec: str) -> fusion.FusionBimodule:
    try:
        name = spec[8:] if spec.startswith("regular:") else spec
        if spec.startswith("regular:") or name in fusion.BUILTIN_RINGS:
            return fusion.regular_bimodule(fusion.builtin_ring(name))
        obj = fusion.load_fusion_data(spec)
    except FileNotFoundError:
        raise InputError(f"no such file: {spec}") from None
    except fusion.FusionError as exc:
        raise InputError(f"{spec}: {exc}") from None
    if isinstance(obj, fusion.FusionRing):
        return fusion.regular_bimodule(obj)
    return obj


def _triple(specs) -> fusion.Triple:
    K, L, M = (_load_bimodule(s) for s in specs)
    try:
        return fusion.Triple(K, L, M)
    except fusion.FusionError as exc:
        raise InputError(str(exc)) from None


def _maps(args, t):
    return fusion.find_multiplication_maps(t, skip_c_prime=args.skip_c_prime,
                                           literal_d=args.literal_d,
                                           modulo_automorphisms=not args.raw)


def cmd_multmaps(args, fmt, tol) -> int:
    t = _triple(args.triple)
    maps = _maps(args, t)
    payload = {
        "triple": list(args.triple),
        "skip_c_prime": args.skip_c_prime,
        "modulo_automorphisms": not args.raw,
        "count": len(maps),
        "maps": [dict(id=k, **m.to_json(t)) for k, m in enumerate(maps)],
    }
    lines = [f"{len(maps)} multiplication map(s)"]
    for k, m in enumerate(maps):
        lines.append(f"map {k} (orbit size {m.orbit_size}):")
        for prod, terms in m.to_json(t)["products"].items():
            rhs = " + ".join(f"{c} {b}" if c != 1 else b for b, c in terms.items()) or "0"
            lines.append(f"  {prod} = {rhs}")
    emit(payload, fmt, lines)
    return EXIT_OK if maps else EXIT_FAIL


def cmd_fusiongraph(args, fmt, tol) -> int:
    try:
        if args.triple:
            t = _triple(args.triple)
            maps = _maps(args, t)
            if not 0 <= args.map < len(maps):
                raise InputError(f"--map {args.map} out of range (found {len(maps)} maps)")
            g = fusion.fusion_graph(maps[args.map], args.x, t)
        elif args.module:
            g = fusion.fusion_graph(_load_bimodule(args.module), args.x)
        else:
            raise InputError("fusiongraph needs --triple K L M (with --map ID) or --module SPEC")
    except fusion.FusionError as exc:
        raise InputError(str(exc)) from None
    payload = {"x": args.x, "left": list(g.left_labels), "right": list(g.right_labels),
               "adjacency": g.adjacency}
    lines = [f"fusion graph of {args.x}: rows {list(g.left_labels)} cols {list(g.right_labels)}"]
    lines += ["  " + " ".join(str(int(x)) for x in row) for row in g.adjacency]
    emit(payload, fmt, lines, graph_to_dot(g, "X"))
    return EXIT_OK


# ---------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "dot", "text"), default=argparse.SUPPRESS,
                        help="output format (default json)")
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS,
                        help=f"tolerance (default $COMMSQ_TOL or {DEFAULT_TOL})")
    p = _Parser(prog="commsq", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", parents=[common], help="verify a catalog entry or connection JSON")
    v.add_argument("target", help=f"one of {', '.join(catalog.CATALOG_NAMES)} or a JSON path")
    v.add_argument("--export", default=None, help="write the connection JSON here")
    v.set_defaults(func=cmd_verify)

    n = sub.add_parser("norms", parents=[common], help="graph norms against the known index list")
    n.set_defaults(func=cmd_norms)

    f = sub.add_parser("factorize", parents=[common], help="factorizations G = HK")
    f.add_argument("--graph", required=True,
                   help=f"{', '.join(NAMED_GRAPHS)}, star:k1,k2,..., or a graph/matrix JSON path")
    f.add_argument("--target-norm-sq", type=float, default=None)
    f.add_argument("--raw-count", action="store_true", help="also report the labeled count")
    f.add_argument("--list", action="store_true", help="include every factorization")
    f.set_defaults(func=cmd_factorize)

    s = sub.add_parser("fourstar", parents=[common], help="4-star family point or index table")
    s.add_argument("mode", nargs="?", default=None, help="'table' for the index table")
    s.add_argument("--i", type=int)
    s.add_argument("--j", type=int)
    s.add_argument("--s", type=float)
    s.add_argument("--export", default=None, help="write the connection JSON here")
    s.add_argument("--max", type=int, default=None)
    s.set_defaults(func=cmd_fourstar)

    for name, func, hlp in (("multmaps", cmd_multmaps, "multiplication maps on a triple"),
                            ("fusiongraph", cmd_fusiongraph, "fusion graph of an element")):
        m = sub.add_parser(name, parents=[common], help=hlp)
        m.add_argument("--triple", nargs=3, metavar=("K", "L", "M"),
                       required=(name == "multmaps"),
                       help="bimodule JSON paths, ring JSON paths or regular:RING")
        m.add_argument("--skip-c-prime", action="store_true")
        m.add_argument("--literal-d", action="store_true",
                       help="use condition (d) with the j indices in printed order")
        m.add_argument("--raw", action="store_true", help="do not identify maps under Aut(M)")
        if name == "fusiongraph":
            m.add_argument("--map", type=int, default=0, help="map id from multmaps")
            m.add_argument("--x", required=True, help="basis label of the acting element")
            m.add_argument("--module", default=None, help="bimodule or ring (acting on itself)")
        m.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        tol = getattr(args, "tol", None)
        tol = default_tol() if tol is None else tol
        if not tol > 0:
            raise InputError("--tol must be positive")
        return args.func(args, getattr(args, "format", "json"), tol)
    except InputError as exc:
        sys.stderr.write(f"commsq: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
