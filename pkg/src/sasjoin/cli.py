"""Command line interface: ``sasjoin <command> ...``.

Exit codes: 0 success, 1 a false verdict under ``--strict``, 2 bad input,
3 an internal invariant failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from typing import Callable, Optional

import jsonschema

from . import bott, cscs, join, search, topology

EXIT_OK, EXIT_VERDICT, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3

_pair = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2, "maxItems": 2}
_num = {"oneOf": [{"type": "integer"}, {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}]}
_bigint = {"oneOf": [{"type": "integer", "minimum": 1}, {"type": "string", "pattern": r"^[1-9]\d*$"}]}

SCHEMAS: dict[str, dict] = {
    "orbifold": {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "Bott orbifold",
        "type": "object",
        "required": ["n"],
        "properties": {
            "n": {"type": "integer", "minimum": 1},
            "A": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
            "m": {"type": "array", "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}},
            "class": {"type": "array", "items": _num},
        },
        "additionalProperties": False,
    },
    "tower": {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "Iterated join tower",
        "type": "object",
        "required": ["stages"],
        "properties": {
            "base": {
                "type": "object",
                "required": ["height", "upsilon"],
                "properties": {"height": {"type": "integer", "minimum": 1}, "upsilon": _bigint},
                "additionalProperties": False,
            },
            "stages": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["w"],
                    "properties": {"w": _pair, "l": _pair, "v": _pair},
                    "additionalProperties": False,
                },
            },
        },
        "additionalProperties": False,
    },
    "seed": {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "Search seed",
        "type": "object",
        "required": ["index", "upsilon"],
        "anyOf": [{"required": ["height"]}, {"required": ["dimension"]}],
        "properties": {
            "height": {"type": "integer", "minimum": 1},
            "dimension": {"type": "integer", "minimum": 3},
            "index": {"type": "integer", "minimum": 1},
            "provenance": {"type": "string"},
            "primitive": {"type": "boolean"},
            "parameter": {"type": "string"},
            "upsilon": {
                "type": "object",
                "properties": {
                    "constant": _bigint,
                    "constant_factorization": {"type": "object", "additionalProperties": {"type": "integer"}},
                    "constant_sign": {"enum": [1, -1]},
                    "factors": {"type": "array", "items": {"type": "array", "items": _num, "minItems": 2}},
                    "poly_factors": {"type": "array", "items": {"type": "array", "items": _num, "minItems": 2}},
                },
                "oneOf": [{"required": ["constant"]}, {"required": ["constant_factorization"]}],
            },
        },
    },
    "ledger_entry": {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "Search ledger line",
        "type": "object",
        "required": ["seed", "w", "v", "l", "stage", "upsilon", "residues", "verdict", "reason"],
        "properties": {
            "w": _pair, "v": _pair, "l": _pair,
            "stage": {"type": "object", "required": ["s", "m", "n"]},
            "residues": {"type": "object", "required": ["modulus", "admissible"]},
            "verdict": {"enum": ["smooth-family", "rejected"]},
            "reason": {"type": "string"},
        },
    },
}


class CliInputError(Exception):
    pass


def _load(path: str, schema: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as e:
        raise CliInputError(f"cannot read {path}: {e.strerror}")
    except json.JSONDecodeError as e:
        raise CliInputError(f"{path} is not valid JSON: {e}")
    try:
        jsonschema.validate(data, SCHEMAS[schema])
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise CliInputError(f"{path}: schema violation at {where}: {e.message}")
    return data


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=True)


def _b(x: bool) -> str:
    return "true" if x else "false"


# --------------------------------------------------------------------------
# commands: each returns (report, text lines, verdict)

def cmd_bott_check(args):
    data = _load(args.input, "orbifold")
    orb = bott.BottOrbifold.from_json({k: v for k, v in data.items() if k != "class"})
    rep = bott.log_fano_table(orb)
    out = {
        "input": orb.to_json(),
        "c1_orb": bott.c1_orb(orb).to_json(),
        **rep.to_json(),
        "failing_bases": [c.basis.label for c in rep.failing],
    }
    lines = [f"log Fano: {_b(rep.verdict)}"]
    for c in rep.table:
        lines.append(f"  c1_orb in basis {c.basis.label}: {' '.join(str(x) for x in c.coeffs)}")
    for c in rep.failing:
        lines.append(f"offending basis: {c.basis.label}")
    if rep.verdict and orb.is_integral():
        fi = bott.fano_index_report(orb)
        out["fano_index"] = fi.index
        lines.append(f"Fano index: {fi.index}")
    cls = data.get("class")
    if args.ample is not None:
        cls = [x.strip() for x in args.ample.split(",")]
    verdict = rep.verdict
    if cls is not None:
        if len(cls) != orb.n:
            raise CliInputError(f"class has {len(cls)} coefficients, expected {orb.n}")
        d = bott.ClassVector.in_x([Fraction(str(x)) for x in cls])
        amp = bott.is_ample(d, orb)
        out["class"] = d.to_json()
        out["ample"] = amp
        lines.append(f"ample: {_b(amp)}")
    return out, lines, verdict


def _load_tower(path):
    data = _load(path, "tower")
    if "base" in data:
        return join.BasedTower.from_json(data)
    if data["stages"][0].get("l") is not None:
        raise CliInputError("stage 1 carries w only; put l on stages 2..k")
    return join.JoinTower.from_json(data)


def cmd_join_analyze(args):
    tower = _load_tower(args.input)
    if isinstance(tower, join.BasedTower):
        stages = join.analyze_over_base(tower)
        top = stages[-1]
        out = {"input": tower.to_json(), "stages": [s.to_json() for s in stages], "smooth": top.smoothness.smooth}
        lines = []
        for s in stages:
            inv = s.invariants
            if inv is not None:
                lines.append(f"stage {s.k}: s={inv.s} m={inv.m} n={inv.n}")
                lines.append(f"  Upsilon_{s.k} = {s.upsilon}")
            lines.append(f"  smooth: {_b(s.smoothness.smooth)}")
        lines.append(f"smooth: {_b(top.smoothness.smooth)}")
        return out, lines, top.smoothness.smooth
    a = join.analyze_tower(tower)
    out = a.to_json()
    lines = []
    for s in a.stages:
        inv = s.invariants
        lines.append(f"stage {s.k}: s={inv.s} m={inv.m} n={inv.n} A_row={list(s.row)}")
        lines.append(f"  Upsilon_{s.k} = {s.upsilon}")
        lines.append(f"  smooth: {_b(s.smoothness.smooth)}")
    if tower.height >= 2:
        st2 = tower.stages[1]
        c = join.stage2_c1(st2.l, st2.w)
        out["stage2_c1"] = {"coefficient": c.coefficient, "bundle": c.bundle, "gorenstein": c.gorenstein}
        lines.append(f"stage-2 c1 coefficient: {c.coefficient} ({c.bundle} bundle)")
        lines.append(f"Gorenstein: {_b(c.gorenstein)}")
    if a.stages:
        lf = bott.is_log_fano(a.orbifold)
        out["quotient_log_fano"] = lf
        lines.append(f"quotient log Fano: {_b(lf)}")
    lines.append(f"smooth: {_b(a.smooth)}")
    return out, lines, a.smooth


def cmd_join_smooth(args):
    tower = _load_tower(args.input)
    if isinstance(tower, join.BasedTower):
        cert = join.analyze_over_base(tower)[-1].smoothness
    else:
        if tower.height < 2:
            raise CliInputError("smoothness is a statement about a join: need at least two stages")
        a = join.analyze_tower(tower)
        cert = a.final_smoothness or a.stages[-1].smoothness
    out = {"input": tower.to_json(), "stage": tower.height, "certificate": cert.to_json()}
    lines = [f"smooth: {_b(cert.smooth)}", f"gcd({cert.left}, {cert.right}) = {cert.gcd}"]
    if cert.witness_prime is not None:
        lines.append(f"witness prime: {cert.witness_prime}")
    return out, lines, cert.smooth


def cmd_cscs_count(args):
    l, w = (args.l0, args.linf), (args.w0, args.winf)
    rc = cscs.count_csc_rays(l, w)
    th = cscs.threshold_interval(args.l0, w, Fraction(args.width))
    cls = th.classify(args.linf)
    out = {
        "params": {"l": list(l), "w": list(w), "d_N": 1},
        "count": rc.count,
        "roots": [r.to_json() for r in rc.roots],
        "quasi_regular_candidates": [str(b) for b in rc.quasi_regular_candidates],
        "threshold": {**th.to_json(), "classification": cls},
        "c1_bound_holds": cscs.multi_ray_c1_check(l, w, rc.count),
    }
    lines = [f"rays: {rc.count}"]
    for r in rc.roots:
        if r.exact is not None:
            lines.append(f"  b = {r.exact} (rational, multiplicity {r.multiplicity})")
        else:
            lines.append(f"  b in ({r.interval[0]}, {r.interval[1]}] (multiplicity {r.multiplicity})")
    lines.append(f"threshold: l_inf {cls} L")
    return out, lines, True


def cmd_cscs_threshold(args):
    w = (args.w0, args.winf)
    th = cscs.threshold_interval(args.l0, w, Fraction(args.width))
    lo, hi = cscs.threshold_bounds(args.l0, w)
    out = {"params": {"l0": args.l0, "w": list(w)}, **th.to_json(), "bounds": [str(lo), str(hi)]}
    a, b = th.interval
    lines = [f"L in ({a}, {b}]", f"known bounds: ({lo}, {hi})"]
    if args.linf is not None:
        out["classification"] = th.classify(args.linf)
        lines.append(f"l_inf = {args.linf}: {out['classification']}")
    return out, lines, True


def _seed(arg: str) -> search.SeedStructure:
    if arg in search.BUILTIN_SEEDS:
        return search.BUILTIN_SEEDS[arg]
    return search.SeedStructure.from_json(_load(arg, "seed"))


def cmd_search_se(args):
    seed = _seed(args.seed)
    ratios = [Fraction(r) for r in args.ratio] if args.ratio else None
    if (ratios is None) == (args.v_max is None):
        raise CliInputError("give exactly one of --v-max or --ratio")
    cands = search.candidate_pairs(args.w_max, v_max=args.v_max, ratios=ratios)
    out_path = args.out or os.path.join(search.default_ledger_dir(), "ledger.jsonl")
    res = search.grid_search(seed, cands, out_path, workers=args.workers,
                             include_rejected=args.include_rejected)
    accepted = [(e["w"], e["v"]) for e in res.entries if e["verdict"] == "smooth-family"]
    out = {"seed": seed.to_json(), "evaluated": res.evaluated, "written": len(res.lines),
           "accepted": [[w, v] for w, v in accepted], "ledger": out_path}
    lines = [f"evaluated: {res.evaluated}", f"smooth families: {len(accepted)}"]
    lines += [f"  w={tuple(w)} v={tuple(v)}" for w, v in accepted]
    return out, lines, True


def cmd_search_ypq(args):
    sols = search.ypq_csc_search(args.max_p)
    out = {"max_p": args.max_p, "solutions": [{"p": p, "q": q, "n": n} for p, q, n in sols]}
    return out, [f"p={p} q={q} n={n}" for p, q, n in sols], True


def cmd_topology(args):
    if (args.k is None) == (args.input is None):
        raise CliInputError("give exactly one of --k or a tower file")
    if args.k is not None:
        rep = topology.invariants(args.k)
    else:
        tower = _load_tower(args.input)
        if isinstance(tower, join.BasedTower):
            rep = topology.invariants(tower.height)
        else:
            rep = topology.tower_topology(tower)
    lines = [
        f"k = {rep.k} (dimension {rep.dimension})",
        f"pi2 rank: {rep.pi2_rank}", f"pi3 rank: {rep.pi3_rank}",
        f"H2 rank: {rep.h2_rank}", f"H3 rank: {rep.h3}",
        f"H4 free rank: {rep.h4_free_rank}",
    ]
    if rep.dim7_torsion is not None:
        a, b = rep.dim7_torsion
        lines.append(f"H4 torsion: Z_{a} + Z_{b}")
    return rep.to_json(), lines, True


def cmd_schemas(args):
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        for name, sch in SCHEMAS.items():
            with open(os.path.join(args.out_dir, f"{name}.schema.json"), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(_dump(sch) + "\n")
    return SCHEMAS, [name for name in SCHEMAS], True


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sasjoin", description="Iterated S^3_w joins and Bott orbifolds, exactly.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "text"], default="json")
    common.add_argument("--strict", action="store_true", help="exit 1 when the verdict is false")
    common.add_argument("-o", "--output", help="write the report here instead of stdout")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("bott-check", parents=[common], help="c1_orb in every invariant basis, log Fano verdict")
    s.add_argument("input")
    s.add_argument("--ample", help="comma-separated x-basis coefficients of a class to test")
    s.set_defaults(func=cmd_bott_check)

    s = sub.add_parser("join-analyze", parents=[common], help="per-stage invariants and the quotient Bott orbifold")
    s.add_argument("input")
    s.set_defaults(func=cmd_join_analyze)

    s = sub.add_parser("join-smooth", parents=[common], help="smoothness certificate of the top join")
    s.add_argument("input")
    s.set_defaults(func=cmd_join_smooth)

    s = sub.add_parser("cscs-count", parents=[common], help="number of cscS rays in the w-cone")
    for name in ("--l0", "--linf", "--w0", "--winf"):
        s.add_argument(name, type=int, required=True)
    s.add_argument("--width", default="1/1048576")
    s.set_defaults(func=cmd_cscs_count)

    s = sub.add_parser("cscs-threshold", parents=[common], help="isolate the 1 -> 3 ray threshold L")
    for name in ("--l0", "--w0", "--winf"):
        s.add_argument(name, type=int, required=True)
    s.add_argument("--linf", type=int)
    s.add_argument("--width", default="1/1048576")
    s.set_defaults(func=cmd_cscs_threshold)

    s = sub.add_parser("search-se", parents=[common], help="grid search for smooth SE family extensions")
    s.add_argument("--seed", required=True, help="seed JSON file or a built-in name (dim7, dim9)")
    s.add_argument("--w-max", type=int, required=True)
    s.add_argument("--v-max", type=int)
    s.add_argument("--ratio", action="append", help="v_inf/v_0 = ratio * w_inf/w_0 (repeatable)")
    s.add_argument("--out", help="ledger path (default: $SASJOIN_LEDGER_DIR/ledger.jsonl)")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--include-rejected", action="store_true")
    s.set_defaults(func=cmd_search_se)

    s = sub.add_parser("search-ypq", parents=[common], help="Y^{p,q} with 4p^2 - 3q^2 a square")
    s.add_argument("--max-p", type=int, required=True)
    s.set_defaults(func=cmd_search_ypq)

    s = sub.add_parser("topology", parents=[common], help="closed-form topology of M^{2k+1}")
    s.add_argument("input", nargs="?")
    s.add_argument("--k", type=int)
    s.set_defaults(func=cmd_topology)

    s = sub.add_parser("schemas", parents=[common], help="print or write the input JSON schemas")
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_schemas)
    return p


_INPUT_ERRORS = (CliInputError, bott.BottInputError, join.JoinInputError, cscs.CscInputError,
                 search.SearchInputError, ValueError, KeyError, TypeError)


def _fail(code: int, kind: str, msg: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": msg}, sort_keys=True) + "\n")
    return code


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    func: Callable = args.func
    try:
        report, lines, verdict = func(args)
    except (AssertionError, ArithmeticError) as e:
        return _fail(EXIT_INTERNAL, "invariant", str(e))
    except _INPUT_ERRORS as e:
        return _fail(EXIT_INPUT, "input", str(e))
    text = _dump(report) if args.format == "json" else "\n".join(lines)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    if args.strict and not verdict:
        return EXIT_VERDICT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
