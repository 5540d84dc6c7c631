"""Command-line front end.

Exit codes: 0 success, 1 a computed verdict failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from typing import List, Optional

from .comod import (Comodule, CyclicSum, FiltrationError, comodule_from_json, landweber_filtration,
                    primitives, validate_comodule)
from .fgl import structure_maps
from .hopf import (HeightMismatch, base_change, build_bp_algebroid, check_axioms, weq_chain)
from .landweber import (INF, algebra_from_json, height, height_certificate, is_landweber_exact)
from .localize import classify_torsion_theory, cobar_ext, hom_comodule, koszul_ext, localize
from .palgebra import AlgebraError, TruncationContext, TruncationError, format_poly

SUPPORTED_PRIMES = (2, 3, 5)


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    prime: int
    vars: int
    dmin: Optional[int]
    dmax: Optional[int]
    command: str
    paths: List[str] = field(default_factory=list)
    as_json: bool = False
    unsound: bool = False
    used_window: Optional[tuple] = None
    warnings: List[str] = field(default_factory=list)

    @property
    def ctx(self):
        return TruncationContext(self.prime, self.vars)

    def window(self, lo_default=None, hi_default=None):
        bound = self.ctx.soundness_bound
        lo = self.dmin if self.dmin is not None else (lo_default if lo_default is not None else 0)
        hi = self.dmax if self.dmax is not None else (hi_default if hi_default is not None else bound - 2)
        if lo > hi:
            raise InputError(f"empty window [{lo}, {hi}]")
        if hi >= bound:
            if not self.unsound:
                raise InputError(f"--max {hi} reaches the soundness bound {bound} for p={self.prime}, "
                                 f"N={self.vars} (pass --unsound to override)")
            self.warnings.append(f"degrees {bound}..{hi} lie past the soundness bound and were dropped; "
                                 f"rerun with --vars {self.vars + 1} to reach them")
            hi = bound - 1
            if lo > hi:
                raise InputError(f"window [{lo}, {self.dmax}] lies entirely past the soundness bound {bound}")
        self.used_window = (lo, hi)
        return lo, hi

    def stamp(self):
        st = self.ctx.stamp()
        st["window"] = list(self.used_window) if self.used_window else None
        if self.warnings:
            st["warnings"] = list(self.warnings)
        return st


@dataclass
class Report:
    command: str
    ok: bool
    body: dict
    text: List[str]
    stamp: dict
    seconds: float = 0.0

    def to_json(self):
        return {"command": self.command, "ok": self.ok, "result": self.body, "stamp": self.stamp,
                "seconds": round(self.seconds, 3)}


def _load(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"{path}: no such file")
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}")


def _algebra(cfg, path):
    return algebra_from_json(_load(path), cfg.prime, cfg.vars)


def _module(cfg, path):
    return comodule_from_json(_load(path), cfg.prime, cfg.vars)


def _h(x):
    return "inf" if x == INF else x


def _table_lines(rows):
    return [f"{d:>5}  {v}" for d, v in rows]


# -- subcommands ---------------------------------------------------------------------

def cmd_etaR(cfg, args):
    T = structure_maps(cfg.prime, cfg.vars)
    if not 1 <= args.n <= cfg.vars:
        raise InputError(f"--n must lie in 1..{cfg.vars}")
    s = format_poly(T.etaR[args.n])
    return True, {"n": args.n, "etaR": s}, [s]


def cmd_algebroid(cfg, args):
    if args.action != "check":
        raise InputError("algebroid supports the action 'check'")
    H = build_bp_algebroid(cfg.ctx)
    if args.base:
        H, _ = base_change(H, _algebra(cfg, args.base))
    if args.max_deg is not None:
        cfg.dmax = args.max_deg
    lo, hi = cfg.window(0, cfg.ctx.soundness_bound - 1)
    r = check_axioms(H, (lo, hi))
    lines = [f"{H.label}: {'pass' if r['pass'] else 'FAIL'} in degrees [{lo}, {hi}]"]
    if r["first_failure"]:
        f = r["first_failure"]
        lines.append(f"first failure: {f['law']} at {f['generator']} (degree {f['degree']})")
    return r["pass"], r, lines


def cmd_comodule(cfg, args):
    M = _module(cfg, args.path)
    if isinstance(M, CyclicSum):
        body = {"module": M.describe(), "valid": True, "note": "cyclic sums carry the trivial coaction"}
        return True, body, [f"{M.describe()}: valid"]
    r = validate_comodule(M)
    lines = [f"{M.label or 'comodule'}: {'valid' if r['valid'] else 'INVALID'}"]
    if r["first_failure"]:
        lines.append(f"first failure: {r['first_failure']}")
    return r["valid"], r, lines


def cmd_primitives(cfg, args):
    M = _module(cfg, args.path)
    lo, hi = cfg.window(0)
    rows = []
    for d in range(lo, hi + 1):
        pr = primitives(M, d) if isinstance(M, Comodule) else M.primitives(d)
        rows.append((d, pr))
    body = {"degrees": {str(d): pr.to_json() for d, pr in rows}, "window": [lo, hi]}
    return True, body, _table_lines([(d, f"{pr.structure.describe():<12} {', '.join(pr.basis)}")
                                     for d, pr in rows])


def cmd_filtrate(cfg, args):
    M = _module(cfg, args.path)
    try:
        rec = landweber_filtration(M, stage_bound=args.stage_bound)
    except FiltrationError as e:
        return False, {"error": str(e), "partial": e.partial}, [f"filtration failed: {e}"]
    lines = [f"stage {i}: s^{t} {rec.base}/I_{j}   witness {w}"
             for i, ((t, j), w) in enumerate(zip(rec.stages, rec.witnesses))]
    lines.append(f"reassembles: {rec.reassembles}")
    return rec.reassembles, rec.to_json(), lines


def cmd_localize(cfg, args):
    M = _module(cfg, args.path)
    lo, hi = cfg.window(-20, 20)
    r = localize(M, args.n, (lo, hi))
    lines = [f"L_{args.n}: {r.module.describe()}   (verified: {r.verified})"]
    lines += _table_lines([(d, r.module.structure(d).describe()) for d in range(lo, hi + 1)])
    return r.verified, r.to_json(), lines


def cmd_height(cfg, args):
    B = _algebra(cfg, args.path)
    h = height(B)
    return True, {"height": _h(h), "certificate": height_certificate(B)}, [str(_h(h))]


def cmd_exactness(cfg, args):
    B = _algebra(cfg, args.path)
    r = is_landweber_exact(B)
    return True, r, [f"{B.label}: {'Landweber exact' if r['exact'] else 'not Landweber exact'}"]


def cmd_hom(cfg, args):
    B = _algebra(cfg, args.algebra)
    M = _module(cfg, args.module)
    lo, hi = cfg.window(-12, 12)
    tab = hom_comodule(B, M, (lo, hi))
    body = {"algebra": B.label, "window": [lo, hi],
            "degrees": {str(d): pr.to_json() for d, pr in tab.items()}}
    return True, body, _table_lines([(d, pr.structure.describe()) for d, pr in tab.items()])


def cmd_classify(cfg, args):
    M = _module(cfg, args.path)
    r = classify_torsion_theory(M, stage_bound=args.stage_bound)
    if r["n"] is None:
        return False, r, [r["verdict"]]
    return True, r, [str(r["n"])]


def cmd_ext(cfg, args):
    M = _module(cfg, args.path)
    lo, hi = cfg.window(0, 12)
    if args.koszul is not None:
        tab = koszul_ext(M, args.koszul, args.s, (lo, hi))
    else:
        tab = cobar_ext(M, args.s, (lo, hi))
    rows = [(f"{s},{d}", v.describe()) for (s, d), v in sorted(tab.entries.items()) if s == args.s]
    return True, tab.to_json(), [f"{k:>7}  {v}" for k, v in rows]


def cmd_weq(cfg, args):
    B, B2 = _algebra(cfg, args.left), _algebra(cfg, args.right)
    try:
        w = weq_chain(B, B2)
    except HeightMismatch as e:
        return False, {"error": str(e), "heights": [_h(height(B)), _h(height(B2))]}, [f"no chain: {e}"]
    d = w.describe()
    return w.valid, d, [d["chain"], f"heights: {d['heights']}", f"valid: {w.valid}"]


COMMANDS = {"etaR": cmd_etaR, "algebroid": cmd_algebroid, "comodule": cmd_comodule,
            "primitives": cmd_primitives, "filtrate": cmd_filtrate, "localize": cmd_localize,
            "height": cmd_height, "exactness": cmd_exactness, "hom": cmd_hom,
            "classify": cmd_classify, "ext": cmd_ext, "weq": cmd_weq}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--prime", type=int, default=2)
    common.add_argument("--vars", type=int, default=3)
    common.add_argument("--min", dest="dmin", type=int)
    common.add_argument("--max", dest="dmax", type=int)
    common.add_argument("--json", action="store_true")
    common.add_argument("--unsound", action="store_true",
                        help="clip windows that reach the soundness bound instead of failing (stamped with a warning)")
    ap = argparse.ArgumentParser(prog="chromatic-comod", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("etaR", parents=[common])
    p.add_argument("--n", type=int, required=True)
    p = sub.add_parser("algebroid", parents=[common])
    p.add_argument("action")
    p.add_argument("--max-deg", type=int)
    p.add_argument("--base")
    for name in ("comodule", "primitives", "height", "exactness"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("path")
    for name in ("filtrate", "classify"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("path")
        p.add_argument("--stage-bound", type=int, default=32)
    p = sub.add_parser("localize", parents=[common])
    p.add_argument("path")
    p.add_argument("--n", type=int, required=True)
    p = sub.add_parser("hom", parents=[common])
    p.add_argument("--algebra", required=True)
    p.add_argument("--module", required=True)
    p = sub.add_parser("ext", parents=[common])
    p.add_argument("path")
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--koszul", type=int, help="Koszul Ext over A on I_K instead of cobar Ext")
    p = sub.add_parser("weq", parents=[common])
    p.add_argument("left")
    p.add_argument("right")
    return ap


def run(argv=None, out=None):
    out = out or sys.stdout
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    cfg = RunConfig(args.prime, args.vars, args.dmin, args.dmax, args.command, as_json=args.json,
                    unsound=args.unsound)
    t0 = time.perf_counter()
    try:
        if cfg.prime not in SUPPORTED_PRIMES:
            raise InputError(f"prime {cfg.prime} not supported (use one of {SUPPORTED_PRIMES})")
        ok, body, lines = COMMANDS[args.command](cfg, args)
    except (InputError, AlgebraError, TruncationError) as e:
        msg = f"error: {e}"
        if cfg.as_json:
            print(json.dumps({"command": args.command, "ok": False, "error": str(e)}), file=out)
        else:
            print(msg, file=sys.stderr)
        return 2
    rep = Report(args.command, ok, body, lines, cfg.stamp(), time.perf_counter() - t0)
    if cfg.as_json:
        print(json.dumps(rep.to_json(), sort_keys=True, default=str), file=out)
    else:
        for w in cfg.warnings:
            print(f"warning: {w}", file=sys.stderr)
        st = rep.stamp
        print(f"# p={st['p']} N={st['N']} window={st['window']} bound={st['soundness_bound']}", file=out)
        for line in lines:
            print(line, file=out)
    return 0 if ok else 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
