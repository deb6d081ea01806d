"""Command-line entry point.

Every command prints one JSON document (sorted keys, reports sorted by name)
to stdout or ``--output``.  Exit status: 0 when every mandatory check passed,
1 when one failed, 2 on invalid input.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bellman as bm
from .constants import (
    ConstantKind,
    classical_constant,
    constant_result,
    iwaniec_verde_sandwich,
    stein_sandwich,
)
from .convexity import DEFAULT_DOUBLING_CAP, FunctionFamily, sweep_lower_bound, sweep_upper_bound
from .dyadic import DyadicWeight, doubling_constant
from .generators import KINDS, GeneratorSpec, extremal_search, generate, weight_corpus
from .reports import Report, SchemaError, read_weight, weight_to_dict
from .summation import BuckleyKind, buckley_constant, comparability_report, fkp_check, representation_check

__all__ = ["build_parser", "main"]

LOG16 = math.log(16.0)


class UsageError(ValueError):
    """Invalid command-line input (exit status 2)."""


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _md(args, w: DyadicWeight | None = None) -> dict:
    depth = w.depth if w is not None else getattr(args, "depth", None)
    return {"seed": getattr(args, "seed", None), "depth": depth, "timestamp": None}


def _scalars(**kw) -> dict:
    """Drop entries that are ``None`` or not finite."""
    return {k: float(v) for k, v in kw.items() if v is not None and math.isfinite(float(v))}


def _need_seed(args) -> int:
    if args.seed is None:
        raise UsageError(f"--seed is required for {args.command}")
    return args.seed


def _load(args) -> DyadicWeight:
    if not args.input:
        raise UsageError("--input is required")
    return read_weight(args.input)


def _csv(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _families(args) -> list[FunctionFamily]:
    if args.family:
        return [FunctionFamily.parse(t) for t in _csv(args.family)]
    p = args.p
    return [FunctionFamily("power", 2.0), FunctionFamily("power", p), FunctionFamily("xlogx"),
            FunctionFamily("negpower", p), FunctionFamily("log")]


def _dedup(fams: list[FunctionFamily]) -> list[FunctionFamily]:
    seen, out = set(), []
    for f in fams:
        if f.label not in seen:
            seen.add(f.label)
            out.append(f)
    return out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_constants(args) -> tuple[list[Report], dict]:
    w = _load(args)
    default = "Ap,Ainf,RHp,RH1" + (",WeakRHp,WeakRH1" if w.depth > 0 else "")
    kinds = [ConstantKind.parse(t, args.p) for t in _csv(args.kinds or default)]
    reports, table = [], []
    for kind in kinds:
        res = constant_result(w, kind)
        reports.append(Report(kind.label, _scalars(value=res.value), {"pass": True}, res.argmax, _md(args, w)))
        table.append({"kind": kind.label, "value": res.value, "argmax_interval": list(res.argmax)})
    return reports, {"constants": sorted(table, key=lambda d: d["kind"])}


def cmd_sums(args) -> tuple[list[Report], dict]:
    w = _load(args)
    default = "RHpB,ApB,AinfB" + (",WeakRHpB" if w.depth > 0 else "")
    reports = []
    for t in _csv(args.kinds or default):
        kind = BuckleyKind.parse(t, args.p)
        val, arg = buckley_constant(w, kind, with_argmax=True)
        reports.append(Report(kind.label, _scalars(value=val), {"pass": True}, arg, _md(args, w)))
    for fam in _dedup(_families(args)):
        r = representation_check(w, fam, cap=args.cap, tol=args.tol_node)
        reports.append(Report(
            f"representation:{fam.label}",
            _scalars(sum=r.sum, gap=r.gap, ratio=r.ratio, bound_lower=r.bound_lower, bound_upper=r.bound_upper),
            {"pass": r.lower_ok and r.upper_ok, "doubling_exempt": r.doubling_exempt,
             "degenerate": r.degenerate, "lower_ok": r.lower_ok, "upper_ok": r.upper_ok},
            None, _md(args, w)))
    return reports, {}


def cmd_verify(args) -> tuple[list[Report], dict]:
    w = _load(args)
    md = _md(args, w)
    reports = []
    cap = args.cap

    rh1 = classical_constant(w, ConstantKind("RH1"))
    ainf = classical_constant(w, ConstantKind("Ainf"))
    reports.append(Report("rh1_ainf_bound", _scalars(lhs=rh1, rhs=LOG16 * ainf, ratio=rh1 / ainf),
                          {"pass": rh1 <= LOG16 * ainf + args.tol}, None, md))

    for fam in _dedup(_families(args)):
        # the square has the sharp integral constant; the others use the a-priori one
        q = 1.0 if fam.tag == "power" and fam.p == 2.0 else None
        up = sweep_upper_bound(w, fam, q, tol=args.tol_node)
        reports.append(Report(f"square_sum_upper:{fam.label}", _scalars(margin=up.margin, C=up.constant),
                              {"pass": up.passed}, up.worst, md))
        lo = sweep_lower_bound(w, fam, cap=cap, tol=args.tol_node)
        reports.append(Report(f"square_sum_lower:{fam.label}", _scalars(margin=lo.margin, beta=lo.constant),
                              {"pass": lo.passed, "applicable": lo.applicable}, lo.worst, md))
        r = representation_check(w, fam, cap=cap, tol=args.tol_node)
        reports.append(Report(
            f"representation:{fam.label}",
            _scalars(sum=r.sum, gap=r.gap, ratio=r.ratio, bound_lower=r.bound_lower, bound_upper=r.bound_upper),
            {"pass": r.lower_ok and r.upper_ok, "doubling_exempt": r.doubling_exempt},
            None, md))

    comp = comparability_report(w, args.p, cap=cap, tol=args.tol)
    for pr in comp.pairs:
        reports.append(Report(f"comparability:{pr.name}",
                              _scalars(value=pr.classical, lhs=pr.buckley, bound_lower=pr.lower, bound_upper=pr.upper),
                              {"pass": pr.lower_ok and pr.upper_ok, "doubling_exempt": pr.exempt}, None, md))

    f = fkp_check(w, tol=args.tol_node)
    reports.append(Report("log_square_sum", _scalars(sum=f.sum, bound=f.bound16),
                          {"pass": f.passed, "sharp8_violated": f.sharp8_violated}, None, md))

    s = stein_sandwich(w)
    reports.append(Report("stein_sandwich", _scalars(lower_margin=s.lower_margin, upper_margin=s.upper_margin),
                          {"pass": s.passed(args.tol_node)}, None, md))
    for norm in ("average", "integral"):
        s = iwaniec_verde_sandwich(w, norm)
        # only the average normalization is a mandatory contract
        flags = {"pass": s.passed(args.tol_node)} if norm == "average" else {"holds": s.passed(args.tol_node)}
        reports.append(Report(f"llogl_norm_sandwich:{norm}",
                              _scalars(lower_margin=s.lower_margin, upper_margin=s.upper_margin), flags, None, md))

    if ainf > 1.0 + 1e-12:
        b = bm.dyadic_bound_check(w, ainf)
        reports.append(Report("bellman_bound", _scalars(lhs=b.lhs, rhs=b.rhs, Q=b.Q, Q0=b.Q0),
                              {"pass": b.passed, "applicable": b.applicable}, None, md))
    return reports, {}


def cmd_bellman(args) -> tuple[list[Report], dict]:
    sub = args.bellman_command
    md = _md(args)
    if sub == "eval":
        if args.x is None or args.y is None or args.q is None:
            raise UsageError("bellman eval needs --x, --y and --q")
        v = bm.bellman_value(args.x, args.y, args.q)
        return [Report("bellman_value", _scalars(x=args.x, y=args.y, Q=args.q, value=v), {"pass": True},
                       None, md)], {}
    if args.q is None:
        raise UsageError(f"bellman {sub} needs --q")
    Q = args.q
    if sub == "q0":
        seed = _need_seed(args)
        direct = bm.solve_q0(Q, "direct")
        closed = bm.solve_q0(Q, "closed_form")
        chosen = direct if args.q0_mode == "direct" else closed
        mc = bm.monte_carlo_concavity(Q, args.samples, seed, Q0=chosen.Q0)
        ok_root = chosen.Q0 > Q and abs(direct.residual) < args.tol_residual
        ok_mc = mc["min_deficit"] >= -args.tol_deficit
        rep = Report(f"q0:{args.q0_mode}",
                     _scalars(Q=Q, Q0=chosen.Q0, Q0_direct=direct.Q0, Q0_closed_form=closed.Q0,
                              Q0_ratio=direct.Q0 / Q, residual=direct.residual,
                              residual_closed_form=closed.residual, min_deficit=mc["min_deficit"],
                              samples=args.samples, seed=seed),
                     {"pass": bool(ok_root and ok_mc), "root_ok": bool(ok_root), "concavity_ok": bool(ok_mc)},
                     None, md)
        extra = {"Q": Q, "Q0_direct": direct.Q0, "Q0_closed_form": closed.Q0, "min_deficit": mc["min_deficit"],
                 "samples": args.samples, "seed": seed}
        return [rep], extra
    Q0 = bm.solve_q0(Q, args.q0_mode).Q0
    if sub == "scan":
        lo, hi = math.log(Q0 / Q), math.log(Q0)
        alpha = 0.5 * (lo + hi) if args.alpha is None else args.alpha
        r = bm.reduced_delta_scan(Q, Q0, alpha, tol=args.tol_scan)
        sc = _scalars(Q=Q, Q0=Q0, alpha=alpha, grid_min=r.grid_min,
                      vertex_min=min(r.vertex_values.values()), count=r.points)
        return [Report("reduced_delta_scan", sc, {"pass": r.match}, None, md)], {}
    if sub == "vertices":
        out = []
        n = max(int(args.samples), 3) if args.samples else 2001
        for name in ("M", "N"):
            lo, hi = bm.vertex_range(name, Q)
            x = np.linspace(lo, hi, n)
            d = np.asarray(bm.vertex_delta(name, x, Q, Q0))
            slopes = np.diff(d) / np.diff(x)
            right = float(d[-1])
            if name == "M":
                flags = {"pass": right >= -args.tol_node, "nonincreasing": bool(slopes.max() <= 1e-8),
                         "nonnegative": bool(d.min() >= -args.tol_node)}
            else:
                flags = {"pass": abs(right) <= 1e-8, "nonnegative": bool(d.min() >= -1e-8)}
            out.append(Report(f"vertex:{name}",
                              _scalars(Q=Q, Q0=Q0, x_lo=lo, x_hi=hi, max_slope=float(slopes.max()),
                                       right_value=right, grid_min=float(d.min()), count=n),
                              flags, None, md))
        return out, {}
    if sub == "oracle":
        seed = _need_seed(args)
        if args.x is None or args.y is None:
            raise UsageError("bellman oracle needs --x and --y")
        pieces = 1 << (3 if args.depth is None else args.depth)
        trials = 20 if args.trials is None else args.trials
        r = extremal_search(args.x, args.y, Q, pieces, trials, seed=seed)
        v = float(bm.bellman_value(args.x, args.y, Q))
        gap = (v - r.best_value) / max(1.0, abs(v))
        return [Report("extremal_oracle",
                       _scalars(x=args.x, y=args.y, Q=Q, value=v, oracle=r.best_value, gap_relative=gap,
                                trials=trials, seed=seed),
                       {"pass": r.best_value <= v + 1e-8, "within_5_percent": bool(gap <= 0.05)},
                       None, md)], {}
    raise UsageError(f"unknown bellman subcommand {sub!r}")


def cmd_sharpness(args) -> tuple[list[Report], dict]:
    seed = _need_seed(args)
    depth = 10 if args.depth is None else args.depth
    corpus = weight_corpus(10_000 if args.trials is None else args.trials, seed, max_depth=depth)
    ratios = np.empty(len(corpus))
    failures = 0
    for i, w in enumerate(corpus):
        rh1 = classical_constant(w, ConstantKind("RH1"))
        ainf = classical_constant(w, ConstantKind("Ainf"))
        ratios[i] = rh1 / ainf
        failures += rh1 > LOG16 * ainf + args.tol
    rep = Report("rh1_ainf_sharpness",
                 _scalars(max_ratio=float(ratios.max()), mean_ratio=float(ratios.mean()), bound=LOG16,
                          count=len(corpus), failures=failures, seed=seed, depth=depth),
                 {"pass": failures == 0}, None, {"seed": seed, "depth": depth, "timestamp": None})
    return [rep], {}


def _parse_params(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects key=value, got {item!r}")
        if key == "leaves":
            out[key] = [float(v) for v in _csv(val)]
        elif key == "split":
            out[key] = int(val)
        else:
            out[key] = float(val)
    return out


def cmd_gen(args) -> dict:
    depth = 10 if args.depth is None else args.depth
    if args.kind == "cascade":
        _need_seed(args)
    spec = GeneratorSpec(args.kind, depth, args.seed, _parse_params(args.param))
    try:
        w = generate(spec)
    except KeyError as exc:
        raise UsageError(f"generator {args.kind} needs --param {exc.args[0]}=...") from None
    return weight_to_dict(w)


# ---------------------------------------------------------------------------
# parser and entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="weight file (JSON or CSV)")
    common.add_argument("--output", help="write the JSON document here instead of stdout")
    common.add_argument("--p", type=float, default=2.0, help="exponent p > 1 (default 2)")
    common.add_argument("--q", type=float, help="domain parameter Q > 1")
    common.add_argument("--q0-mode", "--mode", dest="q0_mode", choices=("direct", "closed_form"), default="direct")
    common.add_argument("--depth", type=int)
    common.add_argument("--trials", type=int, help="restarts (oracle, default 20) or weights (sharpness, default 10000)")
    common.add_argument("--samples", type=int, default=100_000)
    common.add_argument("--seed", type=int)
    common.add_argument("--family", help="comma list of power:p, xlogx, negpower:p, log")
    common.add_argument("--kinds", help="comma list of constant kinds, e.g. Ap:3,RH1")
    common.add_argument("--cap", type=float, default=DEFAULT_DOUBLING_CAP, help="doubling cap C (default 16)")
    common.add_argument("--tol", type=float, default=1e-9, help="tolerance for constant-level bounds")
    common.add_argument("--tol-node", type=float, default=1e-10, help="relative tolerance for node-level bounds")
    common.add_argument("--tol-deficit", type=float, default=1e-9, help="midpoint deficit tolerance")
    common.add_argument("--tol-residual", type=float, default=1e-12, help="Q0 root residual tolerance")
    common.add_argument("--tol-scan", type=float, default=1e-6, help="scan versus vertex tolerance")

    parser = argparse.ArgumentParser(prog="dyadic-weights", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("constants", parents=[common], help="Muckenhoupt and reverse Hoelder constants")
    sub.add_parser("sums", parents=[common], help="summation constants and representation checks")
    sub.add_parser("verify", parents=[common], help="full inequality suite on one weight")
    b = sub.add_parser("bellman", help="Bellman function tools")
    bsub = b.add_subparsers(dest="bellman_command", required=True)
    for name in ("eval", "q0", "scan", "vertices", "oracle"):
        sp = bsub.add_parser(name, parents=[common])
        sp.add_argument("--x", type=float)
        sp.add_argument("--y", type=float)
        if name == "scan":
            sp.add_argument("--alpha", type=float)
    s = sub.add_parser("sharpness", parents=[common], help="RH1 / Ainf ratio over generated weights")
    g = sub.add_parser("gen", parents=[common], help="write a generated weight")
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--param", action="append", help="generator parameter key=value (repeatable)")
    return parser


COMMANDS = {"constants": cmd_constants, "sums": cmd_sums, "verify": cmd_verify,
            "bellman": cmd_bellman, "sharpness": cmd_sharpness}


def _emit(doc: dict, output: str | None) -> None:
    text = json.dumps(doc, allow_nan=False, indent=2, sort_keys=True) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    label = args.command + (f" {args.bellman_command}" if args.command == "bellman" else "")
    try:
        if args.command == "gen":
            _emit(cmd_gen(args), args.output)
            return 0
        reports, extra = COMMANDS[args.command](args)
        reports = sorted(reports, key=lambda r: r.name)
        passed = all(r.flags.get("pass", True) for r in reports)
        doc = {"command": label, "passed": passed, "reports": [r.to_dict() for r in reports],
               "failed": [r.name for r in reports if not r.flags.get("pass", True)]}
        doc.update(extra)
        _emit(doc, args.output)
        return 0 if passed else 1
    except (UsageError, SchemaError, ValueError, OverflowError, OSError) as exc:
        err = {"command": label, "error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return 2
    except RuntimeError as exc:
        # numerical failure (e.g. no root bracket): a failed check, not bad input
        err = {"command": label, "error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
