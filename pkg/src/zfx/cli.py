"""zfx: command-line harness over the extractor, coloring and upper-bound modules.

Reports are canonical JSON (sorted keys, floats with 17 significant
digits) or a fixed-column CSV. Wall time goes to stderr so that a report
depends only on its configuration.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, bounds, guards, probcore, shiftlab, stepup, symfix
from .combi import parallel_map
from .errors import InvalidArgumentError, ResourceLimitError, SearchFailure, VerificationFailure, ZfxError

SUBCOMMANDS = ("verify-stepup", "verify-shift", "search-f2", "color-shift", "disperser-check",
               "upper-bound", "tower-check", "probcore-selftest")

# CSV columns per subcommand; nested values are written as compact JSON
CSV_COLUMNS = {
    "verify-stepup": ["N", "k", "n", "m", "f2", "mode", "seed", "sources", "classes", "eps_f2",
                      "residual_max", "bound_eps", "worst_eps", "mean_eps", "bound_holds"],
    "verify-shift": ["N", "k", "l", "p", "d", "m", "mode", "seed", "sources", "k_req", "eps_f2",
                     "residual_max", "bound_eps", "worst_eps", "mean_eps", "bound_holds",
                     "decomposition_max_distance"],
    "search-f2": ["p", "k_req", "d", "m", "seed", "target_eps", "success", "eps", "candidates",
                  "reverified_eps"],
    "color-shift": ["n", "l", "mode", "seed", "color_count", "budget", "levels", "edges_checked",
                    "monochromatic", "proper"],
    "disperser-check": ["n", "k", "l", "mode", "seed", "support_size", "out_size", "checked",
                        "failures"],
    "upper-bound": ["N", "k", "m", "i", "mode", "oracle", "seed", "success", "V", "partial_dependence",
                    "colors", "color_bound", "ceiling_passes", "entropy", "entropy_bound"],
    "tower-check": ["k_max", "cases", "holds", "fully_decided", "partially_skipped", "failures"],
    "probcore-selftest": ["checks", "passed", "failed"],
}
SWEEP_COLUMNS = ["point", "point_seed", "exit_code", "error"]


# -- canonical serialization --------------------------------------------------

def canonical(obj):
    """Plain JSON-ready structure: numpy scalars unwrapped, tuples to lists, sets sorted."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(canonical(v) for v in obj)
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_json"):
        return canonical(obj.to_json())
    return str(obj)


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj, indent: int = 0) -> str:
    """Deterministic JSON text: sorted keys and 17 significant digits for every float.

    Lists of scalars stay on one line; with ``indent=0`` everything does.
    """
    return _emit(canonical(obj), indent, 0)


def _emit(v, indent, depth) -> str:
    if isinstance(v, dict):
        items = [json.dumps(k) + ": " + _emit(v[k], indent, depth + 1) for k in sorted(v)]
    elif isinstance(v, list):
        items = [_emit(x, indent, depth + 1) for x in v]
        if all(not isinstance(x, (dict, list)) for x in v):
            return "[" + ", ".join(items) + "]"
    else:
        return _scalar(v)
    open_, close = ("{", "}") if isinstance(v, dict) else ("[", "]")
    if not items:
        return open_ + close
    if not indent:
        return open_ + ", ".join(items) + close
    pad = "\n" + " " * (indent * (depth + 1))
    return open_ + pad + ("," + pad).join(items) + "\n" + " " * (indent * depth) + close


def _scalar(v) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, float):
        return _fmt_float(v)
    return json.dumps(v)


def _csv_cell(v) -> str:
    v = canonical(v)
    if v is None:
        return ""
    if isinstance(v, float):
        return _fmt_float(v).strip('"')
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (dict, list)):
        text = dumps(v)
    else:
        text = str(v)
    if any(ch in text for ch in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def to_csv(rows: list, columns: list) -> str:
    lines = [",".join(columns)]
    for r in rows:
        lines.append(",".join(_csv_cell(r.get(c)) for c in columns))
    return "\n".join(lines) + "\n"


# -- helpers ------------------------------------------------------------------

def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise InvalidArgumentError(f"{args.command} needs " + ", ".join("--" + n for n in missing))


def _stepup_f2(name: str, n: int, m: int):
    if name == "parity":
        return stepup.ParityExtractor(n, m)
    if name == "constant":
        return stepup.ConstantExtractor(n, m, 0)
    if name == "prefix":
        return stepup.PrefixExtractor(n, m)
    path = Path(name)
    if path.suffix == ".json" and path.exists():
        obj = json.loads(path.read_text())
        return stepup.TableExtractor(int(obj["n"]), int(obj["m"]), obj["table"])
    raise InvalidArgumentError(f"unknown F2 {name!r} (parity, constant, prefix or a table .json)")


# -- subcommands --------------------------------------------------------------

def cmd_verify_stepup(args) -> dict:
    _need(args, "N", "k")
    params = stepup.build_params(args.N, args.k)
    F2 = _stepup_f2(args.f2 or "parity", params.n, args.m or 1)
    rep = stepup.measure_stepup(args.N, args.k, F2, mode=args.mode or "exhaustive",
                                samples=args.samples, seed=args.seed, policy=args.policy,
                                workers=args.workers)
    return rep


def _shift_f2(args, params):
    name = args.f2 or "search"
    m = args.m or 1
    if name == "search":
        target = 0.5 if args.eps is None else args.eps
        res = symfix.search_f2(params.p, params.k_prime, params.d, m,
                               symfix.SearchConfig(seed=args.seed, max_candidates=args.max_candidates,
                                                   target_eps=target, m_out=m))
        return res["table"], {"source": "search", "target_eps": target, "candidates": res["candidates"]}
    if name == "constant":
        return symfix.SymbolTable(params.p, params.d, m, np.zeros(params.d**params.p, dtype=np.int64)), \
            {"source": "constant"}
    path = Path(name)
    if path.exists():
        return symfix.SymbolTable.from_json(json.loads(path.read_text())), {"source": path.name}
    raise InvalidArgumentError(f"unknown F2 {name!r} (search, constant or a table .json)")


def cmd_verify_shift(args) -> dict:
    _need(args, "N", "k", "l")
    params = symfix.build_shift_params(args.N, args.k, args.l)
    F2, prov = _shift_f2(args, params)
    mode = args.mode or "exhaustive"
    rep = symfix.measure_shift(args.N, args.k, args.l, F2, mode=mode, samples=args.samples, seed=args.seed)
    rep["f2"] = prov
    if args.check_decomposition:
        dec = symfix.verify_shift_decomposition(args.N, args.k, args.l, mode=mode,
                                                samples=args.samples, seed=args.seed)
        rep["decomposition_max_distance"] = dec["max_distance"]
        rep["decomposition_scalar_agrees"] = dec["scalar_agrees"]
    return rep


def cmd_search_f2(args) -> dict:
    _need(args, "p", "k", "d")
    m = args.m or 1
    target = 0.1 if args.eps is None else args.eps
    conf = symfix.SearchConfig(seed=args.seed, max_candidates=args.max_candidates, target_eps=target, m_out=m)
    base = {"p": args.p, "k_req": args.k, "d": args.d, "m": m, "seed": args.seed, "target_eps": target,
            "lemma": symfix.lemma_bound(args.p, args.k, args.d, m, target)}
    try:
        res = symfix.search_f2(args.p, args.k, args.d, m, conf)
    except SearchFailure as exc:
        base.update(success=False, eps=exc.best_eps, candidates=exc.candidates, table=exc.best_table,
                    reverified_eps=None)
        raise _ReportedFailure(base, exc) from None
    again = symfix.verify_symbol_extractor(symfix.SymbolTable.from_json(res["table"].to_json()),
                                           args.p, args.k, args.d)["eps"]
    base.update(success=True, eps=res["eps"], candidates=res["candidates"], table=res["table"],
                reverified_eps=again)
    if again != res["eps"]:
        raise _ReportedFailure(base, VerificationFailure(f"re-verification gave {again}, search gave {res['eps']}"))
    return base


def cmd_color_shift(args) -> dict:
    n = args.N if args.N is not None else args.n
    if n is None or args.l is None:
        raise InvalidArgumentError("color-shift needs --N (or --n) and --l")
    c = shiftlab.color_tower(n, args.l)
    mode = args.mode or "exhaustive"
    bad = shiftlab.verify_coloring(c, mode=mode, samples=args.samples, seed=args.seed)
    levels = shiftlab.tower_levels(c)
    budget = [n]
    for _ in levels[1:]:
        budget.append(shiftlab.blog(budget[-1]))
    checked = shiftlab.edge_count(n, args.l) if mode == "exhaustive" else args.samples
    rep = {"n": n, "l": args.l, "mode": mode, "seed": args.seed if mode == "sampled" else None,
           "color_count": c.color_count, "levels": levels, "budget": budget[-1],
           "budget_levels": budget, "edges_checked": checked, "monochromatic": bad, "proper": bad == 0}
    if args.export:
        with open(args.export, "w") as fh:
            shiftlab.export_coloring(c, fh)
    if bad:
        raise _ReportedFailure(rep, VerificationFailure(f"{bad} monochromatic shift edges"))
    return rep


def cmd_disperser_check(args) -> dict:
    n = args.N if args.N is not None else args.n
    if n is None or args.k is None or args.l is None:
        raise InvalidArgumentError("disperser-check needs --N (or --n), --k and --l")
    rep = symfix.verify_disperser(n, args.k, args.l, mode=args.mode or "exhaustive",
                                  samples=args.samples, seed=args.seed, shrink=args.shrink)
    if rep["failures"]:
        raise _ReportedFailure(rep, VerificationFailure(f"{rep['failures']} supports miss an output"))
    return rep


def _oracle(args, N, k):
    kind = args.oracle or "random"
    if kind == "random":
        return bounds.RandomOracle(N, k, args.m, seed=args.seed)
    if kind == "adversarial":
        return bounds.AdversarialOracle(N, k, args.m, seed=args.seed)
    path = Path(kind)
    if path.exists():
        return bounds.FileOracle.parse(path.read_text(), N, k, args.m, default=args.default_color)
    raise InvalidArgumentError(f"unknown oracle {kind!r} (random, adversarial or a file)")


def cmd_upper_bound(args) -> dict:
    _need(args, "k", "m")
    i = 1 if args.i is None else args.i
    mode = args.mode or "guaranteed"
    if mode not in ("guaranteed", "greedy"):
        raise InvalidArgumentError("upper-bound mode is guaranteed or greedy")
    planned = bounds.guaranteed_N(args.k, args.m, i) if i >= 1 else args.k
    N = args.N if args.N is not None else planned
    guards.check("subset_enumeration", N, "oracle ground set")
    phi = _oracle(args, N, args.k)
    rep = {"N": N, "k": args.k, "m": args.m, "i": i, "mode": mode, "oracle": phi.provenance,
           "seed": args.seed, "planned_N": planned, "plan": bounds.derivative_plan(args.k, args.m, i) if i else []}
    try:
        res = bounds.iterated_derivative(phi, args.k, args.m, i, mode=mode)
    except ZfxError as exc:
        if not hasattr(exc, "partial"):
            raise
        rep.update(success=False, stage=exc.stage, partial=list(exc.partial))
        raise _ReportedFailure(rep, exc) from None
    ok, cex = bounds.verify_partial_dependence(phi, res.V, args.k, i)
    ceil = bounds.color_ceiling_check(phi, res.V, args.k, i)
    rep.update(success=True, V=list(res.V), stages=res.stages, partial_dependence=ok,
               counterexample=cex, colors=ceil["colors"], color_bound=ceil["bound"],
               ceiling_passes=ceil["passes"], entropy=ceil["entropy"], entropy_bound=ceil["entropy_bound"])
    if not ok or not ceil["passes"]:
        raise _ReportedFailure(rep, VerificationFailure("upper-bound postcondition violated"))
    return rep


def cmd_tower_check(args) -> dict:
    k_max = args.k or 8
    fails, skipped, decided, cases = [], 0, 0, 0
    for k in range(2, k_max + 1):
        for i in range(1, k + 1):
            for m in range(2, 2**k + 1):
                r = bounds.theorem_chain(k, i, m)
                cases += 1
                if r["skipped"]:
                    skipped += 1
                else:
                    decided += 1
                if not r["holds"]:
                    fails.append({"k": k, "i": i, "m": m})
    rep = {"k_max": k_max, "cases": cases, "fully_decided": decided, "partially_skipped": skipped,
           "failures": fails, "holds": not fails}
    if fails:
        raise _ReportedFailure(rep, VerificationFailure(f"{len(fails)} cases violate the chain"))
    return rep


def cmd_probcore_selftest(args) -> dict:
    checks = {}
    src = probcore.ZeroFixingSource(4, (1, 3))
    dist = probcore.source_distribution(src)
    checks["zero_fixing_support"] = sorted(dist.probs) == [0, 2, 8, 10]
    u = probcore.uniform_distribution(4)
    checks["uniform_self_distance"] = probcore.stat_distance(u, u) == 0.0
    pm = probcore.point_mass(4, 0)
    checks["point_mass_distance"] = abs(probcore.distance_to_uniform(pm) - 0.75) <= probcore.TOL
    bf = probcore.BitFixingSource("1*0*")
    parity = lambda x: bin(x).count("1") % 2  # noqa: E731
    checks["parity_on_bitfixing"] = probcore.extractor_error(parity, [bf], 2) <= probcore.TOL
    push = probcore.pushforward(parity, probcore.source_distribution(bf), 2)
    checks["pushforward_mass"] = abs(sum(push.probs.values()) - 1) <= probcore.TOL
    checks["entropy_uniform"] = abs(probcore.entropy(probcore.uniform_distribution(8)) - 3) <= probcore.TOL
    ss = probcore.SpecialSymbolFixingSource(3, ((1, 3), 2, (1, 2)))
    checks["symbol_source_size"] = len(probcore.source_outcomes(ss)) == 4
    failed = sorted(n for n, ok in checks.items() if not ok)
    rep = {"checks": len(checks), "passed": len(checks) - len(failed), "failed": failed, "results": checks}
    if failed:
        raise _ReportedFailure(rep, VerificationFailure("selftest failures: " + ", ".join(failed)))
    return rep


COMMANDS = {
    "verify-stepup": cmd_verify_stepup,
    "verify-shift": cmd_verify_shift,
    "search-f2": cmd_search_f2,
    "color-shift": cmd_color_shift,
    "disperser-check": cmd_disperser_check,
    "upper-bound": cmd_upper_bound,
    "tower-check": cmd_tower_check,
    "probcore-selftest": cmd_probcore_selftest,
}


class _ReportedFailure(Exception):
    """A failure that still carries a report worth writing."""

    def __init__(self, report, cause):
        super().__init__(str(cause))
        self.report = report
        self.cause = cause


# -- sweeps -------------------------------------------------------------------

def parse_range(text: str):
    """``name=a..b`` (inclusive), ``name=a,b,c`` or ``name=v``."""
    if "=" not in text:
        raise InvalidArgumentError(f"bad --vary {text!r}; expected name=a..b or name=a,b")
    name, rhs = text.split("=", 1)
    name = name.strip().lstrip("-")
    try:
        if ".." in rhs:
            lo, hi = rhs.split("..")
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [_num(v) for v in rhs.split(",") if v.strip()]
    except ValueError:
        raise InvalidArgumentError(f"bad --vary values in {text!r}") from None
    return name, values


def _num(text):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        return float(text)


def point_seed(base_seed: int, point: dict) -> int:
    blob = dumps({"seed": base_seed, "point": point}).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:4], "big")


def _run_point(task):
    command, base, point = task
    ns = argparse.Namespace(**base)
    for key, val in point.items():
        setattr(ns, key, val)
    ns.seed = point_seed(base["seed"], point)
    ns.command = command
    ns.workers = 1
    row = {"point": point, "point_seed": ns.seed}
    try:
        row["report"] = COMMANDS[command](ns)
        row["exit_code"] = 0
    except _ReportedFailure as exc:
        row.update(report=exc.report, exit_code=getattr(exc.cause, "exit_code", 1), error=str(exc.cause))
    except ZfxError as exc:
        row.update(exit_code=getattr(exc, "exit_code", 1), error=str(exc))
    return canonical(row)


def _trend(values):
    vals = [v for v in values if isinstance(v, (int, float))]
    if len(vals) < 2:
        return None
    if all(a >= b for a, b in zip(vals, vals[1:])):
        return "nonincreasing"
    if all(a <= b for a, b in zip(vals, vals[1:])):
        return "nondecreasing"
    return "mixed"


def sweep(command: str, base: dict, ranges: list, workers: int = 1) -> dict:
    """One report per point of the cartesian product of ``ranges``; failures are kept per point."""
    if command not in COMMANDS:
        raise InvalidArgumentError(f"cannot sweep {command!r}")
    names = [n for n, _ in ranges]
    total = math.prod(len(v) for _, v in ranges) if ranges else 0
    guards.check("sweep_points", total, "sweep points")
    points = [dict(zip(names, combo)) for combo in itertools.product(*(v for _, v in ranges))] if ranges else []
    rows = parallel_map(_run_point, [(command, base, p) for p in points], workers=workers)
    summary = {}
    for key in ("residual_max", "worst_eps", "color_count", "colors", "failures"):
        trend = _trend([r.get("report", {}).get(key) for r in rows])
        if trend is not None:
            summary[key + "_trend"] = trend
    return {"command": command, "varying": names, "points": rows, "summary": summary,
            "failed_points": sum(1 for r in rows if r["exit_code"])}


# -- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    for name in ("N", "n", "k", "l", "m", "d", "p", "i"):
        common.add_argument(f"--{name}", type=int, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--mode", default=None, help="exhaustive | sampled (upper-bound: guaranteed | greedy)")
    common.add_argument("--samples", type=int, default=10**4)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out", default=None, help="report path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--eps", type=float, default=None, help="target error for table searches")
    common.add_argument("--f2", default=None, help="second-stage extractor: a name or a table .json")
    common.add_argument("--max-candidates", type=int, default=1000)
    common.add_argument("--policy", choices=stepup.POLICIES, default="lemma")
    common.add_argument("--check-decomposition", action="store_true")
    common.add_argument("--shrink", type=int, default=0)
    common.add_argument("--oracle", default=None, help="random | adversarial | path to an oracle file")
    common.add_argument("--default-color", type=int, default=None)
    common.add_argument("--export", default=None, help="color-shift: write the coloring to this file")

    ap = argparse.ArgumentParser(prog="zfx", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"zfx {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    sw = sub.add_parser("sweep", parents=[common], help="run a subcommand over a parameter grid")
    sw.add_argument("target", choices=SUBCOMMANDS)
    sw.add_argument("--vary", action="append", default=[], help="name=a..b or name=a,b,c (repeatable)")
    return ap


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("out", "format", "workers")}
    return cfg


def run(args) -> tuple:
    """Returns (report, exit code)."""
    if args.command == "sweep":
        ranges = [parse_range(v) for v in args.vary]
        base = {k: v for k, v in vars(args).items() if k not in ("vary", "target", "command")}
        body = sweep(args.target, base, ranges, workers=args.workers)
        code = 0
    else:
        code = 0
        try:
            body = COMMANDS[args.command](args)
        except _ReportedFailure as exc:
            body = exc.report
            body["error"] = str(exc.cause)
            code = getattr(exc.cause, "exit_code", 1)
    report = {"config": _config(args), "result": body, "version": __version__, "guards": guards.snapshot()}
    return report, code


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return dumps(report, indent=2) + "\n"
    cmd = report["config"]["command"]
    if cmd == "sweep":
        target = report["config"]["target"]
        cols = SWEEP_COLUMNS + CSV_COLUMNS[target]
        rows = []
        for r in report["result"]["points"]:
            row = dict(r.get("report", {}))
            row.update(point=r["point"], point_seed=r["point_seed"], exit_code=r["exit_code"], error=r.get("error"))
            rows.append(row)
        return to_csv(rows, cols)
    return to_csv([report["result"]], CSV_COLUMNS[cmd])


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    t0 = time.perf_counter()
    try:
        report, code = run(args)
    except ResourceLimitError as exc:
        print(f"zfx: guard: {exc}", file=sys.stderr)
        return exc.exit_code
    except ZfxError as exc:
        print(f"zfx: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", 1)
    except ValueError as exc:
        print(f"zfx: {exc}", file=sys.stderr)
        return 1
    text = render(report, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if code:
        print(f"zfx: {report['result'].get('error', 'failed')}", file=sys.stderr)
    print(f"zfx: wall time {time.perf_counter() - t0:.3f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
