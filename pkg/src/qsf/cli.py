"""Command-line front end: verification runs, single evaluations, limit scans.

Subcommands::

    qsf verify [--suite ID ...] [--mode double|exact|both] [--grid key=v1,v2 ...]
               [--tol x] [--out path] [--workers n] [--config file.json]
    qsf eval NAME key=value ... [--mode double|extended|exact]
    qsf limit-scan --id ID [--jmax n] [key=value ...]
    qsf list-identities [--json]

Exit codes: 0 all checks pass, 1 some check failed, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from . import __version__
from .connection import METHODS, ConnectionParams, connection_A
from .context import MODES, ArithmeticContext, as_qbase
from .hyperq import BilateralSeries, psi11_closed_form, psi11_eval
from .identities import (
    CATALOG,
    LIMIT_DEFAULTS,
    LIMIT_IDS,
    default_q_sequence,
    expand_grid,
    identity_residual,
    limit_scan_q_to_1,
    limit_verdict,
)
from .measures import (
    INTEGRAL_ANCHORS,
    INTEGRAL_TITLES,
    MEASURE_ANCHORS,
    MEASURE_TITLES,
    SUITE_GRIDS,
    AskeyRoyMeasure,
    ar_normalization,
    measure_residual,
)
from .polyq import (
    INF,
    AWParams,
    RationalFnParams,
    aw_p,
    aw_qbessel,
    aw_r,
    cq_ultra,
    jacobi_classical,
    pastro_p,
    qbessel2,
    rational_p,
    ultra_classical,
)
from .qcore import aw_factor, qgamma, qpoch_finite, qpoch_infinite
from .report import format_point_value, format_scalar

SCHEMA = "qsf-report/1"
DEFAULT_NMAX = 8
DEGREE_KEYS = ("n", "m", "k", "l")
ALIASES = {"α": "alpha", "β": "beta", "γ": "gamma", "δ": "delta", "λ": "lam", "θ": "theta", "φ": "phi", "ψ": "psi"}


class UsageError(Exception):
    """Bad configuration; reported with exit code 2."""


# ------------------------------------------------------------------ suites

def suite_ids() -> list:
    return list(CATALOG) + [k for k in SUITE_GRIDS if k not in CATALOG]


def suite_axes(suite: str, mode: str):
    if suite in CATALOG:
        return CATALOG[suite].grids.get(mode)
    # quadrature and q-integral suites are floating-point only
    return SUITE_GRIDS[suite] if mode == "double" else None


def suite_keys(suite: str) -> set:
    keys = set()
    for mode in ("double", "exact"):
        for names, _ in suite_axes(suite, mode) or []:
            keys.update(names)
    return keys


def _evaluate(task):
    suite, mode, point, tol, perturb, flip = task
    ctx = ArithmeticContext(mode)
    try:
        if suite in CATALOG:
            rep = identity_residual(suite, point, ctx, tol=tol, perturb=perturb, flip_sign=flip)
        else:
            rep = measure_residual(suite, point, ctx, tol=tol, perturb=perturb, flip_sign=flip)
        return rep.as_dict()
    except Exception as exc:  # recorded per point, counted as a failure
        return {
            "identity": suite,
            "point": {k: format_point_value(v) for k, v in sorted(point.items())},
            "mode": mode,
            "pass": False,
            "error": f"{type(exc).__name__}: {exc}",
        }


# ------------------------------------------------------------------ parsing

def parse_value(text: str, exact: bool = False):
    """int, then "p/q" rational, then float; anything else stays a string.

    With ``exact`` decimals become exact rationals (0.3 -> 3/10).
    """
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        if "/" in text or exact:
            return Fraction(text)
        return float(text)
    except (ValueError, ZeroDivisionError):
        return text


def parse_values(text: str) -> list:
    """"0.25,0.5" -> [0.25, 0.5]; "0..4" -> [0, 1, 2, 3, 4]."""
    if isinstance(text, list):
        return [parse_value(str(v)) if isinstance(v, str) else v for v in text]
    text = str(text)
    if ".." in text and "," not in text:
        lo, hi = text.split("..")
        try:
            return list(range(int(lo), int(hi) + 1))
        except ValueError:
            raise UsageError(f"bad range {text!r}") from None
    return [parse_value(v) for v in text.split(",") if v.strip()]


def canonical_key(key: str) -> str:
    return ALIASES.get(key, key)


def parse_assignments(items, exact: bool = False) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[canonical_key(k.strip())] = parse_value(v, exact)
    return out


def parse_grid(items) -> dict:
    grid = {}
    if isinstance(items, dict):
        items = [f"{k}={v if isinstance(v, str) else ','.join(map(str, v))}" for k, v in items.items()]
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"grid override must look like key=v1,v2; got {item!r}")
        k, v = item.split("=", 1)
        vals = parse_values(v)
        if not vals:
            raise UsageError(f"grid override {item!r} has no values")
        grid[canonical_key(k.strip())] = vals
    return grid


# ------------------------------------------------------------------ verify

def build_config(args) -> dict:
    cfg = {
        "suite": None, "mode": "double", "grid": {}, "tol": None, "out": None, "workers": None,
        "seed": 0, "sample": None, "negative_control": None, "perturb_size": 1e-6, "nmax": DEFAULT_NMAX,
    }
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(file_cfg) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config fields: {sorted(unknown)}")
        cfg.update(file_cfg)
        cfg["grid"] = parse_grid(cfg.get("grid") or {})
    # command line wins
    for name in ("suite", "mode", "tol", "out", "workers", "seed", "sample", "negative_control", "perturb_size", "nmax"):
        val = getattr(args, name)
        if val is not None:
            cfg[name] = val
    if args.grid:
        cfg["grid"] = {**cfg["grid"], **parse_grid(args.grid)}
    if cfg["workers"] is None:
        cfg["workers"] = int(os.environ.get("QSF_WORKERS", "1") or 1)
    return cfg


def validate_config(cfg: dict) -> list:
    suites = cfg["suite"]
    if isinstance(suites, str):
        suites = [suites]
    # "--suite A,B" and "--suite A B" mean the same thing
    suites = [part for s in suites or [] for part in str(s).split(",") if part]
    if not suites:
        raise UsageError("empty suite: name at least one identity id or 'all'")
    if "all" in suites:
        suites = suite_ids()
    known = suite_ids()
    unknown = [s for s in suites if s not in known]
    if unknown:
        raise UsageError(f"unknown identity ids: {unknown}; see list-identities")
    if cfg["mode"] not in ("double", "exact", "both"):
        raise UsageError(f"mode must be double, exact or both, got {cfg['mode']!r}")
    if cfg["workers"] < 1:
        raise UsageError("workers must be at least 1")
    if cfg["negative_control"] not in (None, "perturb", "flip"):
        raise UsageError("negative control must be 'perturb' or 'flip'")
    for key in DEGREE_KEYS:
        for v in cfg["grid"].get(key, []):
            if not isinstance(v, int) or not 0 <= v <= cfg["nmax"]:
                raise UsageError(f"{key}={v!r} outside 0..{cfg['nmax']}")
    seen = []
    for s in suites:
        if s not in seen:
            seen.append(s)
    return seen


def build_tasks(cfg: dict, suites: list) -> list:
    modes = ["double", "exact"] if cfg["mode"] == "both" else [cfg["mode"]]
    perturb = cfg["perturb_size"] if cfg["negative_control"] == "perturb" else 0.0
    flip = cfg["negative_control"] == "flip"
    rng = random.Random(cfg["seed"])
    tasks = []
    for suite in suites:
        keys = suite_keys(suite)
        overrides = {k: v for k, v in cfg["grid"].items() if k in keys}
        count = 0
        for mode in modes:
            axes = suite_axes(suite, mode)
            if axes is None:
                continue
            points = expand_grid(axes, overrides)
            if cfg["sample"] is not None and cfg["sample"] < len(points):
                keep = sorted(rng.sample(range(len(points)), cfg["sample"]))
                points = [points[i] for i in keep]
            count += len(points)
            tasks.extend((suite, mode, p, cfg["tol"], perturb, flip) for p in points)
        if count == 0:
            raise UsageError(f"suite {suite} has no grid in mode {cfg['mode']}")
    return tasks


def run_tasks(tasks: list, workers: int) -> list:
    if workers == 1 or len(tasks) < 2:
        return [_evaluate(t) for t in tasks]
    chunk = max(1, len(tasks) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map keeps submission order, so the report order is canonical
        return list(pool.map(_evaluate, tasks, chunksize=chunk))


def summarize(records: list) -> dict:
    per = {}
    for r in records:
        s = per.setdefault(r["identity"], {"points": 0, "passed": 0, "failed": 0, "errors": 0, "max_rel_residual": 0.0})
        s["points"] += 1
        if r["pass"]:
            s["passed"] += 1
        else:
            s["failed"] += 1
        if "error" in r:
            s["errors"] += 1
            continue
        rel = r["rel_residual"]
        rel = float(rel)  # "inf"/"nan" strings parse too
        cur = s["max_rel_residual"]
        if cur == cur and not rel <= cur:  # a nan stays
            s["max_rel_residual"] = rel
    for s in per.values():
        if s["max_rel_residual"] != s["max_rel_residual"] or s["max_rel_residual"] == float("inf"):
            s["max_rel_residual"] = str(s["max_rel_residual"])
    total = len(records)
    passed = sum(1 for r in records if r["pass"])
    return {"total": total, "passed": passed, "failed": total - passed, "per_identity": per}


def config_echo(cfg: dict, suites: list) -> dict:
    echo = {k: v for k, v in cfg.items() if k not in ("grid", "out")}
    echo["suite"] = suites
    echo["grid"] = {k: [format_point_value(v) for v in vals] for k, vals in sorted(cfg["grid"].items())}
    return echo


def write_report(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2, ensure_ascii=False) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_verify(args) -> int:
    start = time.perf_counter()
    cfg = build_config(args)
    suites = validate_config(cfg)
    tasks = build_tasks(cfg, suites)
    records = run_tasks(tasks, cfg["workers"])
    summary = summarize(records)
    report = {"schema": SCHEMA, "version": __version__, "config": config_echo(cfg, suites),
              "records": records, "summary": summary}
    if args.timing:
        report["wall_time_s"] = round(time.perf_counter() - start, 3)
    write_report(report, cfg["out"])
    if cfg["out"]:
        line = f"{summary['passed']}/{summary['total']} passed"
        print(line, file=sys.stderr)
    return 0 if summary["failed"] == 0 else 1


# ------------------------------------------------------------------ eval

def _need(params, *names):
    missing = [n for n in names if n not in params]
    if missing:
        raise UsageError(f"missing parameters: {', '.join(missing)}")
    return [params[n] for n in names]


def _inf_or(v):
    return INF if isinstance(v, str) and v.lower() in ("inf", "infinity", "∞") else v


def _eval_connection(p, ctx):
    n, k = _need(p, "n", "k")
    vals = _need(p, "alpha", "beta", "gamma", "delta", "a", "b", "c", "d", "q")
    return connection_A(int(n), int(k), ConnectionParams(*vals), p.get("method", METHODS[0]), ctx)


def _eval_psi11(p, ctx):
    a, b, q, z = (ctx.num(v) for v in _need(p, "a", "b", "q", "z"))
    series = BilateralSeries(a, b, q, z)
    return psi11_closed_form(series, ctx) if p.get("form") == "closed" else psi11_eval(series, ctx)


EVALUATORS = {
    "qpoch_finite": (("a", "q", "n"), lambda p, c: qpoch_finite(c.num(p["a"]), as_qbase(p["q"], c), int(p["n"]))),
    "qpoch_infinite": (("a", "q"), lambda p, c: qpoch_infinite(c.num(p["a"]), as_qbase(p["q"], c), c)),
    "qgamma": (("z", "q"), lambda p, c: qgamma(p["z"], p["q"], c)),
    "aw_factor": (("x", "a", "q", "j"), lambda p, c: aw_factor(c.num(p["x"]), c.num(p["a"]), as_qbase(p["q"], c), int(p["j"]))),
    "aw_p": (("n", "x", "a", "b", "c", "d", "q"),
             lambda p, c: aw_p(int(p["n"]), p["x"], AWParams(p["a"], p["b"], p["c"], p["d"], p["q"]), c)),
    "aw_r": (("n", "x", "a", "b", "c", "d", "q"),
             lambda p, c: aw_r(int(p["n"]), p["x"], AWParams(p["a"], p["b"], p["c"], p["d"], p["q"]), c)),
    "cq_ultra": (("n", "x", "beta", "q"), lambda p, c: cq_ultra(int(p["n"]), p["x"], p["beta"], p["q"], c)),
    "ultra_classical": (("n", "lam", "x"), lambda p, c: ultra_classical(int(p["n"]), c.num(p["lam"]), c.num(p["x"]), c)),
    "jacobi_classical": (("n", "alpha", "beta", "x"),
                         lambda p, c: jacobi_classical(int(p["n"]), c.num(p["alpha"]), c.num(p["beta"]), c.num(p["x"]), c)),
    "rational_p": (("n", "alpha", "beta", "t", "q"),
                   lambda p, c: rational_p(RationalFnParams(int(p["n"]), p["alpha"], p["beta"], p["t"], p["q"]), c)),
    "pastro_p": (("n", "alpha", "beta", "t", "q"),
                 lambda p, c: pastro_p(int(p["n"]), _inf_or(p["alpha"]), _inf_or(p["beta"]), p["t"], p["q"], c)),
    "qbessel2": (("alpha", "x", "q"), lambda p, c: qbessel2(p["alpha"], p["x"], p["q"], c)),
    "aw_qbessel": (("theta", "a", "s", "t", "q"), lambda p, c: aw_qbessel(p["theta"], p["a"], p["s"], p["t"], p["q"], c)),
    "connection_A": (("n", "k", "alpha", "beta", "gamma", "delta", "a", "b", "c", "d", "q"), _eval_connection),
    "psi11": (("a", "b", "q", "z"), _eval_psi11),
    "ar_normalization": (("alpha", "beta", "c", "q"),
                         lambda p, c: ar_normalization(AskeyRoyMeasure(_inf_or(p["alpha"]), _inf_or(p["beta"]), p["c"], p["q"]), c)),
}


def cmd_eval(args) -> int:
    if args.name not in EVALUATORS:
        raise UsageError(f"unknown function {args.name!r}; choose from {sorted(EVALUATORS)}")
    ctx = ArithmeticContext(args.mode)
    params = parse_assignments(args.params, exact=ctx.exact)
    names, fn = EVALUATORS[args.name]
    _need(params, *names)
    value = fn(params, ctx)
    out = {
        "function": args.name,
        "params": {k: format_point_value(v) for k, v in sorted(params.items())},
        "value": format_scalar(value),
        "mode": ctx.mode,
        "rel_tol": ctx.rel_tol,
    }
    print(json.dumps(out, ensure_ascii=False))
    return 0


# ------------------------------------------------------------------ limit scan

def resolve_limit_id(text: str) -> str:
    norm = text.replace("→", "->").strip()
    for lid in LIMIT_IDS:
        if lid.lower() == norm.lower():
            return lid
    raise UsageError(f"unknown limit id {text!r}; choose from {list(LIMIT_IDS)}")


def cmd_limit_scan(args) -> int:
    lid = resolve_limit_id(args.id)
    point = parse_assignments(args.params)
    unknown = set(point) - set(LIMIT_DEFAULTS[lid])
    if unknown:
        raise UsageError(f"{lid} takes {sorted(LIMIT_DEFAULTS[lid])}, not {sorted(unknown)}")
    if not 2 <= args.jmin < args.jmax <= 40:
        raise UsageError("need 2 <= jmin < jmax <= 40")
    reports = limit_scan_q_to_1(lid, point, default_q_sequence(args.jmax, args.jmin))
    verdict = limit_verdict(reports, tail_start=args.tail_start, final_max=args.final_max, jmin=args.jmin)
    records = []
    for j, rep in zip(range(args.jmin, args.jmax + 1), reports):
        rec = rep.as_dict()
        rec["j"] = j
        rec["gap"] = rec.pop("abs_residual")
        for k in ("tol", "pass", "rel_residual"):
            rec.pop(k)
        records.append(rec)
    report = {
        "schema": SCHEMA,
        "version": __version__,
        "config": {"id": lid, "point": {k: format_point_value(v) for k, v in sorted({**LIMIT_DEFAULTS[lid], **point}.items())},
                   "jmin": args.jmin, "jmax": args.jmax, "tail_start": args.tail_start, "final_max": args.final_max},
        "records": records,
        "summary": {k: verdict[k] for k in ("decreasing_tail", "final_gap", "final_ratio", "halving", "pass")},
    }
    write_report(report, args.out)
    return 0 if verdict["pass"] else 1


# ------------------------------------------------------------------ listing

def catalog_rows() -> list:
    rows = []
    for e in CATALOG.values():
        rows.append({"id": e.id, "anchor": e.anchor, "modes": list(e.modes), "kind": "identity", "title": e.title, "domain": e.domain})
    for sid in SUITE_GRIDS:
        if sid in MEASURE_ANCHORS:
            anchor, title, kind = MEASURE_ANCHORS[sid], MEASURE_TITLES[sid], "measure"
        else:
            anchor, title, kind = INTEGRAL_ANCHORS[sid], INTEGRAL_TITLES[sid], "integral"
        rows.append({"id": sid, "anchor": anchor, "modes": ["double"], "kind": kind, "title": title, "domain": ""})
    for lid in LIMIT_IDS:
        rows.append({"id": lid, "anchor": "q -> 1", "modes": ["double"], "kind": "limit", "title": "limit scan (use limit-scan)", "domain": ""})
    return rows


def cmd_list(args) -> int:
    rows = catalog_rows()
    if args.json:
        print(json.dumps(rows, indent=2, ensure_ascii=False))
        return 0
    w = max(len(r["id"]) for r in rows)
    wa = max(len(r["anchor"]) for r in rows)
    for r in rows:
        print(f"{r['id']:<{w}}  {r['anchor']:<{wa}}  {'/'.join(r['modes']):<12}  {r['title']}")
    return 0


# ------------------------------------------------------------------ entry

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qsf", description="q-special-function identity verification")
    ap.add_argument("--version", action="version", version=f"qsf {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run identity suites over parameter grids")
    v.add_argument("--suite", nargs="+", help="identity ids, or 'all'")
    v.add_argument("--mode", choices=("double", "exact", "both"))
    v.add_argument("--grid", action="append", metavar="KEY=V1,V2", help="override one grid axis (repeatable); n=0..4 ranges allowed")
    v.add_argument("--tol", type=float, help="tolerance for floating-mode checks")
    v.add_argument("--out", help="write the JSON report here instead of stdout")
    v.add_argument("--workers", type=int, help="worker processes (default $QSF_WORKERS or 1)")
    v.add_argument("--config", help="JSON file with the same field names; flags win")
    v.add_argument("--seed", type=int, help="seed for --sample")
    v.add_argument("--sample", type=int, help="evaluate a seeded random subset of N points per suite and mode")
    v.add_argument("--nmax", type=int, help=f"largest degree allowed in grid overrides (default {DEFAULT_NMAX})")
    v.add_argument("--negative-control", dest="negative_control", choices=("perturb", "flip"),
                   help="corrupt the right-hand sides; the run is then expected to fail")
    v.add_argument("--perturb-size", dest="perturb_size", type=float, help="relative size of the perturbation (default 1e-6)")
    v.add_argument("--timing", action="store_true", help="add wall time to the report (breaks byte-identical output)")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("eval", help="evaluate one function")
    e.add_argument("name", help=f"one of: {', '.join(sorted(EVALUATORS))}")
    e.add_argument("params", nargs="*", metavar="KEY=VALUE")
    e.add_argument("--mode", choices=MODES, default="double")
    e.set_defaults(func=cmd_eval)

    ls_ = sub.add_parser("limit-scan", help="gap sequence along q_j = 1 - 2^-j")
    ls_.add_argument("--id", required=True, help=" or ".join(LIMIT_IDS))
    ls_.add_argument("--jmax", type=int, default=10)
    ls_.add_argument("--jmin", type=int, default=2)
    ls_.add_argument("--tail-start", dest="tail_start", type=int, default=5)
    ls_.add_argument("--final-max", dest="final_max", type=float, default=1e-2)
    ls_.add_argument("--out")
    ls_.add_argument("params", nargs="*", metavar="KEY=VALUE")
    ls_.set_defaults(func=cmd_limit_scan)

    li = sub.add_parser("list-identities", help="print the catalog with anchors")
    li.add_argument("--json", action="store_true")
    li.set_defaults(func=cmd_list)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"qsf: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        if args.command == "eval":
            print(f"qsf: {type(exc).__name__}: {exc}", file=sys.stderr)
            return 2
        raise


if __name__ == "__main__":
    sys.exit(main())
