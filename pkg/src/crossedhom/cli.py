"""Command-line front end.

    crossedhom run --config problem.json
    crossedhom hh --algebra "polynomial(1)" --max-degree 2 --max-weight 3
    crossedhom spectral --config weyl_z2.json
    crossedhom verify [symplectic | SUITE ...] [--max-weight W] [--cache DIR] [--jobs N]

Exit codes: 0 when every request succeeded and every verification entry
passed; 1 when some verification entry failed (each is listed on stderr);
2 when some request raised an error; 3 for an invalid config.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional

from . import __version__, battery
from .cache import ResultCache
from .config import (ProblemConfig, RequestSpec, line_of_field, load_config_text, parse_algebra_string,
                     read_config_text)
from .errors import ConfigError
from .problems import Problem, evaluate_cell, problem_for, request_cells
from .report import build_report, dumps, failure_lines, normalize

log = logging.getLogger("crossedhom")

COMPUTE_COMMANDS = ("hh", "hc", "hp", "twisted", "spectral")
EXIT_OK, EXIT_VERIFY, EXIT_REQUEST, EXIT_CONFIG = 0, 1, 2, 3


def _common(p: argparse.ArgumentParser):
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    p.add_argument("--cache", metavar="DIR", help="persist cell results under DIR")
    p.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes (default 1)")
    p.add_argument("--max-weight", type=int, metavar="W", help="cap on weights / filtration levels")
    p.add_argument("--max-degree", type=int, metavar="K", help="cap on Hochschild degrees")
    p.add_argument("--depth", type=int, metavar="J", help="filtration depth for filtered algebras")
    p.add_argument("--timing", action="store_true", help="add a timing section to the report")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crossedhom", description="Exact Hochschild / cyclic / spectral computations.")
    ap.add_argument("--version", action="version", version=f"crossedhom {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every request of a config")
    p.add_argument("--config", required=True, metavar="PATH")
    _common(p)

    for name in COMPUTE_COMMANDS:
        p = sub.add_parser(name, help=f"{name} requests of a config (or one built from the flags)")
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", metavar="PATH")
        src.add_argument("--algebra", metavar="EXPR", help="e.g. 'polynomial(2)', 'weyl(1)'")
        _common(p)

    p = sub.add_parser("verify", help="run the identity battery")
    p.add_argument("targets", nargs="*", metavar="SUITE",
                   help=f"subset of suites ({', '.join(battery.SUITES)}); default: all")
    p.add_argument("--inject-fault", action="store_true",
                   help="also run b^2 on a deliberately corrupted algebra (must fail)")
    _common(p)
    return ap


# -- execution ------------------------------------------------------------------

def _run_cell(echo: Optional[dict], cell: dict):
    """Worker entry point: ('ok', value, seconds) or ('error', message, seconds)."""
    t = time.perf_counter()
    try:
        problem = problem_for(echo) if echo is not None else None
        value = normalize(evaluate_cell(problem, cell))
        return "ok", value, time.perf_counter() - t
    except Exception as e:  # noqa: BLE001 - errors are reported per request
        return "error", f"{type(e).__name__}: {e}", time.perf_counter() - t


def _cache_parts(echo, cell):
    if cell["kind"] == "verify":
        return {"cell": cell}
    problem = {k: v for k, v in echo.items() if k != "request"}
    return {"problem": problem, "cell": cell}


def execute(jobs: List[tuple], cache: ResultCache, nproc: int):
    """Run (echo, cell) jobs; returns [(status, value, seconds, cached)] in job order.

    The caller is the only consumer of completed jobs, so results are
    assembled in submission order whatever order workers finish in."""
    out = [None] * len(jobs)
    pending = []
    for i, (echo, cell) in enumerate(jobs):
        hit = cache.get(_cache_parts(echo, cell))
        if hit is not None:
            out[i] = ("ok", hit, 0.0, True)
        else:
            pending.append(i)
    if nproc > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=nproc) as pool:
            futures = {i: pool.submit(_run_cell, *jobs[i]) for i in pending}
            for i in pending:
                out[i] = futures[i].result() + (False,)
    else:
        for i in pending:
            out[i] = _run_cell(*jobs[i]) + (False,)
    for i in pending:
        status, value, _, _ = out[i]
        if status == "ok":
            cache.put(_cache_parts(*jobs[i]), value)
    return out


def _window(args) -> dict:
    return {"max_weight": args.max_weight, "max_degree": args.max_degree, "depth": args.depth}


def _load(args):
    """(config, source text or None)."""
    if getattr(args, "config", None):
        text = read_config_text(args.config)
        return load_config_text(text), text
    try:
        spec = parse_algebra_string(args.algebra)
    except ValueError as e:
        raise ConfigError(str(e), field="--algebra") from None
    return ProblemConfig(schema=1, algebra=spec), None


def _build(cfg, text) -> Problem:
    try:
        return Problem(cfg)
    except ConfigError as e:
        if e.line is None and text is not None and e.field:
            raise ConfigError(e.message, field=e.field,
                              line=line_of_field(text, e.field)) from None
        raise


def _requests(cfg: ProblemConfig, command: str, window: dict) -> List[RequestSpec]:
    if command == "run":
        return list(cfg.request)
    picked = [r for r in cfg.request if r.kind == command]
    if picked:
        return picked
    defaults = {"degrees": window["max_degree"] if window["max_degree"] is not None else 2,
                "weights": window["max_weight"] if window["max_weight"] is not None else 3}
    return [RequestSpec(kind=command, **defaults)]


def _verify_window(args) -> battery.Window:
    return battery.Window(args.max_weight, args.max_degree, args.depth)


def run(argv: List[str]) -> tuple:
    """Parse, compute and assemble; returns (report, exit code, cache, parsed args)."""
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    window = _window(args)
    cache = ResultCache(args.cache, __version__)
    groups = []  # (request header, [job indices])
    jobs = []
    echo = None
    if args.command == "verify":
        targets = args.targets or list(battery.SUITES)
        unknown = [t for t in targets if t not in battery.SUITES]
        if unknown:
            raise ConfigError(f"unknown suite {unknown[0]!r}; choose from {', '.join(battery.SUITES)}",
                              field="verify")
        win = _verify_window(args)
        cells = [{"kind": "verify", "suite": s, "model": m, "window": win.to_json()}
                 for s, m in battery.jobs(win, targets)]
        if args.inject_fault:
            cells.append({"kind": "verify", "suite": battery.FAULT_SUITE, "model": None, "window": win.to_json()})
        groups.append(({"index": 0, "kind": "verify", "suites": targets}, list(range(len(cells)))))
        jobs = [(None, c) for c in cells]
    else:
        cfg, text = _load(args)
        _build(cfg, text)  # construction errors are config errors, raised before any work
        reqs = _requests(cfg, args.command, window)
        cfg = cfg.model_copy(update={"request": reqs})
        echo = cfg.echo()
        problem = problem_for(echo)
        for i, req in enumerate(reqs):
            header = {"index": i, "kind": req.kind}
            try:
                cells = request_cells(problem, req, window)
            except Exception as e:  # noqa: BLE001
                groups.append(({**header, "error": f"{type(e).__name__}: {e}"}, []))
                continue
            if req.kind not in ("verify", "spectral"):
                header["classes"] = problem.classes()
            start = len(jobs)
            jobs.extend((echo, c) for c in cells)
            groups.append((header, list(range(start, len(jobs)))))
    done = execute(jobs, cache, max(1, args.jobs))

    results, timing_cells = [], []
    for header, idx in groups:
        res = dict(header)
        errors = [{"cell": jobs[i][1], "error": done[i][1]} for i in idx if done[i][0] == "error"]
        if "error" in header:
            errors.append({"cell": None, "error": res.pop("error")})
        values = [done[i][1] for i in idx if done[i][0] == "ok"]
        if header["kind"] == "verify":
            res["entries"] = [e for v in values for e in v]
        else:
            res["table"] = values
        res["status"] = "error" if errors else "ok"
        if errors:
            res["errors"] = errors
        results.append(res)
        for i in idx:
            timing_cells.append({"request": header["index"], "cell": jobs[i][1],
                                 "seconds": round(done[i][2], 3), "cached": done[i][3]})
    timing = None
    if args.timing:
        timing = {"total_seconds": round(time.perf_counter() - t0, 3), "cells": timing_cells}
    # only inputs that change results are echoed; --cache, --jobs, --out and
    # --timing must not make reports differ
    command = {"subcommand": args.command}
    if args.command == "verify":
        command["suites"] = groups[0][0]["suites"]
        command["inject_fault"] = bool(args.inject_fault)
    report = build_report(command, echo, window, results, timing=timing)
    if report["verification"]["failed"]:
        code = EXIT_VERIFY
    elif any(r["status"] != "ok" for r in results):
        code = EXIT_REQUEST
    else:
        code = EXIT_OK
    return report, code, cache, args


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        report, code, cache, args = run(argv)
    except ConfigError as e:
        print(f"ConfigError: {e}", file=sys.stderr)
        return EXIT_CONFIG
    text = dumps(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for line in failure_lines(report):
        print(line, file=sys.stderr)
    for r in report["results"]:
        for e in r.get("errors", []):
            print(f"ERROR request {r['index']} ({r['kind']}): {e['error']}", file=sys.stderr)
    if cache.enabled:
        s = cache.stats()
        print(f"cache: {s['hits']} hits, {s['misses']} misses, {s['corrupt']} corrupt", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
