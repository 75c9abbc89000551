"""Command-line front end: generate, solve, validate, export, report."""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import logging
import os
import sys
from pathlib import Path

from . import io
from .core import evaluate, validate
from .generator import GeneratorConfig, InstanceDiscarded, LrpParseError, GenerationError, generate, load_lrp
from .lns import PRESETS, StrategyConfig, report_gap, run_lns
from .mip_export import build_model, export_lp

log = logging.getLogger("ctlrp")


class CliError(Exception):
    pass


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("CTLRP_THREADS", "1")))
    except ValueError:
        return 1


def _emit(obj: dict, out: str | None) -> None:
    text = io.dumps(obj)
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_generate(args) -> int:
    src = load_lrp(args.lrp_file)
    cfg = GeneratorConfig(multiplier=args.multiplier, alpha_index=args.alpha, seed=args.seed)
    try:
        inst = generate(src, cfg)
    except InstanceDiscarded as exc:
        raise CliError(f"instance discarded: {exc}") from None
    _emit(io.instance_to_dict(inst), args.out)
    return 0


def _strategy(args) -> StrategyConfig:
    kw = {"restarts": args.runs}
    if args.time_limit is not None:
        kw["time_limit"] = None if args.time_limit <= 0 else args.time_limit
    if args.strategy.upper() in PRESETS:
        return StrategyConfig.preset(args.strategy, **kw)
    cfg = StrategyConfig.from_file(args.strategy)
    cfg.restarts = args.runs
    if "time_limit" in kw:
        cfg.time_limit = kw["time_limit"]
    return cfg


def cmd_solve(args) -> int:
    inst = io.load_instance(args.instance)
    cfg = _strategy(args)
    sol, report, results = run_lns(inst, cfg, seed=args.seed, workers=args.workers)
    summary = report.to_dict()
    wall = summary.pop("wall_time")
    out = {
        "schema_version": io.SCHEMA_VERSION,
        "instance": inst.name or Path(args.instance).stem,
        "seed": args.seed,
        "strategy": {"layers": cfg.layers, "accept": cfg.accept, "apply": cfg.apply,
                     "iterate": cfg.iterate, "time_limit": cfg.time_limit, "runs": cfg.restarts},
        "report": summary,
        "solution": None if sol is None else io.solution_to_dict(sol),
    }
    _emit(out, args.out)
    log.info("%d runs in %.2fs, best %s", report.runs, wall, report.h_min)
    if sol is None:
        print(json.dumps({"error": "no run produced a feasible solution", "details": report.errors}),
              file=sys.stderr)
        return 1
    return 0


def cmd_validate(args) -> int:
    inst = io.load_instance(args.instance)
    sol = io.load_solution(args.solution)
    violations = validate(inst, sol, strict=not args.relaxed)
    out = {
        "schema_version": io.SCHEMA_VERSION,
        "feasible": not violations,
        "violations": [{"rule": v.rule, "ids": list(v.ids), "detail": v.detail} for v in violations],
    }
    if not violations:
        cost = evaluate(inst, sol)
        out["cost"] = {"routing": cost.routing_cost, "depots": cost.depot_cost, "total": cost.total}
    _emit(out, args.out)
    return 0 if not violations else 1


def cmd_export(args) -> int:
    inst = io.load_instance(args.instance)
    model = build_model(inst, valid_inequalities=args.with_valid_inequalities == "on")
    export_lp(model, args.out)
    return 0


def _load_results(paths: list[str]) -> list[dict]:
    files: list[Path] = []
    for p in map(Path, paths):
        files.extend(sorted(p.glob("*.json")) if p.is_dir() else [p])
    rows = []
    for f in files:
        data = io.read_json(f)
        if "report" in data:
            rows.append(data)
    return rows


def cmd_report(args) -> int:
    refs = io.read_json(args.reference) if args.reference else {}
    refs.pop("schema_version", None)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["schema_version", "instance", "runs", "h_min", "reference", "gap_percent"])
    for data in sorted(_load_results(args.results), key=lambda d: d["instance"]):
        name = data["instance"]
        h = data["report"]["h_min"]
        ref = refs.get(name)
        gap = "" if h is None or ref in (None, 0) else f"{report_gap(h, ref):.6f}"
        w.writerow([io.SCHEMA_VERSION, name, data["report"]["runs"],
                    "" if h is None else repr(float(h)), "" if ref is None else ref, gap])
    if args.out in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        Path(args.out).write_text(buf.getvalue())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ctlrp", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help="output file ('-' or omitted: stdout)")
        return sp

    g = common(sub.add_parser("generate", help="derive a covering instance from an LRP file"))
    g.add_argument("--lrp-file", required=True)
    g.add_argument("--multiplier", type=int, choices=(2, 3, 5), default=2)
    g.add_argument("--alpha", type=int, choices=(1, 2), default=1)
    g.set_defaults(func=cmd_generate)

    s = common(sub.add_parser("solve", help="run the LNS heuristic"))
    s.add_argument("--instance", required=True)
    s.add_argument("--strategy", default="O2", help="O1, O2 or a JSON strategy file")
    s.add_argument("--time-limit", type=float, default=None, help="seconds per run; <=0 disables")
    s.add_argument("--runs", type=int, default=1)
    s.add_argument("--workers", type=int, default=_default_workers())
    s.set_defaults(func=cmd_solve)

    v = common(sub.add_parser("validate", help="check a solution against an instance"))
    v.add_argument("--instance", required=True)
    v.add_argument("--solution", required=True)
    v.add_argument("--relaxed", action="store_true", help="allow routes without stops")
    v.set_defaults(func=cmd_validate)

    e = common(sub.add_parser("export", help="write the exact model in LP format"))
    e.add_argument("--instance", required=True)
    e.add_argument("--with-valid-inequalities", choices=("on", "off"), default="on")
    e.set_defaults(func=cmd_export)

    r = common(sub.add_parser("report", help="gap table over solve outputs (CSV)"))
    r.add_argument("--results", nargs="+", required=True, help="result files or directories")
    r.add_argument("--reference", help="JSON mapping instance name to reference cost")
    r.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "out", None) is None and args.command == "export":
        parser.error("export requires --out")
    try:
        return args.func(args)
    except (CliError, io.SchemaError, LrpParseError, GenerationError, OSError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
