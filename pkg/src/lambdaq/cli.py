"""Command-line front end: ``lambdaq analyze|run|compare|check-soundness``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from . import surface
from .analysis import CONFIG_NAMES, analyze, config_by_name
from .bench import check_soundness, compare, default_suite_dir, write_goldens
from .cfg import build_cfg
from .core import core_to_json, pretty
from .desugar import desugar
from .domain import join_states
from .errors import LambdaQError
from .machine import Deterministic, Exhaustive, Machine, Scripted
from .models import default_registry

EXIT_OK = 0
EXIT_GOLDEN_MISMATCH = 1
EXIT_UNSOUND = 2
EXIT_INPUT = 3


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _write(dest: str, text: str) -> None:
    """Write to ``dest``, or to stdout when it is ``-``."""
    if not text.endswith("\n"):
        text += "\n"
    if dest == "-":
        print(text, end="")
    else:
        Path(dest).write_text(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _models(args):
    reg = default_registry()
    if getattr(args, "models", None):
        reg.load_dir(args.models)
    return reg


def _front_end(args):
    """Parse and lower ``args.file``; print the requested dump, if any."""
    source = Path(args.file).read_text()
    models = _models(args)
    ast = surface.parse(source)
    if args.dump_ast:
        _emit(surface.ast_to_json(ast))
        return None, models
    core = desugar(ast, models)
    if args.dump_core:
        if args.format == "json":
            _emit(core_to_json(core))
        else:
            print(pretty(core), end="")
        return None, models
    prog = build_cfg(core)
    if args.dump_cfg:
        _emit(prog.to_json())
        return None, models
    return prog, models


def _at_site(instr, site: str) -> bool:
    """Match by source position or by allocation site."""
    return instr.pos.site() == site or getattr(instr, "alloc", None) == site


def cmd_analyze(args) -> int:
    prog, models = _front_end(args)
    if prog is None:
        return EXIT_OK
    cfg = config_by_name(args.config, args.lattice_bound)
    res = analyze(prog, cfg, models)
    wrote = False
    outputs = [
        (args.errors_json, lambda: _json([e.to_json() for e in res.type_errors])),
        (args.cg_json, res.callback_graph.to_json_text),
        (args.cg_dot, res.callback_graph.to_dot),
        (args.stats_json, lambda: _json(res.stats())),
    ]
    for dest, render in outputs:
        if dest:
            _write(dest, render())
            wrote = True
    if args.dump_state:
        states = [
            st for (fid, _ctx, nid), st in res.states.items()
            if _at_site(prog.functions[fid].nodes[nid].instr, args.dump_state)
        ]
        joined = None
        for st in states:
            joined = join_states(joined, st)
        _emit(None if joined is None else joined.to_json())
        wrote = True
    if not wrote:
        s = res.stats()
        print(f"config {cfg.name}: {s['analyzedCallbacks']} callbacks, "
              f"precision {s['cgPrecision']:.4f}, {s['typeErrors']} type error(s), "
              f"{s['iterations']} iterations")
        for e in res.type_errors:
            print(f"  {e.site} {e.kind}: {e.message}")
        for n in res.callback_graph.nodes:
            succ = sorted(str(m) for m in res.callback_graph.successors(n))
            print(f"  {n} -> {', '.join(succ) if succ else '(none)'}")
    return EXIT_OK


def _policy(args):
    if args.policy == "exhaustive":
        return Exhaustive(args.bound)
    if args.policy == "script":
        picks = tuple(int(x) for x in args.picks.split(",") if x.strip()) if args.picks else ()
        return Scripted(picks)
    return Deterministic(args.seed)


def cmd_run(args) -> int:
    prog, models = _front_end(args)
    if prog is None:
        return EXIT_OK
    result = Machine(prog, models).run(_policy(args))
    if args.trace_json:
        _write(args.trace_json, _json(result.to_json()))
        if args.trace_json == "-":
            return EXIT_OK
    for i, t in enumerate(result.traces):
        prefix = f"[{i}] " if len(result.traces) > 1 else ""
        print(f"{prefix}{t.status}: {' '.join(t.callback_order()) or '(no callbacks)'}")
    if result.bound_exceeded:
        print(f"{result.bound_exceeded} branch(es) cut at the dispatch bound")
    return EXIT_OK


def _configs(text: Optional[str]) -> list:
    if not text:
        return list(CONFIG_NAMES)
    names = [c.strip() for c in text.split(",") if c.strip()]
    for c in names:
        config_by_name(c)
    return names


def cmd_compare(args) -> int:
    suite = Path(args.suite) if args.suite else default_suite_dir()
    if not suite.is_dir():
        raise LambdaQError(f"{suite}: not a directory")
    models = _models(args)
    report = compare(suite, _configs(args.configs), args.runs, args.lattice_bound, models,
                     goldens=not args.update_goldens)
    if args.update_goldens:
        write_goldens(report, suite)
    if args.format == "json":
        _emit(report.to_json())
    elif args.format == "csv":
        print(report.to_csv(), end="")
    else:
        print(report.to_text(timing=args.timing), end="")
    return EXIT_GOLDEN_MISMATCH if report.mismatches else EXIT_OK


def cmd_check_soundness(args) -> int:
    suite = Path(args.suite) if args.suite else default_suite_dir()
    if not suite.is_dir():
        raise LambdaQError(f"{suite}: not a directory")
    report = check_soundness(suite, args.bound, _configs(args.configs), _models(args), args.mutation)
    if args.format == "json":
        _emit(report.to_json())
    else:
        print(report.to_text(), end="")
    return EXIT_OK if report.ok else EXIT_UNSOUND


def _add_front_end(p: argparse.ArgumentParser) -> None:
    p.add_argument("file", help="input program")
    p.add_argument("--models", metavar="DIR", help="directory of extra I/O model descriptions")
    p.add_argument("--dump-ast", action="store_true", help="print the parsed AST as JSON and stop")
    p.add_argument("--dump-core", action="store_true", help="print the lowered program and stop")
    p.add_argument("--dump-cfg", action="store_true", help="print per-function CFGs as JSON and stop")
    p.add_argument("--format", choices=["text", "json"], default="text",
                   help="format for --dump-core")


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the input-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lambdaq", description="Callback-order analysis for async JavaScript.")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run the static analysis on one program")
    _add_front_end(a)
    a.add_argument("--config", default="C-QR", choices=CONFIG_NAMES)
    a.add_argument("--lattice-bound", type=int, default=None, metavar="N",
                   help="bound on tracked scheduled-list positions")
    a.add_argument("--errors-json", nargs="?", const="-", metavar="PATH")
    a.add_argument("--cg-dot", nargs="?", const="-", metavar="PATH")
    a.add_argument("--cg-json", nargs="?", const="-", metavar="PATH")
    a.add_argument("--stats-json", nargs="?", const="-", metavar="PATH")
    a.add_argument("--dump-state", metavar="SITE", help="abstract state before the instruction at LINE:COL")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("run", help="execute one program on the concrete machine")
    _add_front_end(r)
    r.add_argument("--policy", choices=["det", "exhaustive", "script"], default="det")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--bound", type=int, default=64, help="dispatch bound for exhaustive runs")
    r.add_argument("--picks", default="", help="comma-separated choice indices for --policy script")
    r.add_argument("--trace-json", nargs="?", const="-", metavar="PATH",
                   help="write the trace as JSON (stdout when PATH is omitted)")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="analyze a suite under several configurations")
    c.add_argument("suite", nargs="?", help="directory of .js programs (default: bundled suite)")
    c.add_argument("--format", choices=["text", "csv", "json"], default="text")
    c.add_argument("--runs", type=int, default=10, help="repetitions per program; median time is kept")
    c.add_argument("--configs", help="comma-separated subset of " + ",".join(CONFIG_NAMES))
    c.add_argument("--lattice-bound", type=int, default=None, metavar="N")
    c.add_argument("--timing", action="store_true", help="show wall time in text output")
    c.add_argument("--update-goldens", action="store_true", help="rewrite <name>.expected.json files")
    c.add_argument("--models", metavar="DIR")
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("check-soundness", help="compare analysis results against explored schedules")
    s.add_argument("suite", nargs="?", help="directory of .js programs (default: bundled suite)")
    s.add_argument("--bound", type=int, default=64)
    s.add_argument("--configs")
    s.add_argument("--format", choices=["text", "json"], default="text")
    s.add_argument("--mutation", default=None, help=argparse.SUPPRESS)
    s.add_argument("--models", metavar="DIR")
    s.set_defaults(func=cmd_check_soundness)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (LambdaQError, OSError, ValueError, KeyError) as exc:
        print(f"lambdaq: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
