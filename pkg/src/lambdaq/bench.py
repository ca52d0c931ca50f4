"""Suite runner: four-configuration comparison and the soundness oracle."""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .analysis import CONFIG_NAMES, AnalysisResult, analyze, config_by_name
from .cfg import ProgramCFG, build_cfg
from .desugar import compile_source
from .domain import NO_CONTEXT, SETTLED_BOT, Context
from .machine import CallbackBegin, Machine, TypeErrorEvent
from .models import ModelRegistry
from .values import L_IO, L_TIME


def suite_programs(suite_dir) -> list:
    return sorted(Path(suite_dir).glob("*.js"))


def default_suite_dir() -> Path:
    return Path(__file__).parent / "suite"


def load_program(path, models: Optional[ModelRegistry] = None) -> ProgramCFG:
    return build_cfg(compile_source(Path(path).read_text(), models))


# ------------------------------------------------------------------ compare


@dataclass
class Row:
    program: str
    config: str
    analyzed_callbacks: int
    precision: float
    type_errors: int
    wall_millis: float
    iterations: int = 0

    def metrics(self) -> dict:
        return {
            "analyzedCallbacks": self.analyzed_callbacks,
            "cgPrecision": round(self.precision, 6),
            "typeErrors": self.type_errors,
        }


@dataclass
class SuiteReport:
    rows: list = field(default_factory=list)
    mismatches: list = field(default_factory=list)

    def programs(self) -> list:
        return sorted({r.program for r in self.rows})

    def get(self, program: str, config: str) -> Optional[Row]:
        for r in self.rows:
            if r.program == program and r.config == config:
                return r
        return None

    def averages(self) -> dict:
        out = {}
        for c in CONFIG_NAMES:
            rs = [r for r in self.rows if r.config == c]
            if rs:
                out[c] = {
                    "analyzedCallbacks": sum(r.analyzed_callbacks for r in rs),
                    "cgPrecision": round(statistics.fmean(r.precision for r in rs), 6),
                    "typeErrors": sum(r.type_errors for r in rs),
                }
        return out

    def to_json(self) -> dict:
        return {
            "programs": {
                p: {c: r.metrics() for c in CONFIG_NAMES if (r := self.get(p, c)) is not None}
                for p in self.programs()
            },
            "totals": self.averages(),
            "mismatches": self.mismatches,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["program", "config", "analyzedCallbacks", "cgPrecision", "typeErrors"])
        for p in self.programs():
            for c in CONFIG_NAMES:
                r = self.get(p, c)
                if r is not None:
                    w.writerow([p, c, r.analyzed_callbacks, f"{r.precision:.4f}", r.type_errors])
        return buf.getvalue()

    def to_text(self, timing: bool = False) -> str:
        configs = [c for c in CONFIG_NAMES if any(r.config == c for r in self.rows)]
        head = f"{'program':<28}" + "".join(f"{c + ' (cb/prec/err)':>24}" for c in configs)
        lines = [head, "-" * len(head)]
        for p in self.programs():
            cells = []
            for c in configs:
                r = self.get(p, c)
                cell = f"{r.analyzed_callbacks}/{r.precision:.2f}/{r.type_errors}"
                if timing:
                    cell += f" {r.wall_millis:.0f}ms"
                cells.append(f"{cell:>24}")
            lines.append(f"{p:<28}" + "".join(cells))
        avg = self.averages()
        if avg:
            lines.append("-" * len(head))
            lines.append(
                f"{'total/mean':<28}"
                + "".join(
                    f"{str(avg[c]['analyzedCallbacks']) + '/' + format(avg[c]['cgPrecision'], '.2f') + '/' + str(avg[c]['typeErrors']):>24}"
                    for c in configs
                )
            )
        for m in self.mismatches:
            lines.append(f"MISMATCH {m}")
        return "\n".join(lines) + "\n"


def golden_path(program: Path) -> Path:
    return program.with_suffix(".expected.json")


def compare(suite_dir, configs=None, runs: int = 1, bound: Optional[int] = None,
            models: Optional[ModelRegistry] = None, goldens: bool = True) -> SuiteReport:
    configs = configs or CONFIG_NAMES
    report = SuiteReport()
    for path in suite_programs(suite_dir):
        prog = load_program(path, models)
        for c in configs:
            cfg = config_by_name(c, bound)
            times = []
            res: Optional[AnalysisResult] = None
            for _ in range(max(1, runs)):
                res = analyze(prog, cfg, models)
                times.append(res.wall_millis)
            report.rows.append(Row(
                path.stem, c, res.analyzed_callbacks, res.precision, len(res.type_errors),
                statistics.median(times), res.iterations,
            ))
        gp = golden_path(path)
        if goldens and gp.exists():
            expected = json.loads(gp.read_text())
            for c, exp in sorted(expected.items()):
                row = report.get(path.stem, c)
                if row is None:
                    continue
                got = row.metrics()
                for k, v in sorted(exp.items()):
                    if k in got and not _same(got[k], v):
                        report.mismatches.append(f"{path.stem} {c} {k}: expected {v}, got {got[k]}")
    return report


def _same(a, b) -> bool:
    if isinstance(a, float) or isinstance(b, float):
        return abs(float(a) - float(b)) <= 1e-6
    return a == b


def write_goldens(report: SuiteReport, suite_dir) -> None:
    for p in report.programs():
        data = {c: r.metrics() for c in CONFIG_NAMES if (r := report.get(p, c)) is not None}
        golden_path(Path(suite_dir) / f"{p}.js").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- soundness


@dataclass
class Violation:
    program: str
    config: str
    kind: str  # coverage | order | error | reserved-queues
    detail: str
    trace: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"program": self.program, "config": self.config, "kind": self.kind,
                "detail": self.detail, "trace": self.trace}

    def __str__(self) -> str:
        return f"{self.program} [{self.config}] {self.kind}: {self.detail}"


@dataclass
class SoundnessReport:
    checked: list = field(default_factory=list)  # (program, config, traces)
    violations: list = field(default_factory=list)
    bound_exceeded: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "checked": [{"program": p, "config": c, "traces": n} for p, c, n in self.checked],
            "violations": [v.to_json() for v in self.violations],
            "boundExceeded": self.bound_exceeded,
        }

    def to_text(self) -> str:
        lines = [f"{p:<28} {c:<6} traces={n}" for p, c, n in self.checked]
        lines += [f"VIOLATION {v}" for v in self.violations]
        lines.append(f"{len(self.violations)} violation(s)")
        return "\n".join(lines) + "\n"


def invocation_node(e: CallbackBegin, qr_sensitive: bool) -> tuple:
    ctx = Context((e.registered_on, e.dep), None) if qr_sensitive else NO_CONTEXT
    return (e.fn, ctx)


def check_result(name: str, result: AnalysisResult, traces: list) -> list:
    """Compare one analysis result against concrete traces."""
    out = []
    cg = result.callback_graph
    nodes = {(n.fn, n.context): n for n in cg.nodes}
    reported = {(e.site, e.kind) for e in result.type_errors}
    cname = result.config.name
    for st in result.states.values():
        for reserved in (L_TIME, L_IO):
            if st.queues.get(reserved, SETTLED_BOT) != SETTLED_BOT:
                out.append(Violation(name, cname, "reserved-queues", f"{reserved} changed state"))
                break
    for t in traces:
        order = []
        for e in t.events:
            if isinstance(e, CallbackBegin):
                key = invocation_node(e, result.config.qr_sensitive)
                n = nodes.get(key)
                if n is None:
                    out.append(Violation(name, cname, "coverage",
                                         f"callback {key[0]} in context {key[1]} was not analyzed",
                                         t.callback_order()))
                    continue
                for prev in order:
                    if cg.reaches(n, prev):
                        out.append(Violation(name, cname, "order",
                                             f"{n} ran after {prev} but the graph orders it before",
                                             t.callback_order()))
                order.append(n)
            elif isinstance(e, TypeErrorEvent) and (e.site, e.error) not in reported:
                out.append(Violation(name, cname, "error", f"{e.error} at {e.site} not reported",
                                     t.callback_order()))
    return _dedupe(out)


def _dedupe(vs: list) -> list:
    seen = set()
    out = []
    for v in vs:
        k = (v.program, v.config, v.kind, v.detail)
        if k not in seen:
            seen.add(k)
            out.append(v)
    return out


def check_soundness(suite_dir, bound: int = 64, configs=None,
                    models: Optional[ModelRegistry] = None, mutation: Optional[str] = None,
                    programs=None) -> SoundnessReport:
    configs = configs or CONFIG_NAMES
    report = SoundnessReport()
    paths = programs if programs is not None else suite_programs(suite_dir)
    for path in paths:
        path = Path(path)
        prog = load_program(path, models)
        run = Machine(prog, models).explore(bound)
        report.bound_exceeded += run.bound_exceeded
        for c in configs:
            res = analyze(prog, config_by_name(c), models, mutation)
            report.checked.append((path.stem, c, len(run.traces)))
            report.violations.extend(check_result(path.stem, res, run.traces))
    return report
