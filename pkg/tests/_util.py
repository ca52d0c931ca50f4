"""Shared helpers for the test modules."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from lambdaq.analysis import analyze, config_by_name
from lambdaq.bench import default_suite_dir
from lambdaq.cfg import build_cfg
from lambdaq.desugar import compile_source
from lambdaq.machine import Machine, Scripted
from lambdaq.values import QueueRef

SUITE = default_suite_dir()

SHARED_CALLBACK = """function foo(){}

var x = Promise.resolve()
.then(foo)
.then(function ff1(){})
.then(foo)
.then(function ff2(){})
.then(foo)
.then(function ff3(){});
"""


def program(src: str, intrinsics: bool = False):
    return build_cfg(compile_source(src, intrinsics=intrinsics))


def suite_source(name: str) -> str:
    return (Path(SUITE) / f"{name}.js").read_text()


def run_analysis(src: str, config: str = "C-QR", intrinsics: bool = False, bound=None):
    return analyze(program(src, intrinsics), config_by_name(config, bound))


def concrete_orders(src: str, bound: int = 64) -> set:
    run = Machine(program(src)).explore(bound)
    return {tuple(t.callback_order()) for t in run.traces}


def run_once(src: str, picks=()):
    return Machine(program(src)).run(Scripted(tuple(picks))).traces[0]


class Stepper:
    """Drive an intrinsic-mode program one rule at a time."""

    fired: Optional[set] = None  # when set, every rule taken by any stepper is added

    def __init__(self, src: str):
        if "$q.eventLoop()" not in src:
            src += "$q.eventLoop();\n"
        self.m = Machine(program(src, intrinsics=True))
        self.c = self.m.initial()
        self.rules: list = []

    def step(self, choice=None):
        if choice is None and self.m.choices(self.c):
            choice = 0
        self.m.step(self.c, choice)
        self.rules.append(self.c.last_rule)
        if Stepper.fired is not None:
            Stepper.fired.add(self.c.last_rule)
        return self.c.last_rule

    def until(self, rule: str, nth: int = 1, choice=None):
        """Step until ``rule`` has fired ``nth`` times; return the configuration."""
        seen = 0
        while not self.c.terminal:
            if self.step(choice) == rule:
                seen += 1
                if seen == nth:
                    return self.c
        raise AssertionError(f"rule {rule} fired {seen} time(s); rules were {self.rules}")

    def finish(self):
        while not self.c.terminal:
            self.step()
        return self.c

    def addr(self, var: str):
        v = self.c.main_scope.vars[var]
        assert isinstance(v, QueueRef), v
        return v.addr

    def var(self, var: str):
        return self.c.main_scope.vars[var]

    def queue(self, var: str):
        return self.c.queues[self.addr(var)]

    def fn_ids(self, cbs) -> list:
        return [cb.fn.fn_id for cb in cbs]
