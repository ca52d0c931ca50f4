"""Models of asynchronous I/O builtins.

A model names a builtin (``fs.open``), says which argument is the callback,
and describes the values the callback receives.  Each argument spec is a
``|``-separated list of alternatives drawn from this grammar::

    undef | null | anynum | anystr | anybool | error
    num:<n> | str:<text> | object:<key>=<atom>,<key>=<atom>...

The interpreter zips the alternatives into branches (the first alternative
of every argument forms branch 0, and so on; shorter lists repeat their last
entry).  The analyzer joins all alternatives of an argument.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DuplicateModel, LambdaQError

ATOMS = ("undef", "null", "anynum", "anystr", "anybool", "error")

# Concrete representatives sampled by the interpreter.
CONCRETE_NUM = 3
CONCRETE_STR = "data"
CONCRETE_BOOL = True


@dataclass(frozen=True)
class ArgAlt:
    """One alternative of an argument spec."""

    kind: str  # one of ATOMS, "num", "str" or "object"
    value: object = None
    fields: tuple = ()  # for objects: ((key, ArgAlt), ...)


@dataclass
class IOModel:
    name: str
    callback_index: int
    arg_specs: list = field(default_factory=list)  # list[str]

    def __post_init__(self):
        if self.callback_index < 0:
            raise LambdaQError(f"model {self.name}: callback index must be non-negative")
        self.parsed = [parse_spec(s) for s in self.arg_specs]

    def branches(self) -> list:
        """Concrete branches: one tuple of ArgAlt per branch."""
        if not self.parsed:
            return [()]
        n = max(len(p) for p in self.parsed)
        return [tuple(p[min(i, len(p) - 1)] for p in self.parsed) for i in range(n)]


def parse_spec(spec: str) -> list:
    alts = []
    for raw in spec.split("|"):
        alts.append(_parse_alt(raw.strip(), spec))
    return alts


def _parse_alt(text: str, spec: str) -> ArgAlt:
    if text in ATOMS:
        return ArgAlt(text)
    if text.startswith("num:"):
        num = float(text[4:])
        return ArgAlt("num", int(num) if num.is_integer() else num)
    if text.startswith("str:"):
        return ArgAlt("str", text[4:])
    if text.startswith("object:") or text == "object":
        pairs = []
        body = text[7:]
        for part in filter(None, body.split(",")):
            if "=" not in part:
                raise LambdaQError(f"bad object field {part!r} in spec {spec!r}")
            k, v = part.split("=", 1)
            alt = _parse_alt(v.strip(), spec)
            if alt.kind == "object":
                raise LambdaQError(f"nested objects are not supported in spec {spec!r}")
            pairs.append((k.strip(), alt))
        return ArgAlt("object", fields=tuple(pairs))
    raise LambdaQError(f"unknown argument spec {text!r} in {spec!r}")


class ModelRegistry:
    def __init__(self):
        self._models: dict[str, IOModel] = {}

    def register(self, m: IOModel) -> None:
        if m.name in self._models:
            raise DuplicateModel(f"model {m.name!r} is already registered")
        self._models[m.name] = m

    def get(self, name: str):
        return self._models.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._models

    def __iter__(self):
        return iter(sorted(self._models.values(), key=lambda m: m.name))

    def names(self) -> list:
        return sorted(self._models)

    def load_dir(self, path) -> None:
        """Register every ``*.json`` model description under ``path``."""
        for p in sorted(Path(path).glob("*.json")):
            data = json.loads(p.read_text())
            items = data if isinstance(data, list) else [data]
            for d in items:
                self.register(
                    IOModel(d["name"], int(d["callbackParamIndex"]), list(d.get("argSpecs", [])))
                )


def builtin_models() -> list:
    return [
        IOModel("fs.open", 3, ["error|undef", "undef|anynum"]),
        IOModel("fs.readFile", 1, ["error|undef", "undef|anystr"]),
        IOModel(
            "http.get",
            1,
            ["object:statusCode=anynum,body=anystr,headers=anystr"],
        ),
    ]


def default_registry() -> ModelRegistry:
    reg = ModelRegistry()
    for m in builtin_models():
        reg.register(m)
    return reg


_default = None


def shared_registry() -> ModelRegistry:
    """Process-wide registry with the bundled models."""
    global _default
    if _default is None:
        _default = default_registry()
    return _default
