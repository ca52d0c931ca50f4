"""Core IR: a flat, structured instruction language over atomic operands.

Every instruction operates on atoms (variables or literals), so each one maps
to a single control-flow node.  The queue primitives (``NewQ``, ``Settle``,
``Register``, ``Append``, ``Pop``, ``AddCallback``, ``EventLoop``) are the
calculus constructs; the rest is ordinary JavaScript plumbing.

``pretty`` renders a program back into parseable text (intrinsic mode), and
``normalize`` renames positional identifiers so two programs can be compared
structurally.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, fields
from typing import Optional, Union

from .surface import NOPOS, Pos
from .values import BOT, NULL, UNDEF


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lit:
    value: object


Atom = Union[Var, Lit]

LIT_UNDEF = Lit(UNDEF)


def _pos():
    return field(default=NOPOS, repr=False, compare=False)


@dataclass
class Instr:
    pos: Pos = _pos()

    @property
    def site(self) -> str:
        return self.pos.site()


@dataclass
class Assign(Instr):
    dst: str = ""
    src: Atom = LIT_UNDEF


@dataclass
class Unop(Instr):
    dst: str = ""
    op: str = ""
    arg: Atom = LIT_UNDEF


@dataclass
class Binop(Instr):
    dst: str = ""
    op: str = ""
    left: Atom = LIT_UNDEF
    right: Atom = LIT_UNDEF


@dataclass
class NewObj(Instr):
    dst: str = ""
    alloc: str = ""
    props: tuple = ()  # ((key, Atom), ...)


@dataclass
class MakeClosure(Instr):
    dst: str = ""
    fn_id: str = ""
    decl: bool = False


@dataclass
class GetProp(Instr):
    dst: str = ""
    obj: Atom = LIT_UNDEF
    prop: str = ""


@dataclass
class SetProp(Instr):
    obj: Atom = LIT_UNDEF
    prop: str = ""
    value: Atom = LIT_UNDEF


@dataclass
class Call(Instr):
    dst: Optional[str] = None
    callee: Atom = LIT_UNDEF
    this: Atom = LIT_UNDEF
    args: tuple = ()


@dataclass
class NewQ(Instr):
    dst: str = ""
    alloc: str = ""


@dataclass
class Settle(Instr):
    kind: str = "fulfill"  # fulfill | reject
    queue: Atom = LIT_UNDEF
    value: Atom = LIT_UNDEF


@dataclass
class Register(Instr):
    kind: str = "fulfill"  # fulfill (registerFul) | reject (registerRej)
    queue: Atom = LIT_UNDEF
    callback: Atom = LIT_UNDEF
    dep: Atom = LIT_UNDEF
    receiver: Atom = LIT_UNDEF
    extras: tuple = ()


@dataclass
class SettleFn(Instr):
    dst: str = ""
    queue: Atom = LIT_UNDEF
    kind: str = "fulfill"


@dataclass
class Append(Instr):
    queue: Atom = LIT_UNDEF


@dataclass
class Pop(Instr):
    pass


@dataclass
class AddCallback(Instr):
    kind: str = "timer"  # timer | io
    callback: Atom = LIT_UNDEF
    extras: tuple = ()


@dataclass
class ModelCall(Instr):
    model: str = ""
    args: tuple = ()


@dataclass
class Havoc(Instr):
    dst: Optional[str] = None
    name: str = ""
    args: tuple = ()


@dataclass
class Throw(Instr):
    value: Atom = LIT_UNDEF


@dataclass
class Return(Instr):
    value: Atom = LIT_UNDEF


@dataclass
class EventLoop(Instr):
    pass


# structured statements
@dataclass
class If(Instr):
    cond: Atom = LIT_UNDEF
    then: list = field(default_factory=list)
    orelse: list = field(default_factory=list)


@dataclass
class Loop(Instr):
    """``while``: run ``cond_body``, test ``cond``, run ``body``, repeat."""

    cond_body: list = field(default_factory=list)
    cond: Atom = LIT_UNDEF
    body: list = field(default_factory=list)


@dataclass
class TryCatch(Instr):
    body: list = field(default_factory=list)
    param: str = ""
    handler: list = field(default_factory=list)


@dataclass
class Guard(Instr):
    """``append(q); body; pop()`` where an escaping exception rejects the chain top."""

    queue: Atom = LIT_UNDEF
    body: list = field(default_factory=list)


STRUCTURED = (If, Loop, TryCatch, Guard)
QUEUE_PRIMITIVES = (NewQ, Settle, Register, Append, Pop, AddCallback, EventLoop)


@dataclass
class CoreFunction:
    fn_id: str
    name: Optional[str]
    params: list
    locals: list  # declared variables and temporaries, params excluded
    body: list
    parent: Optional[str]
    pos: Pos = _pos()


@dataclass
class CoreProgram:
    functions: dict  # fn_id -> CoreFunction, insertion ordered
    main: str = "main"
    diagnostics: list = field(default_factory=list)

    def children(self, fn_id: str) -> list:
        return [f for f in self.functions.values() if f.parent == fn_id]


def walk(stmts):
    """Yield every instruction in a statement list, depth first."""
    for s in stmts:
        yield s
        if isinstance(s, If):
            yield from walk(s.then)
            yield from walk(s.orelse)
        elif isinstance(s, Loop):
            yield from walk(s.cond_body)
            yield from walk(s.body)
        elif isinstance(s, TryCatch):
            yield from walk(s.body)
            yield from walk(s.handler)
        elif isinstance(s, Guard):
            yield from walk(s.body)


def all_instrs(prog: CoreProgram):
    for f in prog.functions.values():
        for ins in walk(f.body):
            yield f, ins


# ------------------------------------------------------------ pretty printing

_IDENT = re.compile(r"^[A-Za-z_$][A-Za-z0-9_$]*$")
_KEYWORDS = {
    "var", "let", "const", "function", "return", "if", "else", "throw", "try",
    "catch", "finally", "new", "this", "true", "false", "null", "typeof",
    "while", "for", "undefined",
}


def _lit(v: object) -> str:
    if v is UNDEF:
        return "undefined"
    if v is NULL:
        return "null"
    if v is BOT:
        return "$q.bot"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, float):
        if v != v:
            return "(0 / 0)"
        if v in (float("inf"), float("-inf")):
            return "(1 / 0)" if v > 0 else "(-1 / 0)"
    if isinstance(v, (int, float)) and v < 0:
        return f"(-{_lit(-v)})"
    return repr(v)


def atom_text(a: Atom) -> str:
    if isinstance(a, Var):
        return "this" if a.name == "this" else a.name
    return _lit(a.value)


def _key(k: str) -> str:
    return k if _IDENT.match(k) and k not in _KEYWORDS else json.dumps(k)


def _member(obj: Atom, prop: str) -> str:
    base = atom_text(obj)
    if isinstance(obj, Lit):
        base = f"({base})"
    if _IDENT.match(prop):
        return f"{base}.{prop}"
    return f"{base}[{json.dumps(prop)}]"


def _args(atoms) -> str:
    return ", ".join(atom_text(a) for a in atoms)


class _Printer:
    def __init__(self, prog: CoreProgram):
        self.prog = prog
        self.lines: list[str] = []

    def emit(self, depth: int, text: str) -> None:
        self.lines.append("  " * depth + text)

    def function_text(self, fn: CoreFunction, depth: int) -> list[str]:
        saved = self.lines
        self.lines = []
        name = fn.name or ""
        self.emit(0, f"function {name}({', '.join(fn.params)}) {{")
        self.body(fn, depth + 1)
        self.emit(depth, "}")
        out = self.lines
        self.lines = saved
        return out

    def body(self, fn: CoreFunction, depth: int) -> None:
        if fn.locals:
            self.emit(depth, f"var {', '.join(fn.locals)};")
        self.block(fn.body, depth)

    def block(self, stmts, depth: int) -> None:
        for s in stmts:
            self.stmt(s, depth)

    def stmt(self, s, depth: int) -> None:
        e = self.emit
        if isinstance(s, Assign):
            e(depth, f"{s.dst} = {atom_text(s.src)};")
        elif isinstance(s, Unop):
            op = "typeof " if s.op == "typeof" else s.op
            e(depth, f"{s.dst} = {op}{atom_text(s.arg)};")
        elif isinstance(s, Binop):
            e(depth, f"{s.dst} = {atom_text(s.left)} {s.op} {atom_text(s.right)};")
        elif isinstance(s, NewObj):
            props = ", ".join(f"{_key(k)}: {atom_text(v)}" for k, v in s.props)
            e(depth, f"{s.dst} = {{{props}}};")
        elif isinstance(s, MakeClosure):
            fn = self.prog.functions[s.fn_id]
            text = self.function_text(fn, depth)
            if s.decl:
                e(depth, text[0])
                self.lines.extend(text[1:])
            else:
                e(depth, f"{s.dst} = {text[0]}")
                self.lines.extend(text[1:])
                self.lines[-1] += ";"
        elif isinstance(s, GetProp):
            e(depth, f"{s.dst} = {_member(s.obj, s.prop)};")
        elif isinstance(s, SetProp):
            e(depth, f"{_member(s.obj, s.prop)} = {atom_text(s.value)};")
        elif isinstance(s, Call):
            if s.this == LIT_UNDEF:
                call = f"{atom_text(s.callee)}({_args(s.args)})"
                if isinstance(s.callee, Lit):
                    call = f"({atom_text(s.callee)})({_args(s.args)})"
            else:
                call = f"$q.call({_args((s.callee, s.this) + tuple(s.args))})"
            e(depth, f"{s.dst} = {call};" if s.dst else f"{call};")
        elif isinstance(s, NewQ):
            tag = s.alloc.split("#", 1)[1] if "#" in s.alloc else None
            arg = json.dumps(tag) if tag else ""
            e(depth, f"{s.dst} = $q.newQ({arg});")
        elif isinstance(s, Settle):
            e(depth, f"$q.{s.kind}({_args((s.queue, s.value))});")
        elif isinstance(s, Register):
            name = "registerFul" if s.kind == "fulfill" else "registerRej"
            ops = (s.queue, s.callback, s.dep, s.receiver) + tuple(s.extras)
            e(depth, f"$q.{name}({_args(ops)});")
        elif isinstance(s, SettleFn):
            e(depth, f"{s.dst} = $q.settleFn({atom_text(s.queue)}, {json.dumps(s.kind)});")
        elif isinstance(s, Append):
            e(depth, f"$q.append({atom_text(s.queue)});")
        elif isinstance(s, Pop):
            e(depth, "$q.pop();")
        elif isinstance(s, AddCallback):
            name = "addTimerCallback" if s.kind == "timer" else "addIOCallback"
            e(depth, f"$q.{name}({_args((s.callback,) + tuple(s.extras))});")
        elif isinstance(s, ModelCall):
            rest = ", ".join([json.dumps(s.model)] + [atom_text(a) for a in s.args])
            e(depth, f"$q.model({rest});")
        elif isinstance(s, Havoc):
            rest = ", ".join([json.dumps(s.name)] + [atom_text(a) for a in s.args])
            e(depth, f"{s.dst} = $q.havoc({rest});" if s.dst else f"$q.havoc({rest});")
        elif isinstance(s, Throw):
            e(depth, f"throw {atom_text(s.value)};")
        elif isinstance(s, Return):
            e(depth, f"return {atom_text(s.value)};")
        elif isinstance(s, EventLoop):
            e(depth, "$q.eventLoop();")
        elif isinstance(s, If):
            e(depth, f"if ({atom_text(s.cond)}) {{")
            self.block(s.then, depth + 1)
            if s.orelse:
                e(depth, "} else {")
                self.block(s.orelse, depth + 1)
            e(depth, "}")
        elif isinstance(s, Loop):
            if s.cond_body:
                e(depth, "$loop {")
                self.block(s.cond_body, depth + 1)
                e(depth, f"}} ({atom_text(s.cond)}) {{")
            else:
                e(depth, f"while ({atom_text(s.cond)}) {{")
            self.block(s.body, depth + 1)
            e(depth, "}")
        elif isinstance(s, TryCatch):
            e(depth, "try {")
            self.block(s.body, depth + 1)
            e(depth, f"}} catch ({s.param}) {{")
            self.block(s.handler, depth + 1)
            e(depth, "}")
        elif isinstance(s, Guard):
            e(depth, f"$guard ({atom_text(s.queue)}) {{")
            self.block(s.body, depth + 1)
            e(depth, "}")
        else:  # pragma: no cover
            raise TypeError(f"cannot print {s!r}")


def pretty(prog: CoreProgram) -> str:
    """Render a core program as intrinsic-mode source text."""
    p = _Printer(prog)
    p.body(prog.functions[prog.main], 0)
    return "\n".join(p.lines) + "\n"


# ------------------------------------------------------------ normalization

_ALLOC_FIELDS = {"alloc"}


def normalize(prog: CoreProgram) -> list:
    """A position-free rendering of ``prog`` for structural comparison.

    Function ids and allocation sites are positional, so they are replaced by
    their index in order of first appearance.
    """
    fn_names: dict[str, str] = {}
    sites: dict[str, str] = {}

    def fn_name(fid: str) -> str:
        return fn_names.setdefault(fid, f"F{len(fn_names)}")

    def site_name(s: str) -> str:
        tag = s.split("#", 1)[1] if "#" in s else ""
        return sites.setdefault(s, f"S{len(sites)}{'#' + tag if tag else ''}")

    def conv(x):
        if isinstance(x, list):
            return [conv(i) for i in x]
        if isinstance(x, tuple):
            return tuple(conv(i) for i in x)
        if isinstance(x, Instr):
            out = [type(x).__name__]
            for f in fields(x):
                if f.name == "pos":
                    continue
                v = getattr(x, f.name)
                if f.name == "fn_id":
                    v = fn_name(v)
                elif f.name in _ALLOC_FIELDS:
                    v = site_name(v)
                else:
                    v = conv(v)
                out.append((f.name, v))
            return tuple(out)
        return x

    result = []

    def visit(fid: str):
        fn = prog.functions[fid]
        entry = (fn_name(fid), fn.name, tuple(fn.params), tuple(fn.locals), conv(fn.body))
        result.append(entry)
        for ins in walk(fn.body):
            if isinstance(ins, MakeClosure):
                visit(ins.fn_id)

    visit(prog.main)
    for fid in prog.functions:
        if fid not in fn_names:
            visit(fid)
    return result


def core_to_json(prog: CoreProgram) -> dict:
    """Plain-data view used by ``--dump-core``."""

    def conv(x):
        if isinstance(x, (list, tuple)):
            return [conv(i) for i in x]
        if isinstance(x, Var):
            return {"var": x.name}
        if isinstance(x, Lit):
            v = x.value
            if v is UNDEF or v is NULL or v is BOT:
                return {"lit": repr(v)}
            return {"lit": v}
        if isinstance(x, Instr):
            out = {"op": type(x).__name__, "site": x.pos.site()}
            for f in fields(x):
                if f.name != "pos":
                    out[f.name] = conv(getattr(x, f.name))
            return out
        return x

    return {
        "main": prog.main,
        "functions": [
            {
                "id": f.fn_id,
                "name": f.name,
                "params": f.params,
                "locals": f.locals,
                "parent": f.parent,
                "body": conv(f.body),
            }
            for f in prog.functions.values()
        ],
    }

