"""Per-function control-flow graphs over core instructions.

Each node holds one instruction.  Edges are labelled ``normal``, ``true``,
``false`` or ``exception``.  Exception edges lead to the innermost handler:
a ``catch`` block, the reject-and-pop node of an executor guard, or the
function's ``raise_exit``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import core as C
from .surface import NOPOS, Pos


@dataclass
class Entry:
    pos: Pos = field(default=NOPOS, repr=False, compare=False)


@dataclass
class Exit:
    pos: Pos = field(default=NOPOS, repr=False, compare=False)


@dataclass
class RaiseExit:
    pos: Pos = field(default=NOPOS, repr=False, compare=False)


@dataclass
class Nop:
    pos: Pos = field(default=NOPOS, repr=False, compare=False)


@dataclass
class Branch:
    cond: C.Atom = C.LIT_UNDEF
    pos: Pos = field(default=NOPOS, repr=False, compare=False)


@dataclass
class CatchBind:
    """Start of a handler: binds the pending exception to ``param``."""

    param: str = ""
    pos: Pos = field(default=NOPOS, repr=False, compare=False)


@dataclass
class ErrorReject:
    """Rejects the queue-chain top with the pending exception and pops it."""

    pos: Pos = field(default=NOPOS, repr=False, compare=False)


RAISING = (
    C.Call, C.GetProp, C.SetProp, C.Register, C.Settle, C.Append, C.SettleFn, C.Throw,
    C.AddCallback, C.ModelCall,
)

EXC_VAR = "%exc"
RET_VAR = "%ret"


@dataclass
class CFGNode:
    id: int
    instr: object

    @property
    def pos(self) -> Pos:
        return self.instr.pos

    @property
    def site(self) -> str:
        return self.instr.pos.site()


@dataclass
class FunctionCFG:
    fn_id: str
    name: Optional[str]
    params: list
    locals: list
    parent: Optional[str]
    entry: int
    exit: int
    raise_exit: int
    nodes: dict = field(default_factory=dict)  # id -> CFGNode
    edges: list = field(default_factory=list)  # (src, dst, label)
    pos: Pos = field(default=NOPOS, repr=False, compare=False)

    def __post_init__(self):
        self._succ: dict[int, list] = {}
        self._pred: dict[int, list] = {}

    def index(self) -> None:
        self._succ = {n: [] for n in self.nodes}
        self._pred = {n: [] for n in self.nodes}
        for s, d, lab in self.edges:
            self._succ[s].append((d, lab))
            self._pred[d].append((s, lab))

    def succ(self, node: int) -> list:
        return self._succ[node]

    def pred(self, node: int) -> list:
        return self._pred[node]

    def next(self, node: int, label: str = "normal") -> Optional[int]:
        for d, lab in self._succ[node]:
            if lab == label:
                return d
        return None

    def to_json(self) -> dict:
        return {
            "id": self.fn_id,
            "entry": self.entry,
            "exit": self.exit,
            "raiseExit": self.raise_exit,
            "nodes": [
                {"id": n.id, "op": type(n.instr).__name__, "site": n.site}
                for n in sorted(self.nodes.values(), key=lambda n: n.id)
            ],
            "edges": [list(e) for e in self.edges],
        }


class _Builder:
    def __init__(self, fn: C.CoreFunction):
        self.fn = fn
        self.nodes: dict[int, CFGNode] = {}
        self.edges: list = []

    def node(self, instr) -> int:
        i = len(self.nodes)
        self.nodes[i] = CFGNode(i, instr)
        return i

    def link(self, preds, target: int) -> None:
        for p, lab in preds:
            self.edges.append((p, target, lab))

    def add(self, instr, preds) -> int:
        i = self.node(instr)
        self.link(preds, i)
        return i

    def build(self) -> FunctionCFG:
        fpos = self.fn.pos
        entry = self.node(Entry(pos=fpos))
        exit_ = self.node(Exit(pos=fpos))
        raise_exit = self.node(RaiseExit(pos=fpos))
        self.exit = exit_
        out = self.seq(self.fn.body, [(entry, "normal")], raise_exit)
        self.link(out, exit_)
        reach = {entry}
        work = [entry]
        succ: dict[int, list] = {}
        for s, d, _ in self.edges:
            succ.setdefault(s, []).append(d)
        while work:
            n = work.pop()
            for d in succ.get(n, ()):
                if d not in reach:
                    reach.add(d)
                    work.append(d)
        keep = reach | {exit_, raise_exit}
        nodes = {i: n for i, n in self.nodes.items() if i in keep}
        edges = [e for e in self.edges if e[0] in keep and e[1] in keep]
        g = FunctionCFG(
            self.fn.fn_id, self.fn.name, list(self.fn.params), list(self.fn.locals),
            self.fn.parent, entry, exit_, raise_exit, nodes, edges, fpos,
        )
        g.index()
        return g

    def seq(self, stmts, preds, handler: int):
        for s in stmts:
            preds = self.stmt(s, preds, handler)
        return preds

    def stmt(self, s, preds, handler: int):
        if isinstance(s, C.If):
            b = self.add(Branch(cond=s.cond, pos=s.pos), preds)
            t = self.seq(s.then, [(b, "true")], handler)
            f = self.seq(s.orelse, [(b, "false")], handler)
            return t + f
        if isinstance(s, C.Loop):
            head = self.add(Nop(pos=s.pos), preds)
            c = self.seq(s.cond_body, [(head, "normal")], handler)
            b = self.add(Branch(cond=s.cond, pos=s.pos), c)
            body = self.seq(s.body, [(b, "true")], handler)
            self.link(body, head)
            return [(b, "false")]
        if isinstance(s, C.TryCatch):
            catch = self.node(CatchBind(param=s.param, pos=s.pos))
            body = self.seq(s.body, preds, catch)
            hout = self.seq(s.handler, [(catch, "normal")], handler)
            return body + hout
        if isinstance(s, C.Guard):
            a = self.add(C.Append(pos=s.pos, queue=s.queue), preds)
            self.edges.append((a, handler, "exception"))
            er = self.node(ErrorReject(pos=s.pos))
            body = self.seq(s.body, [(a, "normal")], er)
            pop = self.add(C.Pop(pos=s.pos), body)
            return [(pop, "normal"), (er, "normal")]
        if isinstance(s, C.Return):
            r = self.add(s, preds)
            self.edges.append((r, self.exit, "normal"))
            return []
        if isinstance(s, C.Throw):
            t = self.add(s, preds)
            self.edges.append((t, handler, "exception"))
            return []
        n = self.add(s, preds)
        if isinstance(s, RAISING):
            self.edges.append((n, handler, "exception"))
        return [(n, "normal")]


def build_function_cfg(fn: C.CoreFunction) -> FunctionCFG:
    return _Builder(fn).build()


@dataclass
class ProgramCFG:
    program: C.CoreProgram
    functions: dict  # fn_id -> FunctionCFG
    # (fn_id, name) -> fn_id of the declaring function, None when unresolved
    resolution: dict
    # fn_id -> set of its variables referenced by nested functions
    captured: dict

    @property
    def main(self) -> FunctionCFG:
        return self.functions[self.program.main]

    def declaring(self, fn_id: str, name: str) -> Optional[str]:
        return self.resolution.get((fn_id, name))

    def is_heap_var(self, fn_id: str, name: str) -> bool:
        owner = self.declaring(fn_id, name)
        return owner is not None and (owner != fn_id or name in self.captured[owner])

    def to_json(self) -> dict:
        return {"functions": [g.to_json() for g in self.functions.values()]}


def _atoms_of(ins):
    for v in vars(ins).values():
        if isinstance(v, C.Var):
            yield v
        elif isinstance(v, tuple):
            for x in v:
                if isinstance(x, C.Var):
                    yield x
                elif isinstance(x, tuple):
                    for y in x:
                        if isinstance(y, C.Var):
                            yield y


def _names_written(ins):
    for attr in ("dst", "param"):
        v = getattr(ins, attr, None)
        if isinstance(v, str):
            yield v


def build_cfg(prog: C.CoreProgram) -> ProgramCFG:
    """One CFG per function, plus static variable resolution."""
    funcs = {fid: build_function_cfg(f) for fid, f in prog.functions.items()}
    declared = {
        fid: set(f.params) | set(f.locals) | {"this"} for fid, f in prog.functions.items()
    }
    resolution: dict = {}
    captured: dict = {fid: set() for fid in prog.functions}

    def resolve(fid: str, name: str):
        f = fid
        while f is not None:
            if name in declared[f]:
                return f
            f = prog.functions[f].parent
        return None

    for fid, g in funcs.items():
        names = set(declared[fid])
        for n in g.nodes.values():
            ins = n.instr
            for v in _atoms_of(ins):
                names.add(v.name)
            names.update(_names_written(ins))
        for name in names:
            owner = resolve(fid, name)
            resolution[(fid, name)] = owner
            if owner is not None and owner != fid:
                captured[owner].add(name)
    return ProgramCFG(prog, funcs, resolution, captured)
