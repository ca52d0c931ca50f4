"""Concrete small-step interpreter for the queue calculus.

A :class:`Configuration` holds the queue store (pi), the queue chain (phi),
the promise-job list (kappa), the timer/IO list (tau), the JavaScript heap,
and the control state: a stack of pending queue reductions (``redexes``)
layered over a stack of call frames.  With no frames left the control is the
event loop.

``step`` applies exactly one rule and records its name in ``last_rule``.
Nondeterminism appears in two places: picking a timer/IO job when kappa is
empty, and picking the outcome of an I/O model.  ``choices`` lists the options
at such a point and ``step(config, choice)`` takes one.
"""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass, field
from typing import Optional, Union

from . import cfg as G
from . import core as C
from .errors import BoundExceeded, StuckConfiguration
from .models import CONCRETE_BOOL, CONCRETE_NUM, CONCRETE_STR, ModelRegistry, shared_registry
from .values import (
    BOT, GLOBAL_SITE, L_IO, L_TIME, NULL, UNDEF, Closure, ObjRef, QueueRef, SettleFnValue,
    binop, is_callable, to_str, truthy, unop,
)

Address = Union[int, str]

PENDING = "pending"
FULFILLED = "fulfilled"
REJECTED = "rejected"
_STATE_OF = {"fulfill": FULFILLED, "reject": REJECTED}

PROPERTY_ON_NULLISH = "PropertyAccessOnNullish"
CALL_NON_FUNCTION = "CallNonFunction"


# ------------------------------------------------------------------ domains


@dataclass(frozen=True)
class Callback:
    dep: Address
    fn: object
    args: tuple
    receiver: object = UNDEF
    registered_on: Address = None


@dataclass
class QueueObject:
    state: str = PENDING
    value: object = None
    on_fulfill: list = field(default_factory=list)
    on_reject: list = field(default_factory=list)
    dependents: list = field(default_factory=list)


@dataclass
class HeapObject:
    props: dict
    site: str


class Scope:
    __slots__ = ("vars", "parent", "fn_id")

    def __init__(self, fn_id: str, parent: Optional["Scope"]):
        self.vars: dict = {}
        self.parent = parent
        self.fn_id = fn_id

    def lookup(self, name: str) -> "Scope":
        s = self
        while s is not None:
            if name in s.vars:
                return s
            s = s.parent
        raise StuckConfiguration(f"unbound variable {name!r}")


@dataclass
class Frame:
    fn_id: str
    node: int
    scope: Scope
    kind: str  # main | call | callback
    dst: Optional[str] = None
    callback: Optional[Callback] = None
    ret: object = UNDEF
    exc: object = UNDEF


@dataclass(frozen=True)
class SettleRedex:
    kind: str  # fulfill | reject
    queue: Address
    value: object


@dataclass(frozen=True)
class RegisterRedex:
    kind: str
    queue: Address
    fn: object
    dep: Address
    receiver: object
    extras: tuple


@dataclass(frozen=True)
class PopRedex:
    pass


# ------------------------------------------------------------------- events


@dataclass(frozen=True)
class CallbackBegin:
    fn: str
    args: tuple  # printable
    registered_on: str
    dep: str
    source: str  # kappa | tau
    kappa_len: int
    arg_values: tuple = field(default=(), compare=False, repr=False)

    kind = "CallbackBegin"

    @property
    def site(self) -> str:
        return self.registered_on


@dataclass(frozen=True)
class CallbackEnd:
    fn: str
    raised: bool = False
    kind = "CallbackEnd"
    site = ""


@dataclass(frozen=True)
class Settle:
    queue: str  # allocation site of the queue
    addr: Address
    state: str
    value: str
    kind = "Settle"

    @property
    def site(self) -> str:
        return self.queue


@dataclass(frozen=True)
class UncaughtException:
    value: str
    kind = "UncaughtException"
    site = ""


@dataclass(frozen=True)
class TypeErrorEvent:
    site: str
    error: str  # PropertyAccessOnNullish | CallNonFunction
    kind = "TypeError"


# ------------------------------------------------------------ configuration


@dataclass
class Configuration:
    queues: dict = field(default_factory=dict)  # pi
    chain: list = field(default_factory=list)  # phi, top first
    kappa: list = field(default_factory=list)
    tau: list = field(default_factory=list)
    redexes: list = field(default_factory=list)  # top last
    frames: list = field(default_factory=list)  # top last
    heap: dict = field(default_factory=dict)
    queue_sites: dict = field(default_factory=dict)
    at_loop: bool = False
    status: str = "running"  # running | done | uncaught | bound | steps
    trace: list = field(default_factory=list)
    next_addr: int = 1
    dispatches: int = 0
    steps: int = 0
    last_rule: str = ""
    main_scope: Optional[Scope] = None
    global_obj: Optional[ObjRef] = None

    @property
    def terminal(self) -> bool:
        return self.status != "running"

    def fresh(self) -> int:
        a = self.next_addr
        self.next_addr += 1
        return a

    def site_of_queue(self, addr: Address) -> str:
        return self.queue_sites.get(addr, str(addr))


def initial_queues() -> dict:
    return {
        L_TIME: QueueObject(FULFILLED, BOT),
        L_IO: QueueObject(FULFILLED, BOT),
    }


@dataclass
class Trace:
    events: list
    status: str
    final: dict = field(default_factory=dict)

    def callbacks(self) -> list:
        return [e for e in self.events if isinstance(e, CallbackBegin)]

    def callback_order(self) -> list:
        return [e.fn for e in self.callbacks()]

    def key(self) -> tuple:
        return tuple(self.events) + (self.status,)

    def to_json(self) -> list:
        out = []
        for e in self.events:
            d = {"kind": e.kind, "fn": getattr(e, "fn", ""), "site": e.site}
            if isinstance(e, CallbackBegin):
                d["args"] = list(e.args)
                d["source"] = e.source
            elif isinstance(e, Settle):
                d["state"] = e.state
                d["value"] = e.value
            elif isinstance(e, TypeErrorEvent):
                d["error"] = e.error
            elif isinstance(e, UncaughtException):
                d["value"] = e.value
            out.append(d)
        return out


# ------------------------------------------------------------------ policies


@dataclass(frozen=True)
class Deterministic:
    seed: int = 0


@dataclass(frozen=True)
class Scripted:
    picks: tuple = ()


@dataclass(frozen=True)
class Exhaustive:
    bound: int = 64


@dataclass
class RunResult:
    traces: list
    bound_exceeded: int = 0
    schedules: int = 0

    def to_json(self) -> dict:
        if len(self.traces) == 1:
            events = self.traces[0].to_json()
        else:
            events = [t.to_json() for t in self.traces]
        return {"events": events, "schedules": self.schedules, "boundExceeded": self.bound_exceeded}


# ------------------------------------------------------------------- machine


class Machine:
    """Interpreter over a compiled program; holds no per-run state."""

    def __init__(self, program: G.ProgramCFG, models: Optional[ModelRegistry] = None,
                 max_steps: int = 200_000):
        self.program = program
        self.models = models if models is not None else shared_registry()
        self.max_steps = max_steps

    # --------------------------------------------------------- setup
    def initial(self) -> Configuration:
        c = Configuration(queues=initial_queues())
        c.queue_sites = {L_TIME: L_TIME, L_IO: L_IO}
        gaddr = c.fresh()
        c.heap[gaddr] = HeapObject({}, GLOBAL_SITE)
        c.global_obj = ObjRef(gaddr)
        main = self.program.main
        scope = self.new_scope(main, None, c.global_obj)
        c.main_scope = scope
        c.frames.append(Frame(main.fn_id, main.entry, scope, "main"))
        return c

    def new_scope(self, g: G.FunctionCFG, parent: Optional[Scope], this) -> Scope:
        s = Scope(g.fn_id, parent)
        for name in g.params:
            s.vars[name] = UNDEF
        for name in g.locals:
            s.vars[name] = UNDEF
        s.vars["this"] = this
        return s

    # ------------------------------------------------------ helpers
    def fn_name(self, c: Configuration, v) -> str:
        if isinstance(v, Closure):
            return v.fn_id
        if isinstance(v, SettleFnValue):
            return f"${v.kind}:{c.site_of_queue(v.queue)}"
        return "<non-function>"

    def show(self, c: Configuration, v) -> str:
        if isinstance(v, ObjRef):
            return f"obj@{c.heap[v.addr].site}"
        if isinstance(v, QueueRef):
            return f"queue@{c.site_of_queue(v.addr)}"
        if isinstance(v, (Closure, SettleFnValue)):
            return f"fn:{self.fn_name(c, v)}"
        if v is BOT:
            return "BOT"
        if isinstance(v, str):
            return repr(v)
        return to_str(v)

    def read(self, frame: Frame, atom: C.Atom):
        if isinstance(atom, C.Lit):
            return atom.value
        return frame.scope.lookup(atom.name).vars[atom.name]

    def write(self, frame: Frame, name: str, value) -> None:
        frame.scope.lookup(name).vars[name] = value

    def graph(self, frame: Frame) -> G.FunctionCFG:
        return self.program.functions[frame.fn_id]

    def advance(self, frame: Frame, label: str = "normal") -> None:
        nxt = self.graph(frame).next(frame.node, label)
        if nxt is None:
            raise StuckConfiguration(f"no {label} successor at {frame.fn_id}:{frame.node}")
        frame.node = nxt

    def default_handler(self, c: Configuration, kind: str):
        name = "$identity" if kind == "fulfill" else "$rethrow"
        return c.main_scope.vars.get(name) if c.main_scope else None

    # ----------------------------------------------------- choices
    def choices(self, c: Configuration) -> list:
        """Options at a nondeterministic point, or [] when the next step is determined."""
        if c.terminal or c.redexes:
            return []
        if c.frames:
            f = c.frames[-1]
            ins = self.graph(f).nodes[f.node].instr
            if isinstance(ins, C.ModelCall):
                model = self.models.get(ins.model)
                n = len(model.branches()) if model else 1
                return list(range(n)) if n > 1 else []
            return []
        if c.at_loop and not c.kappa and len(c.tau) > 1:
            return list(range(len(c.tau)))
        return []

    # -------------------------------------------------------- step
    def step(self, c: Configuration, choice: Optional[int] = None) -> Configuration:
        """Apply one rule to ``c`` in place and return it."""
        if c.terminal:
            raise StuckConfiguration("configuration is terminal")
        c.steps += 1
        if c.redexes:
            r = c.redexes.pop()
            if isinstance(r, SettleRedex):
                self.settle(c, r.kind, r.queue, r.value)
            elif isinstance(r, RegisterRedex):
                self.register(c, r.kind, r.queue, r.fn, r.dep, r.receiver, r.extras)
            else:
                if not c.chain:
                    raise StuckConfiguration("pop on an empty queue chain")
                c.chain.pop(0)
                c.last_rule = "pop"
            return c
        if c.frames:
            self.exec_node(c, c.frames[-1], choice)
            return c
        if c.at_loop:
            self.event_loop(c, choice)
            return c
        raise StuckConfiguration("no frames, no redexes and not at the event loop")

    # -------------------------------------------------- queue rules
    def settle(self, c: Configuration, kind: str, p: Address, v) -> None:
        q = c.queues[p]
        if q.state != PENDING:
            c.last_rule = f"{kind}-settled"
            return
        if isinstance(v, QueueRef) and v.addr in c.queues:
            vq = c.queues[v.addr]
            if vq.state == PENDING:
                if p not in vq.dependents:
                    vq.dependents.append(p)
                c.last_rule = f"{kind}-pend-pend"
            elif vq.state == FULFILLED:
                c.redexes.append(SettleRedex("fulfill", p, vq.value))
                c.last_rule = f"{kind}-pend-ful"
            else:
                c.redexes.append(SettleRedex("reject", p, vq.value))
                c.last_rule = f"{kind}-pend-rej"
            return
        callbacks = q.on_fulfill if kind == "fulfill" else q.on_reject
        if v is BOT:
            scheduled = list(callbacks)
            c.last_rule = f"{kind}-pending-bot"
        else:
            scheduled = [Callback(cb.dep, cb.fn, (v,), cb.receiver, cb.registered_on) for cb in callbacks]
            c.last_rule = f"{kind}-pending"
        c.kappa.extend(scheduled)
        q.state = _STATE_OF[kind]
        q.value = v
        q.on_fulfill = []
        q.on_reject = []
        c.trace.append(Settle(c.site_of_queue(p), p, q.state, self.show(c, v)))
        for dep in reversed(q.dependents):
            c.redexes.append(SettleRedex(kind, dep, v))

    def register(self, c: Configuration, kind: str, p: Address, fn, dep: Address, receiver, extras) -> None:
        q = c.queues[p]
        tag = "registerFul" if kind == "fulfill" else "registerRej"
        cb = Callback(dep, fn, tuple(extras), receiver, p)
        if q.state == PENDING:
            (q.on_fulfill if kind == "fulfill" else q.on_reject).append(cb)
            c.last_rule = f"{tag}-pending"
            return
        if q.state != _STATE_OF[kind]:
            c.last_rule = f"{tag}-{q.state}"
            return
        if p in (L_TIME, L_IO):
            assert q.value is BOT
            c.tau.append(cb)
            c.last_rule = f"{tag}-timer-io-bot"
        elif q.value is BOT:
            c.kappa.append(cb)
            c.last_rule = f"{tag}-{q.state}-bot"
        else:
            c.kappa.append(Callback(dep, fn, (q.value,), receiver, p))
            c.last_rule = f"{tag}-{q.state}"

    # --------------------------------------------------- event loop
    def event_loop(self, c: Configuration, choice: Optional[int]) -> None:
        if c.chain:
            raise StuckConfiguration("queue chain must be empty at the event loop")
        if c.kappa:
            cb = c.kappa.pop(0)
            source = "kappa"
            c.last_rule = "event-loop"
        elif c.tau:
            idx = choice if choice is not None else 0
            if not 0 <= idx < len(c.tau):
                raise StuckConfiguration(f"invalid schedule pick {idx}")
            cb = c.tau.pop(idx)
            source = "tau"
            c.last_rule = "event-loop-timers-io"
        else:
            c.status = "done"
            c.at_loop = False
            c.last_rule = "terminal"
            return
        # kappa is empty whenever a tau job is taken; recorded for the priority check
        kappa_len = len(c.kappa) if source == "tau" else 0
        c.dispatches += 1
        c.chain.insert(0, cb.dep)
        name = self.fn_name(c, cb.fn)
        c.trace.append(CallbackBegin(
            name,
            tuple(self.show(c, a) for a in cb.args),
            c.site_of_queue(cb.registered_on),
            c.site_of_queue(cb.dep),
            source,
            kappa_len,
            arg_values=tuple(cb.args),
        ))
        self.invoke_callback(c, cb)

    def invoke_callback(self, c: Configuration, cb: Callback) -> None:
        fn = cb.fn
        if isinstance(fn, Closure):
            g = self.program.functions[fn.fn_id]
            this = c.global_obj if cb.receiver is UNDEF or cb.receiver is NULL else cb.receiver
            scope = self.new_scope(g, fn.env, this)
            for i, name in enumerate(g.params):
                scope.vars[name] = cb.args[i] if i < len(cb.args) else UNDEF
            c.frames.append(Frame(g.fn_id, g.entry, scope, "callback", callback=cb))
            return
        if isinstance(fn, SettleFnValue):
            c.trace.append(CallbackEnd(self.fn_name(c, fn)))
            c.redexes.append(PopRedex())
            c.redexes.append(SettleRedex("fulfill", cb.dep, UNDEF))
            c.redexes.append(SettleRedex(fn.kind, fn.queue, cb.args[0] if cb.args else UNDEF))
            return
        raise StuckConfiguration("scheduled callback is not callable")

    # ------------------------------------------------- instructions
    def type_error(self, c: Configuration, frame: Frame, ins, kind: str) -> None:
        site = ins.pos.site()
        c.trace.append(TypeErrorEvent(site, kind))
        addr = c.fresh()
        c.heap[addr] = HeapObject({"name": "TypeError", "message": kind}, f"{site}#te")
        self.throw(c, frame, ObjRef(addr))

    def throw(self, c: Configuration, frame: Frame, value) -> None:
        frame.exc = value
        self.advance(frame, "exception")

    def nullish_or_nonqueue(self, c, frame, ins, v) -> None:
        kind = PROPERTY_ON_NULLISH if v is UNDEF or v is NULL else CALL_NON_FUNCTION
        self.type_error(c, frame, ins, kind)

    def exec_node(self, c: Configuration, frame: Frame, choice: Optional[int]) -> None:
        g = self.graph(frame)
        ins = g.nodes[frame.node].instr
        c.last_rule = "js"
        rd = lambda a: self.read(frame, a)  # noqa: E731
        if isinstance(ins, (G.Entry, G.Nop)):
            self.advance(frame)
        elif isinstance(ins, C.Assign):
            self.write(frame, ins.dst, rd(ins.src))
            self.advance(frame)
        elif isinstance(ins, C.Unop):
            self.write(frame, ins.dst, unop(ins.op, rd(ins.arg)))
            self.advance(frame)
        elif isinstance(ins, C.Binop):
            self.write(frame, ins.dst, self.binop(c, ins.op, rd(ins.left), rd(ins.right)))
            self.advance(frame)
        elif isinstance(ins, C.NewObj):
            addr = c.fresh()
            c.heap[addr] = HeapObject({k: rd(a) for k, a in ins.props}, ins.alloc)
            self.write(frame, ins.dst, ObjRef(addr))
            self.advance(frame)
        elif isinstance(ins, C.MakeClosure):
            self.write(frame, ins.dst, Closure(ins.fn_id, frame.scope))
            self.advance(frame)
        elif isinstance(ins, C.GetProp):
            o = rd(ins.obj)
            if o is UNDEF or o is NULL:
                self.type_error(c, frame, ins, PROPERTY_ON_NULLISH)
                return
            self.write(frame, ins.dst, self.get_prop(c, o, ins.prop))
            self.advance(frame)
        elif isinstance(ins, C.SetProp):
            o = rd(ins.obj)
            if o is UNDEF or o is NULL:
                self.type_error(c, frame, ins, PROPERTY_ON_NULLISH)
                return
            if isinstance(o, ObjRef):
                c.heap[o.addr].props[ins.prop] = rd(ins.value)
            self.advance(frame)
        elif isinstance(ins, C.Call):
            self.call(c, frame, ins)
        elif isinstance(ins, C.NewQ):
            addr = c.fresh()
            c.queues[addr] = QueueObject()
            c.queue_sites[addr] = ins.alloc
            self.write(frame, ins.dst, QueueRef(addr))
            self.advance(frame)
            c.last_rule = "newQ"
        elif isinstance(ins, C.Settle):
            q = rd(ins.queue)
            if not isinstance(q, QueueRef):
                self.nullish_or_nonqueue(c, frame, ins, q)
                return
            self.advance(frame)
            c.redexes.append(SettleRedex(ins.kind, q.addr, rd(ins.value)))
        elif isinstance(ins, C.Register):
            q = rd(ins.queue)
            if not isinstance(q, QueueRef):
                self.nullish_or_nonqueue(c, frame, ins, q)
                return
            fn = rd(ins.callback)
            if not is_callable(fn):
                fn = self.default_handler(c, ins.kind)
                if fn is None:
                    self.type_error(c, frame, ins, CALL_NON_FUNCTION)
                    return
            dep = rd(ins.dep)
            if not isinstance(dep, QueueRef):
                self.nullish_or_nonqueue(c, frame, ins, dep)
                return
            self.advance(frame)
            c.redexes.append(RegisterRedex(ins.kind, q.addr, fn, dep.addr, rd(ins.receiver),
                                           tuple(rd(a) for a in ins.extras)))
        elif isinstance(ins, C.SettleFn):
            q = rd(ins.queue)
            if not isinstance(q, QueueRef):
                self.nullish_or_nonqueue(c, frame, ins, q)
                return
            self.write(frame, ins.dst, SettleFnValue(ins.kind, q.addr))
            self.advance(frame)
        elif isinstance(ins, C.Append):
            q = rd(ins.queue)
            if not isinstance(q, QueueRef):
                self.nullish_or_nonqueue(c, frame, ins, q)
                return
            c.chain.insert(0, q.addr)
            self.advance(frame)
            c.last_rule = "append"
        elif isinstance(ins, C.Pop):
            if not c.chain:
                raise StuckConfiguration("pop on an empty queue chain")
            c.chain.pop(0)
            self.advance(frame)
            c.last_rule = "pop"
        elif isinstance(ins, C.AddCallback):
            fn = rd(ins.callback)
            if not is_callable(fn):
                self.type_error(c, frame, ins, CALL_NON_FUNCTION)
                return
            target = L_TIME if ins.kind == "timer" else L_IO
            self.advance(frame)
            c.redexes.append(RegisterRedex("fulfill", target, fn, target, UNDEF,
                                           tuple(rd(a) for a in ins.extras)))
            c.last_rule = "add-timer-callback" if ins.kind == "timer" else "add-io-callback"
        elif isinstance(ins, C.ModelCall):
            self.model_call(c, frame, ins, choice)
        elif isinstance(ins, C.Havoc):
            if ins.dst:
                self.write(frame, ins.dst, UNDEF)
            self.advance(frame)
        elif isinstance(ins, C.Return):
            frame.ret = rd(ins.value)
            self.advance(frame)
        elif isinstance(ins, C.Throw):
            self.throw(c, frame, rd(ins.value))
        elif isinstance(ins, G.Branch):
            self.advance(frame, "true" if truthy(rd(ins.cond)) else "false")
        elif isinstance(ins, G.CatchBind):
            self.write(frame, ins.param, frame.exc)
            self.advance(frame)
        elif isinstance(ins, G.ErrorReject):
            if not c.chain:
                raise StuckConfiguration("error rule needs a non-empty queue chain")
            top = c.chain.pop(0)
            self.advance(frame)
            c.redexes.append(SettleRedex("reject", top, frame.exc))
            c.last_rule = "error"
        elif isinstance(ins, C.EventLoop):
            c.frames.pop()
            c.at_loop = True
        elif isinstance(ins, G.Exit):
            self.return_from(c, frame)
        elif isinstance(ins, G.RaiseExit):
            self.raise_from(c, frame)
        else:  # pragma: no cover
            raise StuckConfiguration(f"unknown instruction {ins!r}")

    def binop(self, c: Configuration, op: str, a, b):
        if op == "+" and (isinstance(a, ObjRef) or isinstance(b, ObjRef)):
            return to_str(a) + to_str(b)
        return binop(op, a, b)

    def get_prop(self, c: Configuration, o, prop: str):
        if isinstance(o, ObjRef):
            return c.heap[o.addr].props.get(prop, UNDEF)
        if isinstance(o, str) and prop == "length":
            return len(o)
        return UNDEF

    def call(self, c: Configuration, frame: Frame, ins: C.Call) -> None:
        f = self.read(frame, ins.callee)
        args = [self.read(frame, a) for a in ins.args]
        if isinstance(f, Closure):
            g = self.program.functions[f.fn_id]
            this = self.read(frame, ins.this)
            if this is UNDEF or this is NULL:
                this = c.global_obj
            scope = self.new_scope(g, f.env, this)
            for i, name in enumerate(g.params):
                scope.vars[name] = args[i] if i < len(args) else UNDEF
            c.frames.append(Frame(g.fn_id, g.entry, scope, "call", dst=ins.dst))
            return
        if isinstance(f, SettleFnValue):
            if ins.dst:
                self.write(frame, ins.dst, UNDEF)
            self.advance(frame)
            c.redexes.append(SettleRedex(f.kind, f.queue, args[0] if args else UNDEF))
            return
        self.type_error(c, frame, ins, CALL_NON_FUNCTION)

    def model_call(self, c: Configuration, frame: Frame, ins: C.ModelCall, choice) -> None:
        model = self.models.get(ins.model)
        if model is None:
            raise StuckConfiguration(f"unknown model {ins.model}")
        fn = self.read(frame, ins.args[model.callback_index])
        if not is_callable(fn):
            self.type_error(c, frame, ins, CALL_NON_FUNCTION)
            return
        branches = model.branches()
        pick = choice if choice is not None else 0
        extras = tuple(self.sample(c, alt, ins.pos.site()) for alt in branches[pick])
        self.advance(frame)
        c.redexes.append(RegisterRedex("fulfill", L_IO, fn, L_IO, UNDEF, extras))
        c.last_rule = "add-io-callback"

    def sample(self, c: Configuration, alt, site: str):
        k = alt.kind
        if k == "undef":
            return UNDEF
        if k == "null":
            return NULL
        if k == "anynum":
            return CONCRETE_NUM
        if k == "anystr":
            return CONCRETE_STR
        if k == "anybool":
            return CONCRETE_BOOL
        if k in ("num", "str"):
            return alt.value
        addr = c.fresh()
        if k == "error":
            c.heap[addr] = HeapObject({"name": "Error", "message": "model error"}, f"{site}#err")
        else:
            props = {key: self.sample(c, sub, site) for key, sub in alt.fields}
            c.heap[addr] = HeapObject(props, f"{site}#obj")
        return ObjRef(addr)

    def return_from(self, c: Configuration, frame: Frame) -> None:
        c.frames.pop()
        if frame.kind == "call":
            caller = c.frames[-1]
            call = self.graph(caller).nodes[caller.node].instr
            if call.dst:
                self.write(caller, call.dst, frame.ret)
            self.advance(caller)
        elif frame.kind == "callback":
            cb = frame.callback
            c.trace.append(CallbackEnd(self.fn_name(c, cb.fn)))
            c.redexes.append(PopRedex())
            c.redexes.append(SettleRedex("fulfill", cb.dep, frame.ret))
        else:
            c.status = "done"

    def raise_from(self, c: Configuration, frame: Frame) -> None:
        c.frames.pop()
        if frame.kind == "call":
            caller = c.frames[-1]
            self.throw(c, caller, frame.exc)
            return
        if frame.kind == "callback":
            c.trace.append(CallbackEnd(self.fn_name(c, frame.callback.fn), raised=True))
        if c.chain:
            top = c.chain.pop(0)
            c.redexes.append(SettleRedex("reject", top, frame.exc))
            c.last_rule = "error"
            return
        c.trace.append(UncaughtException(self.show(c, frame.exc)))
        c.status = "uncaught"
        c.last_rule = "uncaught"

    # ------------------------------------------------------ driving
    def run_until_choice(self, c: Configuration, bound: Optional[int] = None) -> list:
        """Step until a choice point or a terminal configuration; return the options."""
        while not c.terminal:
            if bound is not None and c.dispatches > bound:
                c.status = "bound"
                break
            if c.steps >= self.max_steps:
                c.status = "steps"
                break
            opts = self.choices(c)
            if opts:
                return opts
            self.step(c)
        return []

    def snapshot(self, c: Configuration) -> dict:
        return {
            "queues": {
                c.site_of_queue(a): q.state for a, q in sorted(c.queues.items(), key=lambda kv: str(kv[0]))
            },
        }

    def finish(self, c: Configuration) -> Trace:
        return Trace(list(c.trace), c.status, self.snapshot(c))

    def run(self, policy=None) -> RunResult:
        policy = policy if policy is not None else Deterministic(0)
        if isinstance(policy, Exhaustive):
            return self.explore(policy.bound)
        c = self.initial()
        if isinstance(policy, Deterministic):
            rng = random.Random(policy.seed)
            pick = lambda opts: rng.choice(opts)  # noqa: E731
        else:
            picks = list(policy.picks)
            pick = lambda opts: picks.pop(0) if picks else opts[0]  # noqa: E731
        schedules = 0
        while True:
            opts = self.run_until_choice(c)
            if not opts:
                break
            schedules += 1
            self.step(c, pick(opts))
        return RunResult([self.finish(c)], 0, 1)

    def explore(self, bound: int = 64) -> RunResult:
        """Depth-first enumeration of every schedule, up to ``bound`` dispatches per branch."""
        stack = [self.initial()]
        seen: dict = {}
        exceeded = 0
        leaves = 0
        while stack:
            c = stack.pop()
            opts = self.run_until_choice(c, bound)
            if opts:
                children = [copy.deepcopy(c) for _ in opts[1:]]
                for o, child in reversed(list(zip(opts, [c] + children))):
                    self.step(child, o)
                    stack.append(child)
                continue
            leaves += 1
            if c.status == "bound":
                exceeded += 1
            t = self.finish(c)
            seen.setdefault(t.key(), t)
        return RunResult(list(seen.values()), exceeded, leaves)


def priority_check(trace: Trace) -> bool:
    """No timer/IO job may start while promise jobs are waiting."""
    for e in trace.events:
        if isinstance(e, CallbackBegin) and e.source == "tau" and e.kappa_len > 0:
            return False
    return True


def run_program(program: G.ProgramCFG, policy=None, models=None) -> RunResult:
    return Machine(program, models).run(policy)


__all__ = [
    "Address", "Callback", "QueueObject", "Configuration", "Machine", "Trace", "RunResult",
    "Deterministic", "Scripted", "Exhaustive", "priority_check", "run_program", "BoundExceeded",
    "SettleRedex", "RegisterRedex", "PopRedex", "CallbackBegin", "CallbackEnd", "Settle",
    "TypeErrorEvent", "UncaughtException", "HeapObject", "Frame", "Scope",
]
