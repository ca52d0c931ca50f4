"""Flow- and context-sensitive worklist analysis with callback graph output.

The analysis runs in rounds.  Each round drains the intraprocedural worklist
and then re-evaluates the abstract event loop: for every analyzed callback x
it computes ``P[x]``, the state after x returns (its dependent queue settled,
the chain popped), and dispatches from it.

* Callback-sensitive: each dispatch from ``P[x]`` feeds the entry of the
  callbacks that may run right after x.  States from callbacks whose
  successor set may be empty are joined and fed back to the roots.
* Callback-insensitive: every ``P[x]`` is joined with the state after the
  main program into one event-loop state, and every callback is entered from
  that state.

In both modes an edge x -> y is recorded when y may run right after x; the
callback graph is the condensation of those edges, so callbacks that can run
in either order end up unordered.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

from . import cfg as G
from . import core as C
from .callgraph import CallbackGraph, CGNode
from .domain import (
    A_ANYBOOL, A_ANYNUM, A_ANYSTR, A_BOTTOM, A_NULL, A_UNDEF, DEFAULT_BOUND, NO_CONTEXT,
    SETTLED_BOT, TOP, AbstractCallback, AbstractObject, AbstractQueueObject, AbstractState,
    AbstractValue, Context, Position, ScheduledList, _NO_CONST, a_bool, a_fn, a_num, a_obj,
    a_queue, a_str, abstract_prim, join_all, join_states, parse_settle_fn, settle_fn_name,
)
from .errors import LambdaQError
from .models import ModelRegistry, shared_registry
from .values import GLOBAL_SITE, L_IO, L_TIME, NULL, UNDEF, binop, unop

PROPERTY_ON_NULLISH = "PropertyAccessOnNullish"
CALL_NON_FUNCTION = "CallNonFunction"

HAVOC = A_UNDEF.join(A_ANYNUM).join(A_ANYSTR).join(A_ANYBOOL)

MAX_ITERATIONS = 100_000


@dataclass(frozen=True)
class AnalysisConfig:
    callback_sensitive: bool
    qr_sensitive: bool
    lattice_bound: int = DEFAULT_BOUND

    @property
    def name(self) -> str:
        return f"{'C' if self.callback_sensitive else 'NC'}-{'QR' if self.qr_sensitive else 'No'}"

    def with_bound(self, n: int) -> "AnalysisConfig":
        return replace(self, lattice_bound=n)


CONFIGS = {
    "NC-No": AnalysisConfig(False, False),
    "NC-QR": AnalysisConfig(False, True),
    "C-No": AnalysisConfig(True, False),
    "C-QR": AnalysisConfig(True, True),
}
CONFIG_NAMES = list(CONFIGS)


def config_by_name(name: str, bound: Optional[int] = None) -> AnalysisConfig:
    if name not in CONFIGS:
        raise LambdaQError(f"unknown configuration {name!r}; expected one of {', '.join(CONFIG_NAMES)}")
    return CONFIGS[name].with_bound(DEFAULT_BOUND if bound is None else bound)


@dataclass(frozen=True)
class TypeErrorReport:
    site: str
    kind: str
    message: str = field(default="", compare=False)

    def to_json(self) -> dict:
        return {"site": self.site, "kind": self.kind, "message": self.message}


@dataclass
class AnalysisResult:
    config: AnalysisConfig
    states: dict  # (fn id, Context, node id) -> AbstractState
    callback_graph: CallbackGraph
    type_errors: list
    analyzed_callbacks: int
    iterations: int
    diagnostics: list
    wall_millis: float = 0.0
    event_loop_state: Optional[AbstractState] = None

    @property
    def precision(self) -> float:
        return self.callback_graph.precision()

    def stats(self) -> dict:
        return {
            "analyzedCallbacks": self.analyzed_callbacks,
            "cgPrecision": round(self.precision, 6),
            "typeErrors": len(self.type_errors),
            "iterations": self.iterations,
            "wallMillis": round(self.wall_millis, 3),
        }


# ---------------------------------------------------------------- transfers


def _callbacks_with_value(cbs, v: AbstractValue) -> set:
    """Callbacks scheduled by settling with v: the bot part keeps registered args."""
    out = set()
    plain = v.without_bot()
    for cb in cbs:
        if v.bot:
            out.add(cb)
        if not plain.is_bottom():
            out.add(cb.with_args((plain,)))
    return out


def transfer_settle(st: AbstractState, targets, kind: str, v: AbstractValue,
                    singletons=frozenset(), mutation: Optional[str] = None) -> AbstractState:
    """Settle every queue in ``targets`` with ``v`` (``kind`` is fulfill or reject).

    Settling with a queue adopts its state; a queue that may still be pending
    records the targets as dependents.
    """
    targets = frozenset(targets)
    if not targets or v.is_bottom():
        return st
    if not v.queues:
        return _settle_direct(st, targets, kind, v, True, set(), singletons, mutation)
    for a in sorted(v.queues):
        q = st.queues.get(a)
        if q is None:
            continue
        if q.may_pending and not targets <= q.dependents:
            st = st.set_queue(a, replace(q, dependents=q.dependents | targets))
        if q.fulfilled is not None:
            st = _settle_direct(st, targets, "fulfill", q.fulfilled, False, set(), singletons, mutation)
        if q.rejected is not None:
            st = _settle_direct(st, targets, "reject", q.rejected, False, set(), singletons, mutation)
    rest = v.without_queues()
    if not rest.is_bottom():
        st = _settle_direct(st, targets, kind, rest, False, set(), singletons, mutation)
    return st


def _settle_direct(st, targets, kind, v, strong_ok, visited, singletons, mutation):
    strong_base = strong_ok and len(targets) == 1
    for t in sorted(targets):
        if t in visited:
            continue
        visited.add(t)
        q = st.queues.get(t)
        if q is None or not q.may_pending:
            continue
        strong = strong_base and t in singletons and q.definitely_pending
        scheduled = _callbacks_with_value(q.callbacks(kind), v)
        if strong:
            # definiteness flags only constrain pending objects
            nq = AbstractQueueObject(may_pending=False, def_fulfill=True, def_reject=True)
            nq = replace(nq, fulfilled=v) if kind == "fulfill" else replace(nq, rejected=v)
        else:
            old = q.settled_with(kind)
            joined = v if old is None else old.join(v)
            nq = replace(q, fulfilled=joined) if kind == "fulfill" else replace(q, rejected=joined)
        st = st.set_queue(t, nq)
        if mutation != "drop-scheduled":
            definite = strong and getattr(q, f"def_{kind}")
            st = st.evolve(kappa=st.kappa.append(scheduled, definite, getattr(q, f"multi_{kind}")))
        if q.dependents:
            st = _settle_direct(st, q.dependents, kind, v, False, visited, singletons, mutation)
    return st


def transfer_register(st: AbstractState, targets, cbs, kind: str,
                      singletons=frozenset()) -> AbstractState:
    """Register callbacks ``cbs`` (registered_on filled in here) on every target queue."""
    targets = sorted(frozenset(targets))
    if not targets or not cbs:
        return st
    single = len(targets) == 1
    scheduled: set = set()
    definite = False
    timers: set = set()
    for t in targets:
        q = st.queues.get(t)
        if q is None:
            continue
        mine = {replace(cb, registered_on=t) for cb in cbs}
        if q.may_pending:
            cur = q.callbacks(kind)
            multi = getattr(q, f"multi_{kind}") or bool(cur & mine)
            deff = getattr(q, f"def_{kind}") or (single and t in singletons)
            lists = {f"on_{kind}": cur | mine, f"def_{kind}": deff, f"multi_{kind}": multi}
            st = st.set_queue(t, replace(q, **lists))
        settled = q.settled_with(kind)
        if settled is None:
            continue
        if t in (L_TIME, L_IO):
            timers |= mine
            continue
        scheduled |= _callbacks_with_value(mine, settled)
        other = q.rejected if kind == "fulfill" else q.fulfilled
        if single and t in singletons and not q.may_pending and other is None:
            definite = True
    if timers:
        st = st.evolve(tau=st.tau.add(timers))
    if scheduled:
        st = st.evolve(kappa=st.kappa.append(scheduled, definite, False))
    return st


def dispatch(st: AbstractState) -> tuple:
    """Callbacks that may run next, each with the state after removing it.

    Returns ``(candidates, may_terminate)`` where candidates is a list of
    ``(callback, remainder state, source)``.
    """
    kappa = st.kappa
    positions = kappa.positions
    cands = []
    first_def = next((i for i, p in enumerate(positions) if p.definite), None)
    upto = len(positions) if first_def is None else first_def + 1
    for i in range(upto):
        p = positions[i]
        for c in sorted(p.cbs, key=AbstractCallback.sort_key):
            rest = p.cbs if p.multi else p.cbs - {c}
            # an emptied slot is kept so later positions stay aligned
            head = (Position(rest, False, p.multi),)
            rem = ScheduledList(head + positions[i + 1:], kappa.overflow, kappa.bound)
            cands.append((c, st.evolve(kappa=rem), "kappa"))
    if first_def is not None:
        return cands, False
    for c in sorted(kappa.overflow, key=AbstractCallback.sort_key):
        rem = ScheduledList((), kappa.overflow, kappa.bound)
        cands.append((c, st.evolve(kappa=rem), "kappa"))
    empty = ScheduledList((), frozenset(), kappa.bound)
    for c in sorted(st.tau.cbs, key=AbstractCallback.sort_key):
        cands.append((c, st.evolve(kappa=empty, tau=st.tau.remove(c)), "tau"))
    return cands, True


def make_context(cb: AbstractCallback, registered_on: Optional[str], config: AnalysisConfig) -> Context:
    if not config.qr_sensitive:
        return NO_CONTEXT
    return Context((registered_on if registered_on is not None else cb.registered_on, cb.dep), None)


def abstract_binop(op: str, a: AbstractValue, b: AbstractValue) -> AbstractValue:
    if a.is_bottom() or b.is_bottom():
        return A_BOTTOM
    ca, cb = a.single_concrete(), b.single_concrete()
    if ca is not _NO_CONST and cb is not _NO_CONST:
        return abstract_prim(binop(op, ca, cb))
    if op in ("===", "!==", "==", "!="):
        eq = _may_equal(op in ("==", "!="), a, b)
        if eq is not None:
            return a_bool(eq if op in ("===", "==") else not eq)
        return A_ANYBOOL
    if op in ("<", ">", "<=", ">="):
        return A_ANYBOOL
    if op == "+":
        return A_ANYNUM.join(A_ANYSTR)
    return A_ANYNUM


def _may_equal(loose: bool, a: AbstractValue, b: AbstractValue):
    """Definite outcome of an equality test, or None when both are possible."""
    ta, tb = a.tags(), b.tags()
    if loose:
        nullish = {"undefined", "null"}
        if ta <= nullish and tb <= nullish:
            return True
        if (ta <= nullish and not tb & nullish) or (tb <= nullish and not ta & nullish):
            return False
        return None
    if not ta & tb:
        return False
    return None


def abstract_unop(op: str, a: AbstractValue) -> AbstractValue:
    if a.is_bottom():
        return A_BOTTOM
    c = a.single_concrete()
    if c is not _NO_CONST:
        return abstract_prim(unop(op, c))
    if op == "!":
        t, f = a.truthiness()
        return AbstractValue(bools=frozenset(({False} if t else set()) | ({True} if f else set())))
    if op == "typeof":
        names = a.typeofs()
        return a_str(names.pop()) if len(names) == 1 else A_ANYSTR
    return A_ANYNUM


def model_arg_value(alt, site: str) -> tuple:
    """Abstract value for one model alternative, plus heap objects it needs."""
    k = alt.kind
    simple = {"undef": A_UNDEF, "null": A_NULL, "anynum": A_ANYNUM, "anystr": A_ANYSTR, "anybool": A_ANYBOOL}
    if k in simple:
        return simple[k], {}
    if k == "num":
        return a_num(alt.value), {}
    if k == "str":
        return a_str(alt.value), {}
    if k == "error":
        addr = f"{site}#err"
        return a_obj(addr), {addr: AbstractObject.of({"name": a_str("Error"), "message": a_str("model error")})}
    addr = f"{site}#obj"
    props = {}
    for key, sub in alt.fields:
        v, _ = model_arg_value(sub, site)
        props[key] = v
    return a_obj(addr), {addr: AbstractObject.of(props)}


def apply_io_model(st: AbstractState, model, callback: AbstractValue, site: str,
                   singletons=frozenset()) -> AbstractState:
    """Register ``callback`` on l_io with arguments joined over the model's alternatives."""
    args = []
    for alts in model.parsed:
        v = A_BOTTOM
        for alt in alts:
            av, objs = model_arg_value(alt, site)
            v = v.join(av)
            for addr, o in objs.items():
                old = st.heap.get(addr)
                st = st.set_obj(addr, o if old is None else old.join(o))
        args.append(v)
    cbs = [AbstractCallback(f, L_IO, tuple(args)) for f in sorted(callback.fns)]
    return transfer_register(st, {L_IO}, cbs, "fulfill", singletons)


# ----------------------------------------------------------------- analyzer


class Analyzer:
    def __init__(self, program: G.ProgramCFG, config: AnalysisConfig,
                 models: Optional[ModelRegistry] = None, mutation: Optional[str] = None,
                 max_iterations: int = MAX_ITERATIONS):
        self.program = program
        self.config = config
        self.models = models if models is not None else shared_registry()
        self.mutation = mutation
        self.max_iterations = max_iterations
        self.main_id = program.program.main
        self.singletons = self._singleton_sites()
        self.guards = self._branch_guards()
        self.states: dict = {}
        self.worklist: deque = deque()
        self.queued: set = set()
        self.callers: dict = {}
        self.callbacks: set = set()  # (fn, ctx) keys entered by dispatch
        self.errors: dict = {}
        self.diagnostics: list = list(program.program.diagnostics)
        self.iterations = 0
        self.p_top: Optional[AbstractState] = None
        self.has_identity = "$identity" in program.functions
        self.has_rethrow = "$rethrow" in program.functions

    # ------------------------------------------------------ setup
    def _singleton_sites(self) -> frozenset:
        """Allocation sites that run at most once: in main and outside any loop."""
        g = self.program.main
        in_cycle = _cyclic_nodes(g)
        out = {GLOBAL_SITE, f"scope:{self.main_id}"}
        for nid, n in g.nodes.items():
            if nid in in_cycle:
                continue
            if isinstance(n.instr, (C.NewObj, C.NewQ)):
                out.add(n.instr.alloc)
        return frozenset(out)

    def initial_state(self) -> AbstractState:
        st = AbstractState(
            heap={GLOBAL_SITE: AbstractObject()},
            queues={L_TIME: SETTLED_BOT, L_IO: SETTLED_BOT},
            kappa=ScheduledList(bound=self.config.lattice_bound),
        )
        return self.enter(self.main_id, st, [], A_UNDEF)

    def enter(self, fid: str, st: AbstractState, args, this: AbstractValue) -> AbstractState:
        g = self.program.functions[fid]
        env = {}
        for i, p in enumerate(g.params):
            env[p] = args[i] if i < len(args) else A_UNDEF
        for name in g.locals:
            env.setdefault(name, A_UNDEF)
        if this.may_nullish or this.is_bottom():
            this = this.non_nullish().join(a_obj(GLOBAL_SITE))
        env["this"] = this
        env[G.RET_VAR] = A_UNDEF
        env[G.EXC_VAR] = A_BOTTOM
        captured = self.program.captured.get(fid, ())
        if captured:
            addr = f"scope:{fid}"
            obj = AbstractObject.of({name: env.get(name, A_UNDEF) for name in captured})
            old = st.heap.get(addr)
            if fid != self.main_id and old is not None:
                obj = old.join(obj)
            st = st.set_obj(addr, obj)
        return st.evolve(env=env)

    # --------------------------------------------------- variables
    def read(self, fid: str, st: AbstractState, atom) -> AbstractValue:
        if isinstance(atom, C.Lit):
            return abstract_prim(atom.value)
        name = atom.name
        if name in (G.RET_VAR, G.EXC_VAR):
            return st.env.get(name, A_BOTTOM)
        owner = self.program.declaring(fid, name)
        if owner is None:
            return A_UNDEF
        if self.program.is_heap_var(fid, name):
            obj = st.heap.get(f"scope:{owner}")
            return obj.get(name) if obj is not None else A_UNDEF
        return st.env.get(name, A_UNDEF)

    def write(self, fid: str, st: AbstractState, name: str, v: AbstractValue) -> AbstractState:
        owner = self.program.declaring(fid, name)
        if owner is not None and self.program.is_heap_var(fid, name):
            addr = f"scope:{owner}"
            obj = st.heap.get(addr, AbstractObject())
            return st.set_obj(addr, obj.set(name, v, strong=owner == self.main_id))
        return st.set_env(name, v)

    def refine_var(self, fid: str, st: AbstractState, name: str, fn) -> Optional[AbstractState]:
        v = fn(self.read(fid, st, C.Var(name)))
        if v.is_bottom():
            return None  # no value of the variable takes this branch
        return self.write(fid, st, name, v)

    def refine_branch(self, fid: str, nid: int, st: AbstractState, ins, want: bool) -> Optional[AbstractState]:
        """Narrow the tested variable on the ``want`` edge of a branch."""
        if isinstance(ins.cond, C.Var) and ins.cond.name not in (G.RET_VAR, G.EXC_VAR):
            st = self.refine_var(fid, st, ins.cond.name, lambda v: v.refine_truthy(want))
            if st is None:
                return None
        guard = self.guards.get((fid, nid))
        if guard is not None:
            kind, name, arg, eq_when_true = guard
            equal = want == eq_when_true
            if kind == "typeof":
                return self.refine_var(fid, st, name, lambda v: v.refine_typeof(arg, equal))
            undef, null = arg
            st = self.refine_var(fid, st, name, lambda v: v.refine_nullish(undef, null, equal))
        return st

    def _branch_guards(self) -> dict:
        """Branches on a temp computed just before as ``x == null`` or ``typeof x == "s"``."""
        out = {}
        for fid, g in self.program.functions.items():
            for nid, n in g.nodes.items():
                ins = n.instr
                if not isinstance(ins, G.Branch) or not isinstance(ins.cond, C.Var):
                    continue
                b_id = _sole_pred(g, nid)
                b = g.nodes[b_id].instr if b_id is not None else None
                if not isinstance(b, C.Binop) or b.dst != ins.cond.name or b.op not in ("===", "!==", "==", "!="):
                    continue
                eq = b.op in ("===", "==")
                for var, lit in ((b.left, b.right), (b.right, b.left)):
                    if not (isinstance(var, C.Var) and isinstance(lit, C.Lit)) or var.name == b.dst:
                        continue
                    if lit.value is NULL or lit.value is UNDEF:
                        loose = b.op in ("==", "!=")
                        arg = (loose or lit.value is UNDEF, loose or lit.value is NULL)
                        out[(fid, nid)] = ("nullish", var.name, arg, eq)
                        break
                    u_id = _sole_pred(g, b_id)
                    u = g.nodes[u_id].instr if u_id is not None else None
                    if isinstance(lit.value, str) and isinstance(u, C.Unop) and u.op == "typeof" \
                            and u.dst == var.name and isinstance(u.arg, C.Var) and u.arg.name != u.dst:
                        out[(fid, nid)] = ("typeof", u.arg.name, lit.value, eq)
                        break
        return out

    # ----------------------------------------------------- worklist
    def push(self, key) -> None:
        if key not in self.queued:
            self.queued.add(key)
            self.worklist.append(key)

    def flow(self, fid: str, ctx: Context, node: int, st: AbstractState) -> bool:
        key = (fid, ctx, node)
        old = self.states.get(key)
        new = st if old is None else old.join(st)
        if old is not None and new == old:
            return False
        self.states[key] = new
        self.push(key)
        return True

    def feed_entry(self, fid: str, ctx: Context, st: AbstractState) -> bool:
        return self.flow(fid, ctx, self.program.functions[fid].entry, st)

    def record_error(self, site: str, kind: str, message: str) -> None:
        self.errors.setdefault((site, kind), TypeErrorReport(site, kind, message))

    def throw_type_error(self, st: AbstractState, site: str, kind: str, message: str) -> AbstractState:
        self.record_error(site, kind, message)
        addr = f"{site}#te"
        obj = AbstractObject.of({"name": a_str("TypeError"), "message": a_str(kind)})
        old = st.heap.get(addr)
        st = st.set_obj(addr, obj if old is None else old.join(obj))
        return st.set_env(G.EXC_VAR, a_obj(addr))

    def check_queue(self, st, v: AbstractValue, ins, outs) -> None:
        """Non-queue parts of an operand raise a TypeError on the exception edge."""
        site = ins.pos.site()
        if v.may_nullish:
            outs.append(("exception", self.throw_type_error(st, site, PROPERTY_ON_NULLISH, "queue operand may be null or undefined")))
        if v.non_nullish().has_non_queue() or v.bot:
            outs.append(("exception", self.throw_type_error(st, site, CALL_NON_FUNCTION, "queue operand may not be a queue")))

    def run(self) -> AnalysisResult:
        t0 = time.perf_counter()
        self.feed_entry(self.main_id, NO_CONTEXT, self.initial_state())
        while True:
            self.drain()
            if not self.event_loop_round():
                break
        result = self.finish()
        result.wall_millis = (time.perf_counter() - t0) * 1000.0
        return result

    def drain(self) -> None:
        while self.worklist:
            key = self.worklist.popleft()
            self.queued.discard(key)
            self.iterations += 1
            if self.iterations > self.max_iterations:
                raise RuntimeError(f"analysis exceeded {self.max_iterations} worklist iterations")
            fid, ctx, node = key
            st = self.states[key]
            g = self.program.functions[fid]
            for label, out in self.transfer(fid, ctx, node, st):
                nxt = g.next(node, label)
                if nxt is not None:
                    self.flow(fid, ctx, nxt, out)

    # ----------------------------------------------------- transfer
    def transfer(self, fid: str, ctx: Context, nid: int, st: AbstractState) -> list:
        g = self.program.functions[fid]
        ins = g.nodes[nid].instr
        rd = lambda a: self.read(fid, st, a)  # noqa: E731
        wr = lambda s, name, v: self.write(fid, s, name, v)  # noqa: E731
        if isinstance(ins, (G.Entry, G.Nop)):
            return [("normal", st)]
        if isinstance(ins, C.Assign):
            return [("normal", wr(st, ins.dst, rd(ins.src)))]
        if isinstance(ins, C.Unop):
            return [("normal", wr(st, ins.dst, abstract_unop(ins.op, rd(ins.arg))))]
        if isinstance(ins, C.Binop):
            return [("normal", wr(st, ins.dst, abstract_binop(ins.op, rd(ins.left), rd(ins.right))))]
        if isinstance(ins, C.NewObj):
            obj = AbstractObject.of({k: rd(a) for k, a in ins.props})
            old = st.heap.get(ins.alloc)
            if ins.alloc not in self.singletons and old is not None:
                obj = old.join(obj)
            return [("normal", wr(st.set_obj(ins.alloc, obj), ins.dst, a_obj(ins.alloc)))]
        if isinstance(ins, C.MakeClosure):
            return [("normal", wr(st, ins.dst, a_fn(ins.fn_id)))]
        if isinstance(ins, C.GetProp):
            return self.t_getprop(fid, st, ins)
        if isinstance(ins, C.SetProp):
            return self.t_setprop(fid, st, ins)
        if isinstance(ins, C.Call):
            return self.t_call(fid, ctx, nid, st, ins)
        if isinstance(ins, C.NewQ):
            q = AbstractQueueObject()
            old = st.queues.get(ins.alloc)
            if ins.alloc not in self.singletons and old is not None:
                q = old.join(q)
            return [("normal", wr(st.set_queue(ins.alloc, q), ins.dst, a_queue(ins.alloc)))]
        if isinstance(ins, C.Settle):
            outs: list = []
            qv = rd(ins.queue)
            self.check_queue(st, qv, ins, outs)
            if qv.queues:
                outs.append(("normal", transfer_settle(st, qv.queues, ins.kind, rd(ins.value),
                                                       self.singletons, self.mutation)))
            return outs
        if isinstance(ins, C.Register):
            return self.t_register(fid, st, ins)
        if isinstance(ins, C.SettleFn):
            outs = []
            qv = rd(ins.queue)
            self.check_queue(st, qv, ins, outs)
            if qv.queues:
                fns = [settle_fn_name(ins.kind, s) for s in qv.queues]
                outs.append(("normal", wr(st, ins.dst, a_fn(*fns))))
            return outs
        if isinstance(ins, C.Append):
            outs = []
            qv = rd(ins.queue)
            self.check_queue(st, qv, ins, outs)
            if qv.queues:
                outs.append(("normal", st.evolve(chain=(frozenset(qv.queues),) + st.chain)))
            return outs
        if isinstance(ins, C.Pop):
            return [("normal", st.evolve(chain=st.chain[1:]))]
        if isinstance(ins, C.AddCallback):
            outs = []
            fv = rd(ins.callback)
            if fv.has_non_function():
                outs.append(("exception", self.throw_type_error(st, ins.pos.site(), CALL_NON_FUNCTION, "callback may not be a function")))
            if fv.fns:
                target = L_TIME if ins.kind == "timer" else L_IO
                extras = tuple(rd(a) for a in ins.extras)
                cbs = [AbstractCallback(f, target, extras) for f in sorted(fv.fns)]
                outs.append(("normal", transfer_register(st, {target}, cbs, "fulfill", self.singletons)))
            return outs
        if isinstance(ins, C.ModelCall):
            model = self.models.get(ins.model)
            outs = []
            fv = rd(ins.args[model.callback_index])
            if fv.has_non_function():
                outs.append(("exception", self.throw_type_error(st, ins.pos.site(), CALL_NON_FUNCTION, "callback may not be a function")))
            if fv.fns:
                outs.append(("normal", apply_io_model(st, model, fv, ins.pos.site(), self.singletons)))
            return outs
        if isinstance(ins, C.Havoc):
            return [("normal", wr(st, ins.dst, HAVOC) if ins.dst else st)]
        if isinstance(ins, C.Return):
            return [("normal", st.set_env(G.RET_VAR, rd(ins.value)))]
        if isinstance(ins, C.Throw):
            return [("exception", st.set_env(G.EXC_VAR, rd(ins.value)))]
        if isinstance(ins, G.Branch):
            t, f = rd(ins.cond).truthiness()
            outs = []
            for label, possible, want in (("true", t, True), ("false", f, False)):
                if possible:
                    refined = self.refine_branch(fid, nid, st, ins, want)
                    if refined is not None:
                        outs.append((label, refined))
            return outs
        if isinstance(ins, G.CatchBind):
            return [("normal", wr(st, ins.param, st.env.get(G.EXC_VAR, A_BOTTOM)))]
        if isinstance(ins, G.ErrorReject):
            top = st.chain[0] if st.chain else frozenset()
            s = transfer_settle(st, top, "reject", st.env.get(G.EXC_VAR, A_BOTTOM), self.singletons, self.mutation)
            return [("normal", s.evolve(chain=s.chain[1:]))]
        if isinstance(ins, C.EventLoop):
            self.p_top = join_states(self.p_top, st.evolve(env={}))
            return []
        if isinstance(ins, (G.Exit, G.RaiseExit)):
            for caller in sorted(self.callers.get((fid, ctx), ()), key=_caller_key):
                self.push(caller)
            return []
        raise AssertionError(f"unknown instruction {ins!r}")

    def t_getprop(self, fid, st, ins) -> list:
        o = self.read(fid, st, ins.obj)
        outs = []
        if o.may_nullish:
            outs.append(("exception", self.throw_type_error(st, ins.pos.site(), PROPERTY_ON_NULLISH, f"reading {ins.prop!r} of a value that may be null or undefined")))
        rest = o.non_nullish()
        if not rest.is_bottom():
            outs.append(("normal", self.write(fid, st, ins.dst, self.get_prop(st, rest, ins.prop))))
        return outs

    def get_prop(self, st, o: AbstractValue, prop: str) -> AbstractValue:
        v = A_BOTTOM
        for s in sorted(o.objs):
            obj = st.heap.get(s)
            v = v.join(obj.get(prop) if obj is not None else A_UNDEF)
        if o.string is not None:
            if prop == "length":
                v = v.join(A_ANYNUM if o.string is TOP else a_num(len(o.string)))
            else:
                v = v.join(A_UNDEF)
        if o.bools or o.num is not None or o.fns or o.queues or o.bot:
            v = v.join(A_UNDEF)
        return v

    def t_setprop(self, fid, st, ins) -> list:
        o = self.read(fid, st, ins.obj)
        outs = []
        if o.may_nullish:
            outs.append(("exception", self.throw_type_error(st, ins.pos.site(), PROPERTY_ON_NULLISH, f"writing {ins.prop!r} of a value that may be null or undefined")))
        rest = o.non_nullish()
        if rest.is_bottom():
            return outs
        v = self.read(fid, st, ins.value)
        strong = len(rest.objs) == 1 and rest == a_obj(*rest.objs) and next(iter(rest.objs)) in self.singletons
        s = st
        for addr in sorted(rest.objs):
            obj = s.heap.get(addr, AbstractObject())
            s = s.set_obj(addr, obj.set(ins.prop, v, strong))
        outs.append(("normal", s))
        return outs

    def t_register(self, fid, st, ins) -> list:
        rd = lambda a: self.read(fid, st, a)  # noqa: E731
        outs: list = []
        qv = rd(ins.queue)
        self.check_queue(st, qv, ins, outs)
        fv = rd(ins.callback)
        fns = set(fv.fns)
        if fv.has_non_function() or fv.bot or fv.is_bottom():
            default = "$identity" if ins.kind == "fulfill" else "$rethrow"
            if default in self.program.functions:
                fns.add(default)
            else:
                outs.append(("exception", self.throw_type_error(st, ins.pos.site(), CALL_NON_FUNCTION, "handler is not a function")))
        dv = rd(ins.dep)
        self.check_queue(st, dv, ins, outs)
        if qv.queues and fns and dv.queues:
            extras = tuple(rd(a) for a in ins.extras)
            recv = rd(ins.receiver)
            cbs = [AbstractCallback(f, d, extras, recv) for f in sorted(fns) for d in sorted(dv.queues)]
            outs.append(("normal", transfer_register(st, qv.queues, cbs, ins.kind, self.singletons)))
        return outs

    def t_call(self, fid, ctx, nid, st, ins) -> list:
        rd = lambda a: self.read(fid, st, a)  # noqa: E731
        f = rd(ins.callee)
        args = [rd(a) for a in ins.args]
        outs: list = []
        site = ins.pos.site()
        if f.has_non_function():
            outs.append(("exception", self.throw_type_error(st, site, CALL_NON_FUNCTION, "callee may not be a function")))
        normal: Optional[AbstractState] = None
        exc: Optional[AbstractState] = None
        this = rd(ins.this)
        for callee in f.closures():
            cctx = Context(ctx.qr, site)
            key = (callee, cctx)
            self.callers.setdefault(key, set()).add((fid, ctx, nid))
            self.feed_entry(callee, cctx, self.enter(callee, st, args, this))
            g = self.program.functions[callee]
            ex = self.states.get((callee, cctx, g.exit))
            if ex is not None:
                back = ex.evolve(env=st.env, chain=st.chain)
                if ins.dst:
                    back = self.write(fid, back, ins.dst, ex.env.get(G.RET_VAR, A_UNDEF))
                normal = join_states(normal, back)
            rx = self.states.get((callee, cctx, g.raise_exit))
            if rx is not None:
                back = rx.evolve(env=dict(st.env), chain=st.chain).set_env(G.EXC_VAR, rx.env.get(G.EXC_VAR, A_BOTTOM))
                exc = join_states(exc, back)
        for kind, s in f.settle_fns():
            out = transfer_settle(st, {s}, kind, args[0] if args else A_UNDEF, self.singletons, self.mutation)
            if ins.dst:
                out = self.write(fid, out, ins.dst, A_UNDEF)
            normal = join_states(normal, out)
        if normal is not None:
            outs.append(("normal", normal))
        if exc is not None:
            outs.append(("exception", exc))
        return outs

    # --------------------------------------------------- event loop
    def callback_context(self, cb: AbstractCallback) -> Context:
        return make_context(cb, None, self.config)

    def bind(self, cb: AbstractCallback, st: AbstractState) -> tuple:
        """Key and entry state for running ``cb`` from state ``st``."""
        ctx = self.callback_context(cb)
        st = st.evolve(chain=(frozenset({cb.dep}),))
        if parse_settle_fn(cb.fn) is not None or cb.fn not in self.program.functions:
            return (cb.fn, ctx), st.evolve(env={"%args": join_all(cb.args[:1]) if cb.args else A_UNDEF})
        return (cb.fn, ctx), self.enter(cb.fn, st, list(cb.args), cb.receiver)

    def after_callback(self, key) -> Optional[AbstractState]:
        """``P[x]``: state after callback x returned and its dependent was settled."""
        fn, ctx = key
        settle = parse_settle_fn(fn)
        if settle is not None or fn not in self.program.functions:
            entry = self.states.get(key + ("entry",))
            if entry is None:
                return None
            dep = entry.chain[0] if entry.chain else frozenset()
            s = entry
            if settle is not None:
                s = transfer_settle(s, {settle[1]}, settle[0], entry.env.get("%args", A_UNDEF), self.singletons, self.mutation)
            s = transfer_settle(s, dep, "fulfill", A_UNDEF, self.singletons, self.mutation)
            return s.evolve(chain=s.chain[1:], env={})
        g = self.program.functions[fn]
        out = None
        ex = self.states.get((fn, ctx, g.exit))
        if ex is not None:
            top = ex.chain[0] if ex.chain else frozenset()
            s = transfer_settle(ex, top, "fulfill", ex.env.get(G.RET_VAR, A_UNDEF), self.singletons, self.mutation)
            out = s.evolve(chain=s.chain[1:], env={})
        rx = self.states.get((fn, ctx, g.raise_exit))
        if rx is not None:
            top = rx.chain[0] if rx.chain else frozenset()
            s = transfer_settle(rx, top, "reject", rx.env.get(G.EXC_VAR, A_BOTTOM), self.singletons, self.mutation)
            out = join_states(out, s.evolve(chain=s.chain[1:], env={}))
        return out

    def feed_callback(self, key, st: AbstractState) -> bool:
        fn, ctx = key
        self.callbacks.add(key)
        if parse_settle_fn(fn) is not None or fn not in self.program.functions:
            k = key + ("entry",)
            old = self.states.get(k)
            new = st if old is None else old.join(st)
            if old is not None and new == old:
                return False
            self.states[k] = new
            return True
        return self.feed_entry(fn, ctx, st)

    def after_states(self) -> dict:
        return {k: p for k in sorted(self.callbacks, key=_key_sort) if (p := self.after_callback(k)) is not None}

    def event_loop_round(self) -> bool:
        if self.p_top is None:
            return False
        changed = False
        after = self.after_states()
        if self.config.callback_sensitive:
            roots, _ = dispatch(self.p_top)
            for cb, rem, _src in roots:
                key, entry = self.bind(cb, rem)
                changed |= self.feed_callback(key, entry)
            term = None
            for key, p in after.items():
                cands, may_end = dispatch(p)
                for cb, rem, _src in cands:
                    k2, entry = self.bind(cb, rem)
                    changed |= self.feed_callback(k2, entry)
                if may_end:
                    term = join_states(term, p)
            if term is not None:
                for cb, rem, _src in roots:
                    key, entry = self.bind(cb, term.evolve(kappa=rem.kappa, tau=rem.tau))
                    changed |= self.feed_callback(key, entry)
        else:
            loop = self.p_top
            for p in after.values():
                loop = loop.join(p)
            for cb, rem, _src in dispatch(loop)[0]:
                key, entry = self.bind(cb, rem)
                changed |= self.feed_callback(key, entry)
        return changed

    # ------------------------------------------------------ results
    def build_graph(self) -> CallbackGraph:
        cg = CallbackGraph()
        labels = {}
        for fn, ctx in self.callbacks:
            g = self.program.functions.get(fn)
            labels[(fn, ctx)] = g.pos.site() if g is not None else fn
        nodes = {k: CGNode(k[1], k[0], labels[k]) for k in self.callbacks}
        for k in sorted(nodes, key=_key_sort):
            cg.add_node(nodes[k])
        raw: dict = {k: set() for k in nodes}
        for key, p in self.after_states().items():
            for cb, _rem, _src in dispatch(p)[0]:
                y = (cb.fn, self.callback_context(cb))
                if y in nodes:
                    raw[key].add(y)
        comp = _scc(raw)
        for x in sorted(raw, key=_key_sort):
            for y in sorted(raw[x], key=_key_sort):
                if comp[x] == comp[y]:
                    cg.diagnostics.append(f"{nodes[x]} and {nodes[y]} may run in either order")
                    continue
                cg.add_edge(nodes[x], nodes[y])
        return cg

    def finish(self) -> AnalysisResult:
        cg = self.build_graph()
        errors = sorted(self.errors.values(), key=lambda e: (_site_key(e.site), e.kind))
        states = {k: v for k, v in self.states.items() if k[2] != "entry"}
        loop = self.p_top
        if loop is not None and not self.config.callback_sensitive:
            for p in self.after_states().values():
                loop = loop.join(p)
        return AnalysisResult(
            self.config, states, cg, errors, len(self.callbacks), self.iterations,
            self.diagnostics + cg.diagnostics, 0.0, loop,
        )



def _caller_key(c):
    return (c[0], c[1].sort_key(), c[2])


def _key_sort(k):
    return (k[0], k[1].sort_key())


def _site_key(site: str):
    head = site.split("#", 1)[0]
    try:
        line, col = head.split(":")
        return (int(line), int(col), site)
    except ValueError:
        return (10**9, 0, site)


def _sole_pred(g: G.FunctionCFG, nid: int) -> Optional[int]:
    preds = g.pred(nid)
    return preds[0][0] if len(preds) == 1 else None


def _cyclic_nodes(g: G.FunctionCFG) -> set:
    succ = {n: [d for d, _ in g.succ(n)] for n in g.nodes}
    comp = _scc(succ)
    sizes: dict = {}
    for c in comp.values():
        sizes[c] = sizes.get(c, 0) + 1
    return {n for n in g.nodes if sizes[comp[n]] > 1 or n in succ[n]}


def _scc(succ: dict) -> dict:
    """Tarjan's algorithm (iterative); maps each vertex to a component id."""
    index: dict = {}
    low: dict = {}
    comp: dict = {}
    stack: list = []
    on: set = set()
    counter = 0
    ncomp = 0
    for root in succ:
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on.add(root)
        while work:
            v, it = work[-1]
            w = next(it, None)
            if w is not None:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on.add(w)
                    work.append((w, iter(succ.get(w, ()))))
                elif w in on:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on.discard(w)
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
    return comp


def analyze(program: G.ProgramCFG, config: AnalysisConfig, models=None, mutation=None) -> AnalysisResult:
    return Analyzer(program, config, models, mutation).run()


def analyze_source(source: str, config, models=None, mutation=None) -> AnalysisResult:
    from .desugar import compile_source

    if isinstance(config, str):
        config = CONFIGS[config]
    prog = G.build_cfg(compile_source(source, models))
    return analyze(prog, config, models, mutation)
