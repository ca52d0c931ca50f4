"""Abstract domains for the analyzer.

Everything here is immutable: operations return new values and never mutate
their inputs.  The lattice order is always ``leq(a, b) == (join(a, b) == b)``.

Abstract addresses are allocation-site strings (``"3:8"``), optionally tagged
(``"3:8#te"``), plus the reserved ``l_time``/``l_io`` and ``global``.
Captured variables live in per-function scope objects at ``scope:<fn id>``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .values import BOT, NULL, UNDEF, Closure, ObjRef, QueueRef, SettleFnValue, truthy


class _Top:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "TOP"

    def __reduce__(self):
        return (_Top, ())


TOP = _Top()


def _join_const(a, b):
    if a is None:
        return b
    if b is None or a is TOP:
        return a
    if b is TOP:
        return b
    if type(a) is type(b) and a == b:
        return a
    if isinstance(a, (int, float)) and isinstance(b, (int, float)) and a == b:
        return a
    return TOP


def settle_fn_name(kind: str, site: str) -> str:
    return f"${kind}:{site}"


def parse_settle_fn(name: str) -> Optional[tuple]:
    for kind in ("fulfill", "reject"):
        prefix = f"${kind}:"
        if name.startswith(prefix):
            return kind, name[len(prefix):]
    return None


# -------------------------------------------------------------------- values


@dataclass(frozen=True)
class AbstractValue:
    """Product of flags, constant-or-TOP scalars, and address/function sets."""

    undef: bool = False
    null: bool = False
    bot: bool = False
    bools: frozenset = frozenset()
    num: object = None  # None (bottom), a constant, or TOP
    string: object = None
    objs: frozenset = frozenset()
    fns: frozenset = frozenset()
    queues: frozenset = frozenset()

    def join(self, o: "AbstractValue") -> "AbstractValue":
        if self is o or o.is_bottom():
            return self
        if self.is_bottom():
            return o
        return AbstractValue(
            self.undef or o.undef,
            self.null or o.null,
            self.bot or o.bot,
            self.bools | o.bools,
            _join_const(self.num, o.num),
            _join_const(self.string, o.string),
            self.objs | o.objs,
            self.fns | o.fns,
            self.queues | o.queues,
        )

    def leq(self, o: "AbstractValue") -> bool:
        return self.join(o) == o

    def is_bottom(self) -> bool:
        return self == A_BOTTOM

    @property
    def may_nullish(self) -> bool:
        return self.undef or self.null

    def without(self, **flags) -> "AbstractValue":
        return replace(self, **flags)

    def non_nullish(self) -> "AbstractValue":
        return replace(self, undef=False, null=False)

    def without_bot(self) -> "AbstractValue":
        return replace(self, bot=False)

    def without_queues(self) -> "AbstractValue":
        return replace(self, queues=frozenset())

    def only_fns(self) -> "AbstractValue":
        return AbstractValue(fns=self.fns)

    def has_non_function(self) -> bool:
        """Any component that is neither a function nor the bot value."""
        return bool(
            self.undef or self.null or self.bools or self.num is not None
            or self.string is not None or self.objs or self.queues
        )

    def has_non_queue(self) -> bool:
        return bool(
            self.undef or self.null or self.bools or self.num is not None
            or self.string is not None or self.objs or self.fns
        )

    def closures(self) -> list:
        return sorted(f for f in self.fns if parse_settle_fn(f) is None)

    def settle_fns(self) -> list:
        return sorted(p for p in (parse_settle_fn(f) for f in self.fns) if p is not None)

    def single_concrete(self):
        """The unique concrete primitive this value denotes, or a sentinel."""
        parts = []
        if self.undef:
            parts.append(UNDEF)
        if self.null:
            parts.append(NULL)
        parts.extend(sorted(self.bools))
        if self.num is not None:
            parts.append(self.num)
        if self.string is not None:
            parts.append(self.string)
        if self.objs or self.fns or self.queues or self.bot:
            return _NO_CONST
        if len(parts) != 1 or parts[0] is TOP:
            return _NO_CONST
        return parts[0]

    def truthiness(self) -> tuple:
        """(may be truthy, may be falsy)."""
        t = f = False
        if self.undef or self.null:
            f = True
        for b in self.bools:
            t, f = t or b, f or not b
        for c in (self.num, self.string):
            if c is TOP:
                t = f = True
            elif c is not None:
                if truthy(c):
                    t = True
                else:
                    f = True
        if self.objs or self.fns or self.queues:
            t = True
        if self.bot:
            f = True
        return t, f

    def refine_truthy(self, want: bool) -> "AbstractValue":
        """The part of this value that may have truthiness ``want``."""

        def keep(c):
            return c if c is None or c is TOP or truthy(c) == want else None

        if want:
            return replace(self, undef=False, null=False, bot=False,
                           bools=frozenset(b for b in self.bools if b),
                           num=keep(self.num), string=keep(self.string))
        return replace(self, bools=frozenset(b for b in self.bools if not b),
                       num=keep(self.num), string=keep(self.string),
                       objs=frozenset(), fns=frozenset(), queues=frozenset())

    def refine_nullish(self, undef: bool, null: bool, equal: bool) -> "AbstractValue":
        """Refine by an equality test against undefined and/or null.

        ``undef``/``null`` say which of the two compare equal to the literal;
        ``equal`` is the outcome of the test on this branch.
        """
        if equal:
            return AbstractValue(undef=self.undef and undef, null=self.null and null, bot=self.bot)
        return replace(self, undef=self.undef and not undef, null=self.null and not null)

    def refine_typeof(self, name: str, equal: bool) -> "AbstractValue":
        """Keep the components whose ``typeof`` is (or, if not ``equal``, is not) ``name``."""

        def keep(tn: str) -> bool:
            return (tn == name) == equal

        return AbstractValue(
            undef=self.undef and keep("undefined"),
            null=self.null and keep("object"),
            bot=self.bot and keep("undefined"),
            bools=self.bools if keep("boolean") else frozenset(),
            num=self.num if keep("number") else None,
            string=self.string if keep("string") else None,
            objs=self.objs if keep("object") else frozenset(),
            fns=self.fns if keep("function") else frozenset(),
            queues=self.queues if keep("object") else frozenset(),
        )

    def tags(self) -> set:
        """Kinds of values present, at strict-equality granularity."""
        out = set()
        for flag, tag in ((self.undef, "undefined"), (self.null, "null"), (self.bot, "bot"),
                          (self.bools, "boolean"), (self.num is not None, "number"),
                          (self.string is not None, "string"), (self.objs, "object"),
                          (self.fns, "function"), (self.queues, "queue")):
            if flag:
                out.add(tag)
        return out

    def typeofs(self) -> set:
        names = {"undefined": "undefined", "bot": "undefined", "null": "object", "queue": "object"}
        return {names.get(t, t) for t in self.tags()}

    def to_json(self):
        out = []
        if self.undef:
            out.append("undefined")
        if self.null:
            out.append("null")
        if self.bot:
            out.append("BOT")
        for b in sorted(self.bools):
            out.append("true" if b else "false")
        if self.num is not None:
            out.append("number" if self.num is TOP else self.num)
        if self.string is not None:
            out.append("string" if self.string is TOP else repr(self.string))
        out += [f"obj@{s}" for s in sorted(self.objs)]
        out += [f"fn:{s}" for s in sorted(self.fns)]
        out += [f"queue@{s}" for s in sorted(self.queues)]
        return out

    def __repr__(self) -> str:
        return "{" + ", ".join(map(str, self.to_json())) + "}"


_NO_CONST = object()

A_BOTTOM = AbstractValue()
A_UNDEF = AbstractValue(undef=True)
A_NULL = AbstractValue(null=True)
A_BOT = AbstractValue(bot=True)
A_ANYNUM = AbstractValue(num=TOP)
A_ANYSTR = AbstractValue(string=TOP)
A_ANYBOOL = AbstractValue(bools=frozenset({True, False}))


def a_num(n) -> AbstractValue:
    if isinstance(n, float) and (math.isnan(n) or math.isinf(n)):
        return A_ANYNUM
    if isinstance(n, float) and n.is_integer():
        n = int(n)
    return AbstractValue(num=n)


def a_str(s: str) -> AbstractValue:
    return AbstractValue(string=s)


def a_bool(b: bool) -> AbstractValue:
    return AbstractValue(bools=frozenset({bool(b)}))


def a_obj(*sites: str) -> AbstractValue:
    return AbstractValue(objs=frozenset(sites))


def a_fn(*names: str) -> AbstractValue:
    return AbstractValue(fns=frozenset(names))


def a_queue(*sites: str) -> AbstractValue:
    return AbstractValue(queues=frozenset(sites))


def join_all(values: Iterable[AbstractValue]) -> AbstractValue:
    out = A_BOTTOM
    for v in values:
        out = out.join(v)
    return out


def abstract_prim(v) -> AbstractValue:
    """Abstraction of a concrete primitive or of the bot value."""
    if v is UNDEF:
        return A_UNDEF
    if v is NULL:
        return A_NULL
    if v is BOT:
        return A_BOT
    if isinstance(v, bool):
        return a_bool(v)
    if isinstance(v, (int, float)):
        return a_num(v)
    if isinstance(v, str):
        return a_str(v)
    raise TypeError(f"not a primitive: {v!r}")


def abstract_of(v, config=None) -> AbstractValue:
    """Best abstraction of a concrete value.

    References need the machine configuration ``config`` to find the allocation
    site of objects and queues.
    """
    if isinstance(v, ObjRef):
        return a_obj(config.heap[v.addr].site)
    if isinstance(v, QueueRef):
        return a_queue(config.site_of_queue(v.addr))
    if isinstance(v, Closure):
        return a_fn(v.fn_id)
    if isinstance(v, SettleFnValue):
        return a_fn(settle_fn_name(v.kind, config.site_of_queue(v.queue)))
    return abstract_prim(v)


# --------------------------------------------------------------------- heap


@dataclass(frozen=True)
class AbstractObject:
    """Property record; a missing property reads as undefined."""

    props: tuple = ()  # sorted ((key, AbstractValue), ...)

    @staticmethod
    def of(d: dict) -> "AbstractObject":
        return AbstractObject(tuple(sorted(d.items())))

    def as_dict(self) -> dict:
        return dict(self.props)

    def get(self, key: str) -> AbstractValue:
        for k, v in self.props:
            if k == key:
                return v
        return A_UNDEF

    def set(self, key: str, value: AbstractValue, strong: bool) -> "AbstractObject":
        d = self.as_dict()
        d[key] = value if strong else d.get(key, A_UNDEF).join(value)
        return AbstractObject.of(d)

    def join(self, o: "AbstractObject") -> "AbstractObject":
        if self == o:
            return self
        a, b = self.as_dict(), o.as_dict()
        return AbstractObject.of({k: a.get(k, A_UNDEF).join(b.get(k, A_UNDEF)) for k in a.keys() | b.keys()})

    def leq(self, o: "AbstractObject") -> bool:
        return self.join(o) == o


# ------------------------------------------------------------------- queues


@dataclass(frozen=True)
class AbstractCallback:
    fn: str
    dep: str
    args: tuple = ()
    receiver: AbstractValue = A_UNDEF
    registered_on: str = ""

    def with_args(self, args: tuple) -> "AbstractCallback":
        return replace(self, args=args)

    def sort_key(self):
        return (self.fn, self.dep, self.registered_on, repr(self.args), repr(self.receiver))


def _callback_key(cb: AbstractCallback) -> tuple:
    return (cb.fn, cb.dep, cb.registered_on, len(cb.args))


def callbacks_leq(a, b) -> bool:
    """Every callback in ``a`` has one in ``b`` with the same identity and larger arguments."""
    by_key: dict = {}
    for y in b:
        by_key.setdefault(_callback_key(y), []).append(y)
    for x in a:
        if not any(
            x.receiver.leq(y.receiver) and all(u.leq(v) for u, v in zip(x.args, y.args))
            for y in by_key.get(_callback_key(x), ())
        ):
            return False
    return True


@dataclass(frozen=True)
class AbstractQueueObject:
    """Join of every concrete queue object allocated at one site.

    ``def_fulfill`` records that each such object definitely has at least one
    fulfill callback registered, ``multi_fulfill`` that some callback may be
    registered more than once; likewise for reject.
    """

    may_pending: bool = True
    fulfilled: Optional[AbstractValue] = None
    rejected: Optional[AbstractValue] = None
    on_fulfill: frozenset = frozenset()
    on_reject: frozenset = frozenset()
    dependents: frozenset = frozenset()
    def_fulfill: bool = False
    def_reject: bool = False
    multi_fulfill: bool = False
    multi_reject: bool = False

    @property
    def definitely_pending(self) -> bool:
        return self.may_pending and self.fulfilled is None and self.rejected is None

    def settled_with(self, kind: str) -> Optional[AbstractValue]:
        return self.fulfilled if kind == "fulfill" else self.rejected

    def callbacks(self, kind: str) -> frozenset:
        return self.on_fulfill if kind == "fulfill" else self.on_reject

    def join(self, o: "AbstractQueueObject") -> "AbstractQueueObject":
        if self == o:
            return self
        return AbstractQueueObject(
            self.may_pending or o.may_pending,
            _join_opt(self.fulfilled, o.fulfilled),
            _join_opt(self.rejected, o.rejected),
            self.on_fulfill | o.on_fulfill,
            self.on_reject | o.on_reject,
            self.dependents | o.dependents,
            self.def_fulfill and o.def_fulfill,
            self.def_reject and o.def_reject,
            self.multi_fulfill or o.multi_fulfill,
            self.multi_reject or o.multi_reject,
        )

    def leq(self, o: "AbstractQueueObject") -> bool:
        return self.join(o) == o

    def covered_by(self, o: "AbstractQueueObject") -> bool:
        """Concretization inclusion; callback arguments compare by value order."""
        for mine, theirs in ((self.fulfilled, o.fulfilled), (self.rejected, o.rejected)):
            if mine is not None and (theirs is None or not mine.leq(theirs)):
                return False
        for kind in ("fulfill", "reject"):
            if getattr(o, f"def_{kind}") and self.may_pending and not getattr(self, f"def_{kind}"):
                return False
            if getattr(self, f"multi_{kind}") and not getattr(o, f"multi_{kind}"):
                return False
        return (
            (o.may_pending or not self.may_pending)
            and callbacks_leq(self.on_fulfill, o.on_fulfill)
            and callbacks_leq(self.on_reject, o.on_reject)
            and self.dependents <= o.dependents
        )


def _join_opt(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a.join(b)


SETTLED_BOT = AbstractQueueObject(may_pending=False, fulfilled=A_BOT)


@dataclass(frozen=True)
class Position:
    """One element of the scheduled list: mutually unordered callbacks."""

    cbs: frozenset
    definite: bool = False  # concretely non-empty
    multi: bool = False  # a callback may occur more than once

    def join(self, o: "Position") -> "Position":
        return Position(self.cbs | o.cbs, self.definite and o.definite, self.multi or o.multi)


DEFAULT_BOUND = 16


@dataclass(frozen=True)
class ScheduledList:
    """Ordered positions followed by an unordered overflow set.

    A concrete list is abstracted when it splits into segments S0..Sk, T with
    each Si contained in position i (non-empty if the position is definite)
    and T contained in the overflow.
    """

    positions: tuple = ()
    overflow: frozenset = frozenset()
    bound: int = DEFAULT_BOUND

    def is_empty(self) -> bool:
        return not self.positions and not self.overflow

    def append(self, cbs, definite: bool = False, multi: bool = False) -> "ScheduledList":
        cbs = frozenset(cbs)
        if not cbs:
            return self
        if self.overflow or len(self.positions) >= self.bound:
            return replace(self, overflow=self.overflow | cbs)
        return replace(self, positions=self.positions + (Position(cbs, definite, multi),))

    def join(self, o: "ScheduledList") -> "ScheduledList":
        if self == o:
            return self
        m = min(len(self.positions), len(o.positions))
        pos = tuple(a.join(b) for a, b in zip(self.positions[:m], o.positions[:m]))
        over = self.overflow | o.overflow
        for p in self.positions[m:] + o.positions[m:]:
            over |= p.cbs
        return ScheduledList(pos, over, min(self.bound, o.bound))

    def leq(self, o: "ScheduledList") -> bool:
        return self.join(o) == o

    def covered_by(self, o: "ScheduledList") -> bool:
        """Whether every concrete list described here is also described by ``o``.

        Positions of ``self`` are embedded in order into positions of ``o``
        or into its overflow; positions of ``o`` that are skipped must be
        allowed to be empty.
        """
        if any(p.definite and not p.cbs for p in self.positions):
            return True  # describes no concrete list
        if not callbacks_leq(self.overflow, o.overflow):
            return False
        a, b = self.positions, o.positions
        n, m = len(a), len(b)

        @lru_cache(maxsize=None)
        def fits(i: int, j: int) -> bool:
            rest_optional = not any(p.definite for p in b[j:])
            if i == n:
                return rest_optional
            if rest_optional and all(callbacks_leq(p.cbs, o.overflow) for p in a[i:]):
                return True
            if not a[i].cbs and not a[i].definite and fits(i + 1, j):
                return True
            if j == m:
                return False
            if not b[j].definite and fits(i, j + 1):
                return True
            p, q = a[i], b[j]
            return (
                callbacks_leq(p.cbs, q.cbs)
                and (p.definite or not q.definite)
                and (q.multi or not p.multi)
                and fits(i + 1, j + 1)
            )

        return fits(0, 0)

    def all_callbacks(self) -> frozenset:
        out = set(self.overflow)
        for p in self.positions:
            out |= p.cbs
        return frozenset(out)

    def to_json(self):
        return {
            "positions": [
                {"callbacks": sorted(c.fn for c in p.cbs), "definite": p.definite} for p in self.positions
            ],
            "overflow": sorted(c.fn for c in self.overflow),
        }


@dataclass(frozen=True)
class TimerSet:
    """Pending timer/IO callbacks; any of them may run next.

    ``multi`` holds the callbacks that may be present more than once.
    """

    cbs: frozenset = frozenset()
    multi: frozenset = frozenset()

    def is_empty(self) -> bool:
        return not self.cbs

    def add(self, cbs) -> "TimerSet":
        cbs = frozenset(cbs)
        return TimerSet(self.cbs | cbs, self.multi | (self.cbs & cbs))

    def remove(self, cb: AbstractCallback) -> "TimerSet":
        if cb in self.multi:
            return self
        return TimerSet(self.cbs - {cb}, self.multi)

    def join(self, o: "TimerSet") -> "TimerSet":
        if self == o:
            return self
        return TimerSet(self.cbs | o.cbs, self.multi | o.multi)

    def leq(self, o: "TimerSet") -> bool:
        return self.cbs <= o.cbs and self.multi <= o.multi

    def covered_by(self, o: "TimerSet") -> bool:
        return callbacks_leq(self.cbs, o.cbs) and callbacks_leq(self.multi, o.multi)

    def to_json(self):
        return {"callbacks": sorted(c.fn for c in self.cbs)}


def join_chain(a: tuple, b: tuple) -> tuple:
    """Join queue chains aligned from the top (index 0)."""
    if a == b:
        return a
    m = min(len(a), len(b))
    if m == 0:
        return ()
    out = [x | y for x, y in zip(a[: m - 1], b[: m - 1])]
    rest = frozenset()
    for frame in a[m - 1:] + b[m - 1:]:
        rest |= frame
    out.append(rest)
    return tuple(out)


# -------------------------------------------------------------------- state


def _join_maps(a: dict, b: dict) -> dict:
    if a is b:
        return a
    out = dict(a)
    for k, v in b.items():
        old = out.get(k)
        out[k] = v if old is None else old.join(v)
    return out


def _join_heap(a: dict, b: dict) -> dict:
    # an object missing on one side contributes nothing
    return _join_maps(a, b)


@dataclass(frozen=True, eq=False)
class AbstractState:
    env: dict = field(default_factory=dict)
    heap: dict = field(default_factory=dict)
    queues: dict = field(default_factory=dict)
    kappa: ScheduledList = field(default_factory=ScheduledList)
    tau: TimerSet = field(default_factory=TimerSet)
    chain: tuple = ()

    def __eq__(self, o) -> bool:
        if not isinstance(o, AbstractState):
            return NotImplemented
        return (
            self.env == o.env and self.heap == o.heap and self.queues == o.queues
            and self.kappa == o.kappa and self.tau == o.tau and self.chain == o.chain
        )

    __hash__ = None

    def join(self, o: Optional["AbstractState"]) -> "AbstractState":
        if o is None or o is self:
            return self
        return AbstractState(
            _join_maps(self.env, o.env),
            _join_heap(self.heap, o.heap),
            _join_maps(self.queues, o.queues),
            self.kappa.join(o.kappa),
            self.tau.join(o.tau),
            join_chain(self.chain, o.chain),
        )

    def leq(self, o: Optional["AbstractState"]) -> bool:
        if o is None:
            return False
        return self.join(o) == o

    def covered_by(self, o: Optional["AbstractState"]) -> bool:
        """Concretization inclusion, finer than ``leq`` on scheduled lists and callbacks."""
        if o is None:
            return False
        for k, v in self.env.items():
            if not v.leq(o.env.get(k, A_BOTTOM)):
                return False
        for a, obj in self.heap.items():
            if a not in o.heap or not obj.leq(o.heap[a]):
                return False
        for a, q in self.queues.items():
            if a not in o.queues or not q.covered_by(o.queues[a]):
                return False
        return (
            self.kappa.covered_by(o.kappa)
            and self.tau.covered_by(o.tau)
            and join_chain(self.chain, o.chain) == o.chain
        )

    def evolve(self, **kw) -> "AbstractState":
        return replace(self, **kw)

    def set_env(self, name: str, v: AbstractValue) -> "AbstractState":
        env = dict(self.env)
        env[name] = v
        return replace(self, env=env)

    def set_obj(self, addr: str, obj: AbstractObject) -> "AbstractState":
        heap = dict(self.heap)
        heap[addr] = obj
        return replace(self, heap=heap)

    def set_queue(self, addr: str, q: AbstractQueueObject) -> "AbstractState":
        queues = dict(self.queues)
        queues[addr] = q
        return replace(self, queues=queues)

    def to_json(self) -> dict:
        return {
            "env": {k: v.to_json() for k, v in sorted(self.env.items())},
            "heap": {
                a: {k: v.to_json() for k, v in o.props} for a, o in sorted(self.heap.items())
            },
            "queues": {
                a: {
                    "pending": q.may_pending,
                    "fulfilled": q.fulfilled.to_json() if q.fulfilled is not None else None,
                    "rejected": q.rejected.to_json() if q.rejected is not None else None,
                    "onFulfill": sorted(c.fn for c in q.on_fulfill),
                    "onReject": sorted(c.fn for c in q.on_reject),
                    "dependents": sorted(q.dependents),
                }
                for a, q in sorted(self.queues.items())
            },
            "kappa": self.kappa.to_json(),
            "tau": self.tau.to_json(),
            "chain": [sorted(f) for f in self.chain],
        }


def join_states(a: Optional[AbstractState], b: Optional[AbstractState]) -> Optional[AbstractState]:
    """Join where ``None`` is the bottom state."""
    if a is None:
        return b
    if b is None:
        return a
    return a.join(b)


def leq_states(a: Optional[AbstractState], b: Optional[AbstractState]) -> bool:
    if a is None:
        return True
    if b is None:
        return False
    return a.leq(b)


@dataclass(frozen=True)
class Context:
    """Analysis context: the QR pair of a callback plus, for ordinary calls, the call site."""

    qr: Optional[tuple] = None  # (registered-on site, dependent site)
    site: Optional[str] = None

    def __str__(self) -> str:
        base = f"({self.qr[0]},{self.qr[1]})" if self.qr else "-"
        return base if self.site is None else f"{base}@{self.site}"

    def sort_key(self):
        return (self.qr or (), self.site or "")


NO_CONTEXT = Context()
