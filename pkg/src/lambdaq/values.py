"""Runtime value representations shared by the core IR and the interpreter."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union


class _Singleton:
    __slots__ = ()
    _name = "?"

    def __repr__(self) -> str:
        return self._name

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self

    def __reduce__(self):
        return self._name


class _Undefined(_Singleton):
    _name = "UNDEF"


class _Null(_Singleton):
    _name = "NULL"


class _Bot(_Singleton):
    """The absent value; never produced by surface syntax."""

    _name = "BOT"


UNDEF = _Undefined()
NULL = _Null()
BOT = _Bot()

L_TIME = "l_time"
L_IO = "l_io"
GLOBAL_SITE = "global"

Prim = Union[bool, int, float, str, _Undefined, _Null, _Bot]


@dataclass(frozen=True)
class ObjRef:
    addr: int


@dataclass(frozen=True)
class QueueRef:
    addr: Union[int, str]


@dataclass(frozen=True)
class SettleFnValue:
    """A queue's resolving function, e.g. the ``resolve`` passed to an executor."""

    kind: str  # "fulfill" | "reject"
    queue: Union[int, str]


@dataclass(eq=False)
class Closure:
    fn_id: str
    env: object = field(repr=False, default=None)


Value = Union[Prim, ObjRef, QueueRef, SettleFnValue, Closure]


def is_prim(v: object) -> bool:
    return isinstance(v, (bool, int, float, str, _Undefined, _Null, _Bot))


def is_callable(v: object) -> bool:
    return isinstance(v, (Closure, SettleFnValue))


def typeof(v: object) -> str:
    if v is UNDEF or v is BOT:
        return "undefined"
    if v is NULL:
        return "object"
    if isinstance(v, bool):
        return "boolean"
    if isinstance(v, (int, float)):
        return "number"
    if isinstance(v, str):
        return "string"
    if is_callable(v):
        return "function"
    return "object"


def truthy(v: object) -> bool:
    if v is UNDEF or v is NULL or v is BOT:
        return False
    if isinstance(v, bool):
        return v
    if isinstance(v, (int, float)):
        return v != 0 and v == v
    if isinstance(v, str):
        return v != ""
    return True


def to_number(v: object) -> float:
    if isinstance(v, bool):
        return 1 if v else 0
    if isinstance(v, (int, float)):
        return v
    if v is NULL:
        return 0
    if isinstance(v, str):
        s = v.strip()
        if s == "":
            return 0
        try:
            return float(s)
        except ValueError:
            return float("nan")
    return float("nan")


def to_str(v: object) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        if v != v:
            return "NaN"
        if v in (float("inf"), float("-inf")):
            return "Infinity" if v > 0 else "-Infinity"
        if float(v).is_integer():
            return str(int(v))
        return repr(v)
    if v is UNDEF or v is BOT:
        return "undefined"
    if v is NULL:
        return "null"
    if is_callable(v):
        return "function"
    return "[object Object]"


def _norm_num(x: float):
    if isinstance(x, float) and x.is_integer() and abs(x) < 2**53:
        return int(x)
    return x


def strict_equals(a: object, b: object) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return type(a) is type(b) and a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return a == b
    if isinstance(a, Closure) or isinstance(b, Closure):
        return a is b
    return type(a) is type(b) and a == b


def loose_equals(a: object, b: object) -> bool:
    nullish = (UNDEF, NULL)
    if a in nullish or b in nullish:
        return (a in nullish) and (b in nullish)
    if is_prim(a) and is_prim(b) and type(a) is not type(b):
        return to_number(a) == to_number(b)
    return strict_equals(a, b)


def binop(op: str, a: object, b: object) -> object:
    """Evaluate a binary operator on concrete values."""
    if op == "===":
        return strict_equals(a, b)
    if op == "!==":
        return not strict_equals(a, b)
    if op == "==":
        return loose_equals(a, b)
    if op == "!=":
        return not loose_equals(a, b)
    if op == "+":
        if isinstance(a, str) or isinstance(b, str) or not (is_prim(a) and is_prim(b)):
            return to_str(a) + to_str(b)
        return _norm_num(to_number(a) + to_number(b))
    if op in ("<", ">", "<=", ">="):
        if isinstance(a, str) and isinstance(b, str):
            x, y = a, b
        else:
            x, y = to_number(a), to_number(b)
            if x != x or y != y:
                return False
        return {"<": x < y, ">": x > y, "<=": x <= y, ">=": x >= y}[op]
    x, y = to_number(a), to_number(b)
    if op == "-":
        return _norm_num(x - y)
    if op == "*":
        return _norm_num(x * y)
    if op == "/":
        if y == 0:
            if x == 0 or x != x:
                return float("nan")
            return float("inf") if x > 0 else float("-inf")
        return _norm_num(x / y)
    if op == "%":
        if y == 0 or x != x or y != y:
            return float("nan")
        import math

        return _norm_num(math.fmod(x, y))
    raise ValueError(f"unknown operator {op}")


def unop(op: str, a: object) -> object:
    if op == "!":
        return not truthy(a)
    if op == "-":
        return _norm_num(-to_number(a))
    if op == "+":
        return _norm_num(to_number(a))
    if op == "typeof":
        return typeof(a)
    raise ValueError(f"unknown operator {op}")
