"""Lexer, AST and recursive-descent parser for the JavaScript subset.

The accepted language is deliberately small: ``var``/``let``/``const``,
function declarations and expressions, objects, arrays, property access,
calls, ``new``, ``throw``, ``try``/``catch``, ``if``/``else``, ``while``,
``for``, ``return`` and the usual operators.  The promise, timer and I/O
APIs are ordinary calls here; ``desugar`` gives them meaning.

With ``intrinsics=True`` the parser also accepts the ``$q.*`` primitives and
the ``$guard (q) { ... }`` statement that the core pretty-printer emits.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import ParseError, UnsupportedConstruct


@dataclass(frozen=True)
class Pos:
    line: int
    col: int
    end_line: int
    end_col: int

    def site(self) -> str:
        return f"{self.line}:{self.col}"

    def contains(self, other: "Pos") -> bool:
        return (self.line, self.col) <= (other.line, other.col) and (
            other.end_line,
            other.end_col,
        ) <= (self.end_line, self.end_col)


NOPOS = Pos(0, 0, 0, 0)


def span(a: Pos, b: Pos) -> Pos:
    return Pos(a.line, a.col, b.end_line, b.end_col)


# ---------------------------------------------------------------- AST nodes


@dataclass
class Node:
    pos: Pos = field(default=NOPOS, repr=False, compare=False)


# expressions
@dataclass
class Num(Node):
    value: float = 0


@dataclass
class Str(Node):
    value: str = ""


@dataclass
class Bool(Node):
    value: bool = False


@dataclass
class Null(Node):
    pass


@dataclass
class Undefined(Node):
    pass


@dataclass
class BotLit(Node):
    """The absent value; only reachable through ``$q.bot`` in intrinsic mode."""


@dataclass
class Ident(Node):
    name: str = ""


@dataclass
class This(Node):
    pass


@dataclass
class Func(Node):
    name: Optional[str] = None
    params: list[str] = field(default_factory=list)
    body: list["Stmt"] = field(default_factory=list)


@dataclass
class Obj(Node):
    props: list[tuple[str, "Expr"]] = field(default_factory=list)


@dataclass
class Arr(Node):
    elements: list["Expr"] = field(default_factory=list)


@dataclass
class Member(Node):
    obj: "Expr" = None
    prop: str = ""
    prop_pos: Pos = field(default=NOPOS, repr=False, compare=False)


@dataclass
class Call(Node):
    callee: "Expr" = None
    args: list["Expr"] = field(default_factory=list)


@dataclass
class New(Node):
    callee: "Expr" = None
    args: list["Expr"] = field(default_factory=list)


@dataclass
class Unary(Node):
    op: str = ""
    arg: "Expr" = None


@dataclass
class Binary(Node):
    op: str = ""
    left: "Expr" = None
    right: "Expr" = None


@dataclass
class Logical(Node):
    op: str = ""
    left: "Expr" = None
    right: "Expr" = None


@dataclass
class Cond(Node):
    test: "Expr" = None
    cons: "Expr" = None
    alt: "Expr" = None


@dataclass
class Assign(Node):
    target: "Expr" = None
    value: "Expr" = None


Expr = Union[
    Num, Str, Bool, Null, Undefined, BotLit, Ident, This, Func, Obj, Arr, Member,
    Call, New, Unary, Binary, Logical, Cond, Assign,
]


# statements
@dataclass
class VarDecl(Node):
    name: str = ""
    init: Optional[Expr] = None


@dataclass
class FunctionDecl(Node):
    func: Func = None


@dataclass
class Return(Node):
    arg: Optional[Expr] = None


@dataclass
class Throw(Node):
    arg: Expr = None


@dataclass
class If(Node):
    test: Expr = None
    cons: list["Stmt"] = field(default_factory=list)
    alt: list["Stmt"] = field(default_factory=list)


@dataclass
class While(Node):
    test: Expr = None
    body: list["Stmt"] = field(default_factory=list)


@dataclass
class Try(Node):
    block: list["Stmt"] = field(default_factory=list)
    param: str = ""
    handler: list["Stmt"] = field(default_factory=list)


@dataclass
class GuardStmt(Node):
    queue: Expr = None
    body: list["Stmt"] = field(default_factory=list)


@dataclass
class LoopStmt(Node):
    """Intrinsic loop whose condition needs statements: ``$loop {..} (c) {..}``."""

    cond_body: list["Stmt"] = field(default_factory=list)
    test: Expr = None
    body: list["Stmt"] = field(default_factory=list)


@dataclass
class ExprStmt(Node):
    expr: Expr = None


Stmt = Union[VarDecl, FunctionDecl, Return, Throw, If, While, Try, GuardStmt, LoopStmt, ExprStmt]


@dataclass
class SurfaceProgram(Node):
    body: list[Stmt] = field(default_factory=list)
    intrinsics: bool = False


# ------------------------------------------------------------------- lexer


@dataclass(frozen=True)
class Token:
    kind: str  # num | str | ident | punct | eof
    value: object
    pos: Pos


_PUNCT = sorted(
    """=== !== == != <= >= && || ++ -- += -= *= => ... { } ( ) [ ] ; , . ? : = < > + - * / % !""".split(),
    key=len,
    reverse=True,
)
_IDENT_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")
_NUM_RE = re.compile(r"(?:0[xX][0-9a-fA-F]+|\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)")
_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "0": "\0", "b": "\b", "f": "\f", "v": "\v"}


def tokenize(source: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 0
    n = len(source)

    def advance(text: str) -> tuple[int, int]:
        nonlocal line, col
        for ch in text:
            if ch == "\n":
                line += 1
                col = 0
            else:
                col += 1
        return line, col

    while i < n:
        ch = source[i]
        if ch in " \t\r\n﻿":
            advance(ch)
            i += 1
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            j = n if j < 0 else j
            advance(source[i:j])
            i = j
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            if j < 0:
                raise ParseError("unterminated comment", line, col)
            advance(source[i : j + 2])
            i = j + 2
            continue
        start_line, start_col = line, col
        if ch in "\"'`":
            if ch == "`":
                raise UnsupportedConstruct("template literals are not supported", line, col)
            j = i + 1
            out = []
            while True:
                if j >= n or source[j] == "\n":
                    raise ParseError("unterminated string literal", start_line, start_col)
                c = source[j]
                if c == ch:
                    break
                if c == "\\":
                    if j + 1 >= n:
                        raise ParseError("bad escape", start_line, start_col)
                    e = source[j + 1]
                    out.append(_ESCAPES.get(e, e))
                    j += 2
                    continue
                out.append(c)
                j += 1
            text = source[i : j + 1]
            end = advance(text)
            toks.append(Token("str", "".join(out), Pos(start_line, start_col, *end)))
            i = j + 1
            continue
        m = _NUM_RE.match(source, i)
        if m and (ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit())):
            text = m.group(0)
            value: float = int(text, 16) if text[:2] in ("0x", "0X") else float(text)
            if float(value).is_integer():
                value = int(value)
            end = advance(text)
            toks.append(Token("num", value, Pos(start_line, start_col, *end)))
            i = m.end()
            continue
        m = _IDENT_RE.match(source, i)
        if m:
            text = m.group(0)
            end = advance(text)
            toks.append(Token("ident", text, Pos(start_line, start_col, *end)))
            i = m.end()
            continue
        for p in _PUNCT:
            if source.startswith(p, i):
                end = advance(p)
                toks.append(Token("punct", p, Pos(start_line, start_col, *end)))
                i += len(p)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    toks.append(Token("eof", None, Pos(line, col, line, col)))
    return toks


# ------------------------------------------------------------------ parser

_UNSUPPORTED_KEYWORDS = {
    "async": "async functions are outside the supported subset (async/await is excluded)",
    "await": "await is outside the supported subset (async/await is excluded)",
    "yield": "generators are not supported",
    "class": "classes are not supported",
    "switch": "switch statements are not supported",
    "do": "do-while loops are not supported",
    "break": "break is not supported",
    "continue": "continue is not supported",
    "delete": "delete is not supported",
    "with": "with is not supported",
    "import": "modules are not supported",
    "export": "modules are not supported",
    "instanceof": "instanceof is not supported",
    "in": "the in operator is not supported",
    "void": "void is not supported",
}
_RESERVED = {
    "var", "let", "const", "function", "return", "if", "else", "throw", "try",
    "catch", "finally", "new", "this", "true", "false", "null", "typeof",
    "while", "for",
} | set(_UNSUPPORTED_KEYWORDS)


class _Parser:
    def __init__(self, source: str, intrinsics: bool):
        self.toks = tokenize(source)
        self.i = 0
        self.intrinsics = intrinsics

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, value: str, kind: str = "punct") -> bool:
        t = self.tok
        return t.kind == kind and t.value == value

    def at_kw(self, word: str) -> bool:
        return self.at(word, "ident")

    def next(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def prev_pos(self) -> Pos:
        return self.toks[self.i - 1].pos

    def expect(self, value: str) -> Token:
        if not self.at(value):
            self.fail(f"expected {value!r}")
        return self.next()

    def expect_ident(self) -> Token:
        t = self.tok
        if t.kind != "ident":
            self.fail("expected identifier")
        self.check_unsupported(t)
        if t.value in _RESERVED:
            self.fail(f"unexpected keyword {t.value!r}")
        return self.next()

    def fail(self, msg: str):
        t = self.tok
        shown = "end of input" if t.kind == "eof" else repr(t.value)
        raise ParseError(f"{msg}, found {shown}", t.pos.line, t.pos.col)

    def check_unsupported(self, t: Token) -> None:
        if t.kind == "ident" and t.value in _UNSUPPORTED_KEYWORDS:
            raise UnsupportedConstruct(_UNSUPPORTED_KEYWORDS[t.value], t.pos.line, t.pos.col)
        if t.kind == "ident" and t.value.startswith("$q") and not self.intrinsics:
            raise UnsupportedConstruct("queue intrinsics are reserved", t.pos.line, t.pos.col)
        if t.kind == "ident" and t.value in ("$guard", "$loop") and not self.intrinsics:
            raise UnsupportedConstruct("queue intrinsics are reserved", t.pos.line, t.pos.col)

    def semi(self) -> None:
        if self.at(";"):
            self.next()

    # statements
    def program(self) -> SurfaceProgram:
        start = self.tok.pos
        body = []
        while self.tok.kind != "eof":
            body.extend(self.statement())
        end = self.tok.pos
        return SurfaceProgram(pos=span(start, end), body=body, intrinsics=self.intrinsics)

    def block(self) -> list[Stmt]:
        self.expect("{")
        body = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.fail("expected '}'")
            body.extend(self.statement())
        self.next()
        return body

    def body_or_block(self) -> list[Stmt]:
        if self.at("{"):
            return self.block()
        return self.statement()

    def statement(self) -> list[Stmt]:
        t = self.tok
        self.check_unsupported(t)
        start = t.pos
        if t.kind == "punct" and t.value == "{":
            return self.block()
        if t.kind == "punct" and t.value == ";":
            self.next()
            return []
        if t.kind == "ident":
            kw = t.value
            if kw in ("var", "let", "const"):
                self.next()
                out = self.var_decls()
                self.semi()
                return out
            if kw == "function":
                if self.peek().kind == "punct" and self.peek().value == "*":
                    raise UnsupportedConstruct("generators are not supported", t.pos.line, t.pos.col)
                f = self.function(require_name=True)
                return [FunctionDecl(pos=f.pos, func=f)]
            if kw == "return":
                self.next()
                arg = None
                if not self.at(";") and not self.at("}") and self.tok.pos.line == start.line:
                    arg = self.expression()
                self.semi()
                return [Return(pos=span(start, self.prev_pos()), arg=arg)]
            if kw == "throw":
                self.next()
                arg = self.expression()
                self.semi()
                return [Throw(pos=span(start, self.prev_pos()), arg=arg)]
            if kw == "if":
                self.next()
                self.expect("(")
                test = self.expression()
                self.expect(")")
                cons = self.body_or_block()
                alt: list[Stmt] = []
                if self.at_kw("else"):
                    self.next()
                    alt = self.body_or_block()
                return [If(pos=span(start, self.prev_pos()), test=test, cons=cons, alt=alt)]
            if kw == "while":
                self.next()
                self.expect("(")
                test = self.expression()
                self.expect(")")
                body = self.body_or_block()
                return [While(pos=span(start, self.prev_pos()), test=test, body=body)]
            if kw == "for":
                return self.for_statement()
            if kw == "try":
                self.next()
                block = self.block()
                if self.at_kw("finally"):
                    raise UnsupportedConstruct("finally is not supported", self.tok.pos.line, self.tok.pos.col)
                if not self.at_kw("catch"):
                    self.fail("expected 'catch'")
                self.next()
                self.expect("(")
                param = self.expect_ident().value
                self.expect(")")
                handler = self.block()
                if self.at_kw("finally"):
                    raise UnsupportedConstruct("finally is not supported", self.tok.pos.line, self.tok.pos.col)
                return [Try(pos=span(start, self.prev_pos()), block=block, param=param, handler=handler)]
            if kw == "$guard" and self.intrinsics:
                self.next()
                self.expect("(")
                q = self.expression()
                self.expect(")")
                body = self.block()
                return [GuardStmt(pos=span(start, self.prev_pos()), queue=q, body=body)]
            if kw == "$loop" and self.intrinsics:
                self.next()
                cond_body = self.block()
                self.expect("(")
                test = self.expression()
                self.expect(")")
                body = self.block()
                return [LoopStmt(pos=span(start, self.prev_pos()), cond_body=cond_body, test=test, body=body)]
        expr = self.expression()
        self.semi()
        return [ExprStmt(pos=span(start, self.prev_pos()), expr=expr)]

    def var_decls(self) -> list[Stmt]:
        out: list[Stmt] = []
        while True:
            name_tok = self.expect_ident()
            init = None
            if self.at("="):
                self.next()
                init = self.assignment()
            out.append(VarDecl(pos=span(name_tok.pos, self.prev_pos()), name=name_tok.value, init=init))
            if not self.at(","):
                return out
            self.next()

    def for_statement(self) -> list[Stmt]:
        start = self.next().pos
        self.expect("(")
        init: list[Stmt] = []
        if self.at_kw("var") or self.at_kw("let") or self.at_kw("const"):
            self.next()
            init = self.var_decls()
        elif not self.at(";"):
            e = self.expression()
            init = [ExprStmt(pos=e.pos, expr=e)]
        if self.at_kw("of") or self.at_kw("in"):
            raise UnsupportedConstruct("for-in/for-of loops are not supported", start.line, start.col)
        self.expect(";")
        test: Expr = Bool(pos=start, value=True)
        if not self.at(";"):
            test = self.expression()
        self.expect(";")
        update: list[Stmt] = []
        if not self.at(")"):
            e = self.expression()
            update = [ExprStmt(pos=e.pos, expr=e)]
        self.expect(")")
        body = self.body_or_block()
        loop = While(pos=span(start, self.prev_pos()), test=test, body=body + update)
        return init + [loop]

    def function(self, require_name: bool) -> Func:
        start = self.expect_kw("function")
        if self.at("*"):
            raise UnsupportedConstruct("generators are not supported", start.line, start.col)
        name = None
        if self.tok.kind == "ident":
            name = self.expect_ident().value
        elif require_name:
            self.fail("expected function name")
        self.expect("(")
        params = []
        while not self.at(")"):
            if self.at("..."):
                raise UnsupportedConstruct("rest parameters are not supported", self.tok.pos.line, self.tok.pos.col)
            params.append(self.expect_ident().value)
            if not self.at(")"):
                self.expect(",")
        self.next()
        body = self.block()
        return Func(pos=span(start, self.prev_pos()), name=name, params=params, body=body)

    def expect_kw(self, word: str) -> Pos:
        if not self.at_kw(word):
            self.fail(f"expected {word!r}")
        return self.next().pos

    # expressions
    def expression(self) -> Expr:
        e = self.assignment()
        if self.at(","):
            raise UnsupportedConstruct("the comma operator is not supported", self.tok.pos.line, self.tok.pos.col)
        return e

    def assignment(self) -> Expr:
        left = self.conditional()
        if self.at("=>"):
            raise UnsupportedConstruct("arrow functions are not supported", self.tok.pos.line, self.tok.pos.col)
        if self.at("=") or self.at("+=") or self.at("-=") or self.at("*="):
            op = self.next().value
            if not isinstance(left, (Ident, Member)):
                raise ParseError("invalid assignment target", left.pos.line, left.pos.col)
            value = self.assignment()
            if op != "=":
                value = Binary(pos=span(left.pos, value.pos), op=op[0], left=left, right=value)
            return Assign(pos=span(left.pos, value.pos), target=left, value=value)
        return left

    def conditional(self) -> Expr:
        test = self.binary(0)
        if self.at("?"):
            self.next()
            cons = self.assignment()
            self.expect(":")
            alt = self.assignment()
            return Cond(pos=span(test.pos, alt.pos), test=test, cons=cons, alt=alt)
        return test

    _LEVELS = [
        ("||",),
        ("&&",),
        ("===", "!==", "==", "!="),
        ("<", ">", "<=", ">="),
        ("+", "-"),
        ("*", "/", "%"),
    ]

    def binary(self, level: int) -> Expr:
        if level == len(self._LEVELS):
            return self.unary()
        left = self.binary(level + 1)
        ops = self._LEVELS[level]
        while self.tok.kind == "punct" and self.tok.value in ops:
            op = self.next().value
            right = self.binary(level + 1)
            cls = Logical if op in ("&&", "||") else Binary
            left = cls(pos=span(left.pos, right.pos), op=op, left=left, right=right)
        if self.tok.kind == "ident" and self.tok.value in ("instanceof", "in"):
            self.check_unsupported(self.tok)
        return left

    def unary(self) -> Expr:
        t = self.tok
        if t.kind == "punct" and t.value in ("!", "-", "+"):
            self.next()
            arg = self.unary()
            return Unary(pos=span(t.pos, arg.pos), op=t.value, arg=arg)
        if t.kind == "punct" and t.value in ("++", "--"):
            self.next()
            arg = self.unary()
            return self._incdec(arg, t.value, t.pos)
        if t.kind == "ident" and t.value == "typeof":
            self.next()
            arg = self.unary()
            return Unary(pos=span(t.pos, arg.pos), op="typeof", arg=arg)
        self.check_unsupported(t)
        e = self.postfix()
        if self.at("++") or self.at("--"):
            op = self.next().value
            return self._incdec(e, op, e.pos)
        return e

    def _incdec(self, target: Expr, op: str, pos: Pos) -> Expr:
        if not isinstance(target, (Ident, Member)):
            raise ParseError("invalid increment target", pos.line, pos.col)
        p = span(pos, self.prev_pos())
        one = Num(pos=p, value=1)
        return Assign(pos=p, target=target, value=Binary(pos=p, op=op[0], left=target, right=one))

    def postfix(self) -> Expr:
        if self.at_kw("new"):
            start = self.next().pos
            callee = self.member_only()
            args = self.arguments() if self.at("(") else []
            e: Expr = New(pos=span(start, self.prev_pos()), callee=callee, args=args)
        else:
            e = self.primary()
        while True:
            if self.at("."):
                self.next()
                name = self.tok
                if name.kind != "ident":
                    self.fail("expected property name")
                self.next()
                e = Member(pos=span(e.pos, name.pos), obj=e, prop=name.value, prop_pos=name.pos)
            elif self.at("["):
                e = self.computed_member(e)
            elif self.at("("):
                args = self.arguments()
                e = Call(pos=span(e.pos, self.prev_pos()), callee=e, args=args)
            else:
                return e

    def member_only(self) -> Expr:
        e = self.primary()
        while self.at(".") or self.at("["):
            if self.at("["):
                e = self.computed_member(e)
                continue
            self.next()
            name = self.tok
            if name.kind != "ident":
                self.fail("expected property name")
            self.next()
            e = Member(pos=span(e.pos, name.pos), obj=e, prop=name.value, prop_pos=name.pos)
        return e

    def computed_member(self, obj: Expr) -> Expr:
        start = self.next().pos
        key = self.expression()
        self.expect("]")
        if isinstance(key, Str):
            prop = key.value
        elif isinstance(key, Num):
            prop = _num_key(key.value)
        else:
            raise UnsupportedConstruct("computed property access needs a literal key", start.line, start.col)
        return Member(pos=span(obj.pos, self.prev_pos()), obj=obj, prop=prop, prop_pos=key.pos)

    def arguments(self) -> list[Expr]:
        self.expect("(")
        args = []
        while not self.at(")"):
            if self.at("..."):
                raise UnsupportedConstruct("spread arguments are not supported", self.tok.pos.line, self.tok.pos.col)
            args.append(self.assignment())
            if not self.at(")"):
                self.expect(",")
        self.next()
        return args

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.next()
            return Num(pos=t.pos, value=t.value)
        if t.kind == "str":
            self.next()
            return Str(pos=t.pos, value=t.value)
        if t.kind == "punct":
            if t.value == "(":
                self.next()
                e = self.expression()
                self.expect(")")
                if self.at("=>"):
                    raise UnsupportedConstruct("arrow functions are not supported", t.pos.line, t.pos.col)
                return e
            if t.value == "{":
                return self.object_literal()
            if t.value == "[":
                return self.array_literal()
            if t.value == "/":
                raise UnsupportedConstruct("regular expression literals are not supported", t.pos.line, t.pos.col)
            self.fail("unexpected token")
        if t.kind == "ident":
            self.check_unsupported(t)
            word = t.value
            if word == "function":
                return self.function(require_name=False)
            if word in ("true", "false"):
                self.next()
                return Bool(pos=t.pos, value=word == "true")
            if word == "null":
                self.next()
                return Null(pos=t.pos)
            if word == "undefined":
                self.next()
                return Undefined(pos=t.pos)
            if word == "this":
                self.next()
                return This(pos=t.pos)
            if word == "$q" and self.intrinsics and self.peek().value == "." and self.peek(2).value == "bot":
                self.i += 3
                return BotLit(pos=span(t.pos, self.prev_pos()))
            if word in _RESERVED:
                self.fail(f"unexpected keyword {word!r}")
            self.next()
            if self.at("=>"):
                raise UnsupportedConstruct("arrow functions are not supported", t.pos.line, t.pos.col)
            return Ident(pos=t.pos, name=word)
        self.fail("unexpected token")

    def object_literal(self) -> Expr:
        start = self.expect("{").pos
        props = []
        while not self.at("}"):
            k = self.tok
            if k.kind == "ident" or k.kind == "str":
                key = k.value
            elif k.kind == "num":
                key = _num_key(k.value)
            else:
                self.fail("expected property key")
            self.next()
            if self.at("("):
                raise UnsupportedConstruct("method shorthand is not supported", k.pos.line, k.pos.col)
            self.expect(":")
            props.append((key, self.assignment()))
            if not self.at("}"):
                self.expect(",")
        self.next()
        return Obj(pos=span(start, self.prev_pos()), props=props)

    def array_literal(self) -> Expr:
        start = self.expect("[").pos
        elems = []
        while not self.at("]"):
            elems.append(self.assignment())
            if not self.at("]"):
                self.expect(",")
        self.next()
        return Arr(pos=span(start, self.prev_pos()), elements=elems)


def _num_key(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(v)


def parse(source: str, intrinsics: bool = False) -> SurfaceProgram:
    """Parse program text into a :class:`SurfaceProgram`.

    Raises :class:`ParseError` for malformed text and
    :class:`UnsupportedConstruct` for JavaScript outside the subset.
    """
    return _Parser(source, intrinsics).program()


def ast_to_json(node) -> object:
    """Plain-data view of an AST, used by ``--dump-ast``."""
    if isinstance(node, list):
        return [ast_to_json(x) for x in node]
    if isinstance(node, tuple):
        return [ast_to_json(x) for x in node]
    if isinstance(node, Node):
        out: dict = {"type": type(node).__name__}
        if node.pos is not NOPOS:
            out["loc"] = [node.pos.line, node.pos.col, node.pos.end_line, node.pos.end_col]
        for k, v in vars(node).items():
            if k in ("pos", "prop_pos"):
                continue
            out[k] = ast_to_json(v)
        return out
    return node
