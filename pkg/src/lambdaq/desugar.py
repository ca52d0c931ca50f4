"""Lowering from the surface AST to the core IR.

Promise, timer and I/O calls are recognised syntactically when their root
name (``Promise``, ``setTimeout``, ``fs`` ...) is not declared by the
program, and are expanded into queue primitives.
"""

from __future__ import annotations

import re
from typing import Optional

from . import core as C
from . import surface as S
from .errors import DesugarError, ModelArityError, UnsupportedConstruct
from .models import ModelRegistry, shared_registry
from .values import BOT, NULL, UNDEF

IDENTITY = "$identity"
RETHROW = "$rethrow"
_TEMP = re.compile(r"^\$t(\d+)$")
_UNSUPPORTED_PROMISE = {"all", "race", "allSettled", "any"}
_ERROR_CTORS = {"Error", "TypeError", "RangeError", "SyntaxError", "ReferenceError"}


class _Fn:
    def __init__(self, fn_id: str, name, params, parent: Optional["_Fn"], pos):
        self.fn_id = fn_id
        self.name = name
        self.params = list(params)
        self.parent = parent
        self.pos = pos
        self.declared: set[str] = set(params) | {"this"}
        self.locals: list[str] = []
        self.body: list = []

    def declare(self, name: str) -> None:
        if name not in self.declared:
            self.declared.add(name)
            self.locals.append(name)

    def resolves(self, name: str) -> bool:
        f = self
        while f is not None:
            if name in f.declared:
                return True
            f = f.parent
        return False


def _collect_decls(stmts, out_vars: list, out_funcs: list) -> None:
    for s in stmts:
        if isinstance(s, S.VarDecl):
            out_vars.append(s.name)
        elif isinstance(s, S.FunctionDecl):
            out_funcs.append(s)
        elif isinstance(s, S.If):
            _collect_decls(s.cons, out_vars, out_funcs)
            _collect_decls(s.alt, out_vars, out_funcs)
        elif isinstance(s, (S.While,)):
            _collect_decls(s.body, out_vars, out_funcs)
        elif isinstance(s, S.LoopStmt):
            _collect_decls(s.cond_body, out_vars, out_funcs)
            _collect_decls(s.body, out_vars, out_funcs)
        elif isinstance(s, S.Try):
            _collect_decls(s.block, out_vars, out_funcs)
            out_vars.append(s.param)
            _collect_decls(s.handler, out_vars, out_funcs)
        elif isinstance(s, S.GuardStmt):
            _collect_decls(s.body, out_vars, out_funcs)


def _max_temp(src: S.SurfaceProgram) -> int:
    best = 0

    def visit(x):
        nonlocal best
        if isinstance(x, list):
            for i in x:
                visit(i)
        elif isinstance(x, tuple):
            for i in x:
                visit(i)
        elif isinstance(x, S.Node):
            for k, v in vars(x).items():
                if isinstance(v, str):
                    m = _TEMP.match(v)
                    if m:
                        best = max(best, int(m.group(1)))
                elif k not in ("pos", "prop_pos"):
                    visit(v)
        elif isinstance(x, str):
            m = _TEMP.match(x)
            if m:
                best = max(best, int(m.group(1)))

    visit(src.body)
    return best


class Desugarer:
    def __init__(self, program: S.SurfaceProgram, models: Optional[ModelRegistry] = None):
        self.src = program
        self.intrinsics = program.intrinsics
        self.models = models if models is not None else shared_registry()
        self.functions: dict[str, C.CoreFunction] = {}
        self.diagnostics: list[str] = []
        self.temp_base = _max_temp(program)
        self.temp_counter = 0
        self.need_defaults = False
        self.out: list = []  # current emission buffer
        self.fn: _Fn = None  # type: ignore[assignment]

    # ------------------------------------------------------------- helpers
    def emit(self, ins) -> None:
        self.out.append(ins)

    def temp(self) -> str:
        self.temp_counter += 1
        name = f"$t{self.temp_base + self.temp_counter}"
        self.fn.declare(name)
        return name

    def sub(self, fn):
        """Run ``fn`` with a fresh emission buffer and return what it emitted."""
        saved = self.out
        self.out = []
        try:
            fn()
            return self.out
        finally:
            self.out = saved

    def root_is_builtin(self, e) -> Optional[str]:
        """Dotted name of ``e`` when its root identifier is undeclared."""
        parts = []
        while isinstance(e, S.Member):
            parts.append(e.prop)
            e = e.obj
        if isinstance(e, S.Ident) and not self.fn.resolves(e.name):
            parts.append(e.name)
            return ".".join(reversed(parts))
        return None

    # ----------------------------------------------------------- functions
    def run(self) -> C.CoreProgram:
        main = _Fn("main", None, [], None, self.src.pos)
        self.lower_function(main, self.src.body, is_main=True)
        order = ["main"] + [k for k in self.functions if k != "main"]
        funcs = {k: self.functions[k] for k in order}
        prog = C.CoreProgram(funcs, "main", self.diagnostics)
        loops = [i for _, i in C.all_instrs(prog) if isinstance(i, C.EventLoop)]
        if len(loops) != 1 or prog.functions["main"].body[-1] is not loops[0]:
            raise DesugarError("the program must end with exactly one event loop")
        return prog

    def lower_function(self, fn: _Fn, body, is_main: bool = False) -> None:
        saved = (self.fn, self.out)
        self.fn = fn
        self.out = fn.body
        var_names: list[str] = []
        decls: list[S.FunctionDecl] = []
        _collect_decls(body, var_names, decls)
        for v in var_names:
            if v not in fn.params:
                fn.declare(v)
        for d in decls:
            fn.declare(d.func.name)
        if is_main:
            fn.declare(IDENTITY)
            fn.declare(RETHROW)
            fn.locals.remove(IDENTITY)
            fn.locals.remove(RETHROW)
        # reserve a slot in the function table so ids stay in source order
        self.functions[fn.fn_id] = None  # type: ignore[assignment]
        for d in decls:
            fid = self.new_function(d.func)
            self.emit(C.MakeClosure(pos=d.pos, dst=d.func.name, fn_id=fid, decl=True))
        for s in body:
            if isinstance(s, S.FunctionDecl):
                continue
            self.stmt(s)
        if is_main:
            self.finish_main(fn)
        self.functions[fn.fn_id] = C.CoreFunction(
            fn.fn_id, fn.name, fn.params, fn.locals, fn.body,
            fn.parent.fn_id if fn.parent else None, fn.pos,
        )
        self.fn, self.out = saved

    def finish_main(self, fn: _Fn) -> None:
        declared_defaults = {
            i.dst for i in fn.body if isinstance(i, C.MakeClosure) and i.decl
        } & {IDENTITY, RETHROW}
        if declared_defaults:
            for name in (IDENTITY, RETHROW):
                if name in declared_defaults:
                    fn.locals.append(name)
        elif self.need_defaults:
            pos = self.src.pos
            prelude = []
            for name, param, ret in ((IDENTITY, "v", C.Return), (RETHROW, "e", C.Throw)):
                ins = [ret(pos=pos, value=C.Var(param))] if ret is C.Return else [C.Throw(pos=pos, value=C.Var(param))]
                self.functions[name] = C.CoreFunction(name, name, [param], [], ins, "main", pos)
                prelude.append(C.MakeClosure(pos=pos, dst=name, fn_id=name, decl=True))
                fn.locals.append(name)
            n = sum(1 for i in fn.body if isinstance(i, C.MakeClosure) and i.decl)
            fn.body[n:n] = prelude
        if not self.intrinsics:
            self.emit(C.EventLoop(pos=self.src.pos))

    def new_function(self, f: S.Func) -> str:
        base = f.name or "anon"
        fid = f"{base}@{f.pos.line}:{f.pos.col}"
        if fid in self.functions:
            raise DesugarError("duplicate function id", f.pos.line, f.pos.col)
        child = _Fn(fid, f.name, f.params, self.fn, f.pos)
        self.lower_function(child, f.body)
        return fid

    # ---------------------------------------------------------- statements
    def block(self, stmts) -> list:
        def go():
            for s in stmts:
                if isinstance(s, S.FunctionDecl):
                    raise UnsupportedConstruct(
                        "function declarations inside blocks are not supported", s.pos.line, s.pos.col
                    )
                self.stmt(s)

        return self.sub(go)

    def stmt(self, s) -> None:
        if isinstance(s, S.VarDecl):
            if s.init is not None:
                self.lower(s.init, dst=s.name)
        elif isinstance(s, S.ExprStmt):
            self.lower(s.expr, dst=None, discard=True)
        elif isinstance(s, S.Return):
            v = self.lower(s.arg) if s.arg is not None else C.LIT_UNDEF
            self.emit(C.Return(pos=s.pos, value=v))
        elif isinstance(s, S.Throw):
            v = self.lower(s.arg)
            self.emit(C.Throw(pos=s.pos, value=v))
        elif isinstance(s, S.If):
            c = self.lower(s.test)
            self.emit(C.If(pos=s.pos, cond=c, then=self.block(s.cons), orelse=self.block(s.alt)))
        elif isinstance(s, S.While):
            holder = {}
            cond_body = self.sub(lambda: holder.setdefault("c", self.lower(s.test)))
            self.emit(C.Loop(pos=s.pos, cond_body=cond_body, cond=holder["c"], body=self.block(s.body)))
        elif isinstance(s, S.LoopStmt):
            holder = {}

            def cond():
                for x in s.cond_body:
                    self.stmt(x)
                holder["c"] = self.lower(s.test)

            cond_body = self.sub(cond)
            self.emit(C.Loop(pos=s.pos, cond_body=cond_body, cond=holder["c"], body=self.block(s.body)))
        elif isinstance(s, S.Try):
            self.emit(C.TryCatch(pos=s.pos, body=self.block(s.block), param=s.param, handler=self.block(s.handler)))
        elif isinstance(s, S.GuardStmt):
            q = self.lower(s.queue)
            self.emit(C.Guard(pos=s.pos, queue=q, body=self.block(s.body)))
        elif isinstance(s, S.FunctionDecl):
            raise UnsupportedConstruct("nested function declaration", s.pos.line, s.pos.col)
        else:  # pragma: no cover
            raise DesugarError(f"unknown statement {type(s).__name__}", s.pos.line, s.pos.col)

    # --------------------------------------------------------- expressions
    def target(self, dst: Optional[str]) -> str:
        return dst if dst is not None else self.temp()

    def ret(self, atom, dst: Optional[str], pos) -> C.Atom:
        if dst is not None and atom != C.Var(dst):
            self.emit(C.Assign(pos=pos, dst=dst, src=atom))
            return C.Var(dst)
        return atom

    def lower(self, e, dst: Optional[str] = None, discard: bool = False) -> C.Atom:
        """Emit code for ``e`` and return an atom holding its value."""
        pos = e.pos
        if isinstance(e, S.Num):
            return self.ret(C.Lit(e.value), dst, pos)
        if isinstance(e, S.Str):
            return self.ret(C.Lit(e.value), dst, pos)
        if isinstance(e, S.Bool):
            return self.ret(C.Lit(e.value), dst, pos)
        if isinstance(e, S.Null):
            return self.ret(C.Lit(NULL), dst, pos)
        if isinstance(e, S.Undefined):
            return self.ret(C.Lit(UNDEF), dst, pos)
        if isinstance(e, S.BotLit):
            return self.ret(C.Lit(BOT), dst, pos)
        if isinstance(e, S.This):
            return self.ret(C.Var("this"), dst, pos)
        if isinstance(e, S.Ident):
            if not self.fn.resolves(e.name):
                if e.name == "eval":
                    raise UnsupportedConstruct("eval is not supported", pos.line, pos.col)
                raise DesugarError(f"undeclared identifier {e.name!r}", pos.line, pos.col)
            return self.ret(C.Var(e.name), dst, pos)
        if isinstance(e, S.Func):
            fid = self.new_function(e)
            t = self.target(dst)
            self.emit(C.MakeClosure(pos=pos, dst=t, fn_id=fid))
            return C.Var(t)
        if isinstance(e, S.Obj):
            props = tuple((k, self.lower(v)) for k, v in e.props)
            t = self.target(dst)
            self.emit(C.NewObj(pos=pos, dst=t, alloc=pos.site(), props=props))
            return C.Var(t)
        if isinstance(e, S.Arr):
            items = [self.lower(v) for v in e.elements]
            props = tuple((str(i), a) for i, a in enumerate(items)) + (("length", C.Lit(len(items))),)
            t = self.target(dst)
            self.emit(C.NewObj(pos=pos, dst=t, alloc=pos.site(), props=props))
            return C.Var(t)
        if isinstance(e, S.Member):
            name = self.root_is_builtin(e)
            if name is not None:
                raise DesugarError(f"unsupported builtin value {name!r}", pos.line, pos.col)
            o = self.lower(e.obj)
            t = self.target(dst)
            self.emit(C.GetProp(pos=pos, dst=t, obj=o, prop=e.prop))
            return C.Var(t)
        if isinstance(e, S.Call):
            return self.lower_call(e, dst, discard)
        if isinstance(e, S.New):
            return self.lower_new(e, dst)
        if isinstance(e, S.Unary):
            if e.op == "-" and isinstance(e.arg, S.Num):
                return self.ret(C.Lit(-e.arg.value), dst, pos)
            if e.op == "typeof" and isinstance(e.arg, S.Ident) and not self.fn.resolves(e.arg.name):
                return self.ret(C.Lit("undefined"), dst, pos)
            a = self.lower(e.arg)
            t = self.target(dst)
            self.emit(C.Unop(pos=pos, dst=t, op=e.op, arg=a))
            return C.Var(t)
        if isinstance(e, S.Binary):
            left = self.lower(e.left)
            right = self.lower(e.right)
            t = self.target(dst)
            self.emit(C.Binop(pos=pos, dst=t, op=e.op, left=left, right=right))
            return C.Var(t)
        if isinstance(e, S.Logical):
            t = self.target(dst)
            self.lower(e.left, dst=t)
            rest = self.sub(lambda: self.lower(e.right, dst=t))
            if e.op == "&&":
                self.emit(C.If(pos=pos, cond=C.Var(t), then=rest, orelse=[]))
            else:
                self.emit(C.If(pos=pos, cond=C.Var(t), then=[], orelse=rest))
            return C.Var(t)
        if isinstance(e, S.Cond):
            c = self.lower(e.test)
            t = self.target(dst)
            a = self.sub(lambda: self.lower(e.cons, dst=t))
            b = self.sub(lambda: self.lower(e.alt, dst=t))
            self.emit(C.If(pos=pos, cond=c, then=a, orelse=b))
            return C.Var(t)
        if isinstance(e, S.Assign):
            tgt = e.target
            if isinstance(tgt, S.Ident):
                if not self.fn.resolves(tgt.name):
                    raise DesugarError(f"assignment to undeclared identifier {tgt.name!r}", pos.line, pos.col)
                self.lower(e.value, dst=tgt.name)
                return self.ret(C.Var(tgt.name), dst, pos)
            if self.root_is_builtin(tgt.obj) is not None:
                raise DesugarError("assignment to a builtin object", pos.line, pos.col)
            o = self.lower(tgt.obj)
            v = self.lower(e.value)
            self.emit(C.SetProp(pos=pos, obj=o, prop=tgt.prop, value=v))
            return self.ret(v, dst, pos)
        raise DesugarError(f"unknown expression {type(e).__name__}", pos.line, pos.col)  # pragma: no cover

    def undef_result(self, dst, pos) -> C.Atom:
        return self.ret(C.LIT_UNDEF, dst, pos)

    # --------------------------------------------------------------- calls
    def lower_call(self, e: S.Call, dst, discard: bool) -> C.Atom:
        pos = e.pos
        callee = e.callee
        if isinstance(callee, S.Member) and callee.prop in ("then", "catch", "finally"):
            if self.root_is_builtin(callee.obj) is None:
                if callee.prop == "finally":
                    raise UnsupportedConstruct("Promise.prototype.finally is not supported", pos.line, pos.col)
                return self.lower_then(e, dst)
        if self.intrinsics and isinstance(callee, S.Member) and isinstance(callee.obj, S.Ident) \
                and callee.obj.name == "$q":
            return self.lower_intrinsic(e, callee.prop, dst, discard)
        name = self.root_is_builtin(callee)
        if name is not None:
            return self.lower_builtin(e, name, dst, discard)
        if isinstance(callee, S.Member):
            o = self.lower(callee.obj)
            f = self.temp()
            self.emit(C.GetProp(pos=callee.pos, dst=f, obj=o, prop=callee.prop))
            args = tuple(self.lower(a) for a in e.args)
            t = None if discard and dst is None else self.target(dst)
            self.emit(C.Call(pos=pos, dst=t, callee=C.Var(f), this=o, args=args))
        else:
            f = self.lower(callee)
            args = tuple(self.lower(a) for a in e.args)
            t = None if discard and dst is None else self.target(dst)
            self.emit(C.Call(pos=pos, dst=t, callee=f, this=C.LIT_UNDEF, args=args))
        return C.Var(t) if t is not None else C.LIT_UNDEF

    def handler_atom(self, arg, default: str) -> C.Atom:
        if arg is None or isinstance(arg, S.Undefined):
            self.need_defaults = True
            return C.Var(default)
        self.need_defaults = True  # dynamic non-callables fall back to the defaults
        return self.lower(arg)

    def lower_then(self, e: S.Call, dst) -> C.Atom:
        callee = e.callee
        p = self.lower(callee.obj)
        if callee.prop == "then":
            f1 = e.args[0] if len(e.args) > 0 else None
            f2 = e.args[1] if len(e.args) > 1 else None
        else:
            f1 = None
            f2 = e.args[0] if e.args else None
        a1 = self.handler_atom(f1, IDENTITY)
        a2 = self.handler_atom(f2, RETHROW)
        for extra in e.args[2 if callee.prop == "then" else 1:]:
            self.lower(extra)
        q = self.target(dst)
        pos = e.pos
        self.emit(C.NewQ(pos=pos, dst=q, alloc=callee.prop_pos.site()))
        self.emit(C.Register(pos=pos, kind="fulfill", queue=p, callback=a1, dep=C.Var(q)))
        self.emit(C.Register(pos=pos, kind="reject", queue=p, callback=a2, dep=C.Var(q)))
        return C.Var(q)

    def lower_builtin(self, e: S.Call, name: str, dst, discard: bool = False) -> C.Atom:
        pos = e.pos
        args = e.args
        if name in ("eval", "Function"):
            raise UnsupportedConstruct("eval is not supported", pos.line, pos.col)
        if name == "require":
            raise UnsupportedConstruct("modules are not supported", pos.line, pos.col)
        if name.startswith("Promise."):
            method = name.split(".", 1)[1]
            if method in _UNSUPPORTED_PROMISE:
                raise DesugarError(f"{name} is not supported", pos.line, pos.col)
            if method == "resolve":
                return self.lower_resolve(e, dst)
            if method == "reject":
                v = self.lower(args[0]) if args else C.LIT_UNDEF
                q = self.target(dst)
                self.emit(C.NewQ(pos=pos, dst=q, alloc=pos.site()))
                self.emit(C.Settle(pos=pos, kind="reject", queue=C.Var(q), value=v))
                return C.Var(q)
            raise DesugarError(f"{name} is not supported", pos.line, pos.col)
        if name in ("setTimeout", "setImmediate", "io.async"):
            if not args:
                raise ModelArityError(f"{name} requires a callback argument", pos.line, pos.col)
            f = self.lower(args[0])
            rest = args[1:]
            if name == "setTimeout" and rest:
                self.lower(rest[0])  # the delay is evaluated and discarded
                rest = rest[1:]
            extras = tuple(self.lower(a) for a in rest)
            kind = "io" if name == "io.async" else "timer"
            self.emit(C.AddCallback(pos=pos, kind=kind, callback=f, extras=extras))
            return self.undef_result(dst, pos)
        if name == "setInterval":
            raise UnsupportedConstruct("setInterval is not supported", pos.line, pos.col)
        model = self.models.get(name)
        if model is not None:
            if len(args) <= model.callback_index:
                raise ModelArityError(f"{name} requires a callback argument", pos.line, pos.col)
            atoms = tuple(self.lower(a) for a in args)
            self.emit(C.ModelCall(pos=pos, model=name, args=atoms))
            return self.undef_result(dst, pos)
        atoms = tuple(self.lower(a) for a in args)
        self.diagnostics.append(f"{pos.site()}: unknown builtin {name!r} treated as havoc")
        t = None if discard and dst is None else self.target(dst)
        self.emit(C.Havoc(pos=pos, dst=t, name=name, args=atoms))
        return C.Var(t) if t is not None else C.LIT_UNDEF

    def lower_resolve(self, e: S.Call, dst) -> C.Atom:
        pos = e.pos
        arg = e.args[0] if e.args else None
        static_plain = arg is None or isinstance(
            arg, (S.Num, S.Str, S.Bool, S.Null, S.Undefined, S.Arr, S.Func)
        ) or (isinstance(arg, S.Obj) and all(k != "then" for k, _ in arg.props))
        static_thenable = isinstance(arg, S.Obj) and any(k == "then" for k, _ in arg.props)
        v = self.lower(arg) if arg is not None else C.LIT_UNDEF
        q = self.target(dst)
        self.emit(C.NewQ(pos=pos, dst=q, alloc=pos.site()))
        if static_plain:
            self.emit(C.Settle(pos=pos, kind="fulfill", queue=C.Var(q), value=v))
            return C.Var(q)
        then_fn = self.temp()

        def thenable():
            t = self.temp()
            self.emit(C.NewQ(pos=pos, dst=t, alloc=pos.site() + "#t"))
            self.emit(C.Settle(pos=pos, kind="fulfill", queue=C.Var(t), value=C.Lit(BOT)))
            ful = self.temp()
            rej = self.temp()
            self.emit(C.SettleFn(pos=pos, dst=ful, queue=C.Var(q), kind="fulfill"))
            self.emit(C.SettleFn(pos=pos, dst=rej, queue=C.Var(q), kind="reject"))
            self.emit(C.Register(pos=pos, kind="fulfill", queue=C.Var(t), callback=C.Var(then_fn),
                                 dep=C.Var(t), receiver=v, extras=(C.Var(ful), C.Var(rej))))

        if static_thenable:
            self.emit(C.GetProp(pos=pos, dst=then_fn, obj=v, prop="then"))
            for ins in self.sub(thenable):
                self.emit(ins)
            return C.Var(q)
        # dynamic check: typeof v === "object" && v !== null && typeof v.then === "function"
        ty = self.temp()
        is_thenable = self.temp()
        self.emit(C.Unop(pos=pos, dst=ty, op="typeof", arg=v))
        self.emit(C.Binop(pos=pos, dst=is_thenable, op="===", left=C.Var(ty), right=C.Lit("object")))

        def object_case():
            nn = self.temp()
            self.emit(C.Binop(pos=pos, dst=nn, op="!==", left=v, right=C.Lit(NULL)))

            def non_null():
                self.emit(C.GetProp(pos=pos, dst=then_fn, obj=v, prop="then"))
                ft = self.temp()
                self.emit(C.Unop(pos=pos, dst=ft, op="typeof", arg=C.Var(then_fn)))
                self.emit(C.Binop(pos=pos, dst=is_thenable, op="===", left=C.Var(ft), right=C.Lit("function")))

            self.emit(C.If(pos=pos, cond=C.Var(nn), then=self.sub(non_null),
                           orelse=[C.Assign(pos=pos, dst=is_thenable, src=C.Lit(False))]))

        self.emit(C.If(pos=pos, cond=C.Var(is_thenable), then=self.sub(object_case), orelse=[]))
        plain = [C.Settle(pos=pos, kind="fulfill", queue=C.Var(q), value=v)]
        self.emit(C.If(pos=pos, cond=C.Var(is_thenable), then=self.sub(thenable), orelse=plain))
        return C.Var(q)

    def lower_new(self, e: S.New, dst) -> C.Atom:
        pos = e.pos
        name = self.root_is_builtin(e.callee)
        if name == "Promise":
            if not e.args:
                raise DesugarError("new Promise requires an executor", pos.line, pos.col)
            ex = self.lower(e.args[0])
            q = self.target(dst)
            self.emit(C.NewQ(pos=pos, dst=q, alloc=pos.site()))
            res = self.temp()
            rej = self.temp()
            self.emit(C.SettleFn(pos=pos, dst=res, queue=C.Var(q), kind="fulfill"))
            self.emit(C.SettleFn(pos=pos, dst=rej, queue=C.Var(q), kind="reject"))
            call = C.Call(pos=pos, dst=None, callee=ex, this=C.LIT_UNDEF, args=(C.Var(res), C.Var(rej)))
            self.emit(C.Guard(pos=pos, queue=C.Var(q), body=[call]))
            return C.Var(q)
        if name in _ERROR_CTORS:
            msg = self.lower(e.args[0]) if e.args else C.Lit("")
            t = self.target(dst)
            self.emit(C.NewObj(pos=pos, dst=t, alloc=pos.site(), props=(("name", C.Lit(name)), ("message", msg))))
            return C.Var(t)
        if name is not None:
            atoms = tuple(self.lower(a) for a in e.args)
            self.diagnostics.append(f"{pos.site()}: unknown constructor {name!r} treated as havoc")
            t = self.target(dst)
            self.emit(C.Havoc(pos=pos, dst=t, name="new " + name, args=atoms))
            return C.Var(t)
        f = self.lower(e.callee)
        args = tuple(self.lower(a) for a in e.args)
        t = self.target(dst)
        self.emit(C.NewObj(pos=pos, dst=t, alloc=pos.site(), props=()))
        self.emit(C.Call(pos=pos, dst=None, callee=f, this=C.Var(t), args=args))
        return C.Var(t)

    # ---------------------------------------------------------- intrinsics
    def lower_intrinsic(self, e: S.Call, op: str, dst, discard: bool = False) -> C.Atom:
        pos = e.pos
        a = e.args

        def atoms(xs):
            return tuple(self.lower(x) for x in xs)

        def need(n):
            if len(a) < n:
                raise DesugarError(f"$q.{op} needs {n} operands", pos.line, pos.col)

        def name_arg(x) -> str:
            if not isinstance(x, S.Str):
                raise DesugarError(f"$q.{op} needs a string literal", pos.line, pos.col)
            return x.value

        if op == "newQ":
            tag = "#" + name_arg(a[0]) if a else ""
            t = self.target(dst)
            self.emit(C.NewQ(pos=pos, dst=t, alloc=pos.site() + tag))
            return C.Var(t)
        if op in ("fulfill", "reject"):
            need(2)
            q, v = atoms(a[:2])
            self.emit(C.Settle(pos=pos, kind=op, queue=q, value=v))
            return self.undef_result(dst, pos)
        if op in ("registerFul", "registerRej"):
            need(3)
            ops = atoms(a)
            receiver = ops[3] if len(ops) > 3 else C.LIT_UNDEF
            kind = "fulfill" if op == "registerFul" else "reject"
            self.emit(C.Register(pos=pos, kind=kind, queue=ops[0], callback=ops[1], dep=ops[2],
                                 receiver=receiver, extras=tuple(ops[4:])))
            return self.undef_result(dst, pos)
        if op == "settleFn":
            need(2)
            q = self.lower(a[0])
            kind = name_arg(a[1])
            t = self.target(dst)
            self.emit(C.SettleFn(pos=pos, dst=t, queue=q, kind=kind))
            return C.Var(t)
        if op == "append":
            need(1)
            self.emit(C.Append(pos=pos, queue=self.lower(a[0])))
            return self.undef_result(dst, pos)
        if op == "pop":
            self.emit(C.Pop(pos=pos))
            return self.undef_result(dst, pos)
        if op in ("addTimerCallback", "addIOCallback"):
            need(1)
            ops = atoms(a)
            kind = "timer" if op == "addTimerCallback" else "io"
            self.emit(C.AddCallback(pos=pos, kind=kind, callback=ops[0], extras=tuple(ops[1:])))
            return self.undef_result(dst, pos)
        if op == "eventLoop":
            if self.fn.fn_id != "main":
                raise DesugarError("the event loop may only appear at top level", pos.line, pos.col)
            self.emit(C.EventLoop(pos=pos))
            return self.undef_result(dst, pos)
        if op == "call":
            need(2)
            ops = atoms(a)
            t = None if discard and dst is None else self.target(dst)
            self.emit(C.Call(pos=pos, dst=t, callee=ops[0], this=ops[1], args=tuple(ops[2:])))
            return C.Var(t) if t is not None else C.LIT_UNDEF
        if op == "model":
            need(1)
            name = name_arg(a[0])
            if self.models.get(name) is None:
                raise DesugarError(f"unknown model {name!r}", pos.line, pos.col)
            self.emit(C.ModelCall(pos=pos, model=name, args=atoms(a[1:])))
            return self.undef_result(dst, pos)
        if op == "havoc":
            need(1)
            name = name_arg(a[0])
            self.emit(C.Havoc(pos=pos, dst=dst, name=name, args=atoms(a[1:])))
            return C.Var(dst) if dst is not None else C.LIT_UNDEF
        raise DesugarError(f"unknown intrinsic $q.{op}", pos.line, pos.col)


def desugar(program: S.SurfaceProgram, models: Optional[ModelRegistry] = None) -> C.CoreProgram:
    """Lower a parsed program to the core IR."""
    return Desugarer(program, models).run()


def compile_source(source: str, models: Optional[ModelRegistry] = None,
                   intrinsics: bool = False) -> C.CoreProgram:
    return desugar(S.parse(source, intrinsics=intrinsics), models)
