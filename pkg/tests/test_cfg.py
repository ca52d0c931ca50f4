from lambdaq.cfg import build_cfg
from lambdaq.desugar import compile_source

SRC = (
    "function f(k){ try { k(); } catch (e) { e = 1; } "
    "if (k) { k = 2; } else { k = 3; } while (k) { k = 0; } }\nf(f);"
)


def _fn(cfg, name):
    return next(g for g in cfg.functions.values() if g.name == name)


def _ops(g):
    return {n.id: type(n.instr).__name__ for n in g.nodes.values()}


def test_structure_of_try_if_while():
    g = _fn(build_cfg(compile_source(SRC)), "f")
    ops = _ops(g)
    labels = {lab for _, _, lab in g.edges}
    assert labels == {"normal", "exception", "true", "false"}
    (call,) = [i for i, op in ops.items() if op == "Call"]
    handler = g.next(call, "exception")
    assert ops[handler] == "CatchBind"
    branches = [i for i, op in ops.items() if op == "Branch"]
    assert len(branches) == 2
    # the loop branch exits to the function exit on false
    assert g.exit in [d for b in branches for d, lab in g.succ(b) if lab == "false"]


def test_pred_succ_consistent():
    g = _fn(build_cfg(compile_source(SRC)), "f")
    for s, d, lab in g.edges:
        assert (d, lab) in g.succ(s)
        assert (s, lab) in g.pred(d)


def test_uncaught_call_edges_to_raise_exit():
    cfg = build_cfg(compile_source(SRC))
    m = cfg.main
    (call,) = [n.id for n in m.nodes.values() if type(n.instr).__name__ == "Call"]
    assert m.next(call, "exception") == m.raise_exit


def test_captured_variables_live_on_heap():
    cfg = build_cfg(compile_source("var a = 1; var b = 2; function f(){ return a; } setTimeout(f, 0);"))
    assert cfg.captured["main"] == {"a"}
    assert cfg.is_heap_var("main", "a")
    assert not cfg.is_heap_var("main", "b")
    f = _fn(cfg, "f")
    assert cfg.declaring(f.fn_id, "a") == "main"
    assert cfg.declaring(f.fn_id, "nope") is None


def test_json_lists_every_function():
    cfg = build_cfg(compile_source(SRC))
    doc = cfg.to_json()
    assert {f["id"] for f in doc["functions"]} == set(cfg.functions)
    for f in doc["functions"]:
        ids = {n["id"] for n in f["nodes"]}
        assert {f["entry"], f["exit"], f["raiseExit"]} <= ids
        assert all(s in ids and d in ids for s, d, _ in f["edges"])
