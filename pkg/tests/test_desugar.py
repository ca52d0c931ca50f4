import json
from pathlib import Path

import pytest
from _util import SUITE

from lambdaq import core as C
from lambdaq.desugar import compile_source
from lambdaq.errors import DesugarError, ModelArityError

SUITE_FILES = sorted(Path(SUITE).glob("*.js"))


def _ops(prog, fn_id=None):
    fn = prog.functions[fn_id or prog.main]
    return [type(i).__name__ for i in C.walk(fn.body)]


def test_resolve_then():
    prog = compile_source("var p = Promise.resolve(1);\np.then(function f(v){ return v; });")
    ops = _ops(prog)
    assert ops.count("NewQ") == 2
    assert ops.count("Register") == 2  # fulfil handler plus default rejection
    assert ops[-1] == "EventLoop"
    text = C.pretty(prog)
    assert "$q.registerFul(p, $t1, $t2, undefined);" in text
    assert "$q.registerRej(p, $rethrow, $t2, undefined);" in text


def test_settimeout_lowers_to_timer_callback():
    prog = compile_source("setTimeout(function t(){}, 0);")
    (cb,) = [i for i in C.walk(prog.functions["main"].body) if isinstance(i, C.AddCallback)]
    assert cb.kind == "timer"


def test_model_call_needs_callback():
    with pytest.raises(ModelArityError, match="fs.open requires a callback"):
        compile_source('fs.open("a", "r", 0);')
    with pytest.raises(ModelArityError):
        compile_source("setTimeout();")


def test_unsupported_promise_combinator():
    with pytest.raises(DesugarError, match="Promise.all"):
        compile_source("Promise.all([]);")


def test_assignment_to_builtin_rejected():
    with pytest.raises(DesugarError, match="builtin"):
        compile_source("Promise.x = 1;")


def test_unknown_builtin_is_havoc_with_diagnostic():
    prog = compile_source("foo.bar();")
    assert any("unknown builtin" in d for d in prog.diagnostics)
    assert "Havoc" in _ops(prog)


def test_program_must_end_with_one_event_loop():
    with pytest.raises(DesugarError, match="event loop"):
        compile_source("var p = $q.newQ();", intrinsics=True)


def test_core_json_is_serializable():
    prog = compile_source("var p = Promise.resolve(1);")
    doc = C.core_to_json(prog)
    assert json.loads(json.dumps(doc)) == doc
    assert doc["main"] == "main"
    main = next(f for f in doc["functions"] if f["id"] == "main")
    assert [i["op"] for i in main["body"]][:2] == ["NewQ", "Settle"]


@pytest.mark.parametrize("path", SUITE_FILES, ids=lambda p: p.stem)
def test_pretty_round_trip(path):
    prog = compile_source(path.read_text())
    again = compile_source(C.pretty(prog), intrinsics=True)
    assert C.normalize(again) == C.normalize(prog)


def test_suite_is_nonempty():
    assert len(SUITE_FILES) >= 20
