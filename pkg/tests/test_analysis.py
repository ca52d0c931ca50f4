import pytest
from _util import SHARED_CALLBACK, run_analysis, suite_source

from lambdaq.analysis import (
    CALL_NON_FUNCTION, CONFIG_NAMES, PROPERTY_ON_NULLISH, AnalysisConfig, abstract_binop, abstract_unop,
    config_by_name, dispatch, make_context, transfer_register, transfer_settle,
)
from lambdaq.domain import (
    A_ANYBOOL, A_NULL, A_UNDEF, NO_CONTEXT, AbstractCallback, AbstractQueueObject, AbstractState, Context,
    ScheduledList, TimerSet, a_bool, a_num, a_str,
)
from lambdaq.errors import LambdaQError


def _fns(g):
    return sorted(n.fn.split("@")[0] for n in g.nodes)


def test_config_names():
    assert CONFIG_NAMES == ["NC-No", "NC-QR", "C-No", "C-QR"]
    assert config_by_name("C-QR", 5).lattice_bound == 5
    assert AnalysisConfig(False, True).name == "NC-QR"
    with pytest.raises(LambdaQError):
        config_by_name("C-XX")


def test_shared_cb_c_qr_is_linear():
    g = run_analysis(SHARED_CALLBACK, "C-QR").callback_graph
    assert len(g) == 6 and len(g.edges) == 5
    assert g.precision() == 1.0
    assert _fns(g).count("foo") == 3
    assert len({n.context for n in g.nodes if n.fn.startswith("foo")}) == 3


def test_shared_cb_nc_no_merges_foo():
    g = run_analysis(SHARED_CALLBACK, "NC-No").callback_graph
    (foo,) = [n for n in g.nodes if n.fn.startswith("foo")]
    others = [n for n in g.nodes if n.fn.split("@")[0] in ("ff1", "ff2")]
    assert len(others) == 2
    assert not any(g.reaches(foo, o) for o in others)
    assert g.precision() < 1


def test_shared_cb_nc_no_reports_unordered_pairs():
    res = run_analysis(SHARED_CALLBACK, "NC-No")
    assert any("may run in either order" in d for d in res.diagnostics)
    assert run_analysis(SHARED_CALLBACK, "C-QR").diagnostics == []


@pytest.mark.parametrize("config, n", [("NC-No", 1), ("NC-QR", 1), ("C-No", 0), ("C-QR", 0)])
def test_honoka(config, n):
    errs = run_analysis(suite_source("honoka"), config).type_errors
    assert [e.kind for e in errs] == [PROPERTY_ON_NULLISH] * n
    if n:
        assert errs[0].site == "16:16"


def test_empty_program():
    res = run_analysis("")
    assert len(res.callback_graph) == 0
    assert res.stats()["cgPrecision"] == 1.0
    assert res.type_errors == []


def test_direct_type_errors():
    errs = run_analysis("var o = null; o.x;").type_errors
    assert [(e.site, e.kind) for e in errs] == [("1:14", PROPERTY_ON_NULLISH)]
    errs = run_analysis("var f = 1; f();").type_errors
    assert [e.kind for e in errs] == [CALL_NON_FUNCTION]


def test_truthiness_refines_branches():
    assert run_analysis("var o = {}; if (o) { o.x; } var u; if (u) { u.y; }").type_errors == []


def test_stats_keys():
    assert set(run_analysis(SHARED_CALLBACK).stats()) == {
        "analyzedCallbacks", "cgPrecision", "typeErrors", "iterations", "wallMillis",
    }


def _cb(fn, site="q"):
    return AbstractCallback(fn=fn, dep="d", args=(), registered_on=site)


def _state(**queues):
    return AbstractState(env={}, heap={}, queues=queues, kappa=ScheduledList(), tau=TimerSet(), chain=())


def test_settle_schedules_registered_callbacks():
    st = _state(q=AbstractQueueObject(may_pending=True, on_fulfill=frozenset({_cb("f")})))
    out = transfer_settle(st, {"q"}, "fulfill", a_num(1), singletons={"q"})
    q = out.queues["q"]
    assert not q.may_pending and q.fulfilled == a_num(1)
    (pos,) = out.kappa.positions
    (scheduled,) = pos.cbs
    assert scheduled.fn == "f" and scheduled.args == (a_num(1),)


def test_weak_settle_keeps_pending():
    st = _state(q=AbstractQueueObject(may_pending=True), r=AbstractQueueObject(may_pending=True))
    out = transfer_settle(st, {"q", "r"}, "reject", A_NULL)
    assert out.queues["q"].may_pending and out.queues["q"].rejected == A_NULL


def test_register_on_settled_schedules():
    st = _state(q=AbstractQueueObject(may_pending=False, fulfilled=a_num(2)))
    out = transfer_register(st, {"q"}, frozenset({_cb("g", "")}), "fulfill", singletons={"q"})
    (pos,) = out.kappa.positions
    assert pos.definite
    assert next(iter(pos.cbs)).registered_on == "q"


def test_register_on_pending_records_callback():
    st = _state(q=AbstractQueueObject(may_pending=True))
    out = transfer_register(st, {"q"}, frozenset({_cb("g", "")}), "reject")
    assert {c.fn for c in out.queues["q"].on_reject} == {"g"}
    assert out.kappa.is_empty()


def test_dispatch_respects_definite_head():
    kappa = ScheduledList().append({_cb("a")}, definite=True).append({_cb("b")})
    st = _state().evolve(kappa=kappa, tau=TimerSet().add({_cb("t")}))
    cands, may_end = dispatch(st)
    assert [c.fn for c, _, _ in cands] == ["a"]
    assert not may_end


def test_dispatch_optional_head_lets_timers_run():
    kappa = ScheduledList().append({_cb("a")})
    st = _state().evolve(kappa=kappa, tau=TimerSet().add({_cb("t")}))
    cands, may_end = dispatch(st)
    assert [(c.fn, src) for c, _, src in cands] == [("a", "kappa"), ("t", "tau")]
    assert may_end


def test_make_context():
    cb = _cb("f", "r")
    assert make_context(cb, None, config_by_name("C-No")) == NO_CONTEXT
    assert make_context(cb, None, config_by_name("C-QR")) == Context(("r", "d"))
    assert make_context(cb, "x", config_by_name("NC-QR")) == Context(("x", "d"))


def test_value_operations():
    assert abstract_binop("+", a_num(1), a_num(2)) == a_num(3)
    assert abstract_binop("===", A_UNDEF, a_num(1)) == a_bool(False)
    assert abstract_binop("==", A_UNDEF, A_NULL) == a_bool(True)
    assert abstract_binop("<", a_num(1), a_num(1).join(a_num(2))) == A_ANYBOOL
    assert abstract_unop("typeof", a_str("x")) == a_str("string")
    assert abstract_unop("!", A_UNDEF) == a_bool(True)


def test_nullish_guard_refines_branches():
    src = "var o = null; if (Math.random() < 1) { o = {}; } if (o != null) { o.x; } if (o === null) { } else { o.y; }"
    assert run_analysis(src).type_errors == []


def test_typeof_guard_refines_branches():
    src = "var o; if (Math.random() < 1) { o = {}; } if (typeof o === \"object\") { o.x; }"
    assert run_analysis(src).type_errors == []
    src = "var f = 1; if (Math.random() < 1) { f = function g(){}; } if (typeof f === \"function\") { f(); }"
    assert run_analysis(src).type_errors == []


def test_unguarded_access_still_reported():
    src = "var o = null; if (Math.random() < 1) { o = {}; } if (o == 1) { o.x; } o.y;"
    assert [e.site for e in run_analysis(src).type_errors] == ["1:63", "1:70"]


def test_falsy_constants_prune_branches():
    assert run_analysis('var u; if (0) { u.x; } if ("") { u.y; } if (null) { u.z; }').type_errors == []
