"""One test per reduction rule of the concrete machine.

Each test drives a small intrinsic-mode program until the rule fires and
checks the whole queue-related part of the resulting configuration.
"""

from _util import Stepper, run_once

from lambdaq.machine import (
    FULFILLED, PENDING, REJECTED, Callback, CallbackBegin, PopRedex, RegisterRedex,
    Settle, SettleRedex, TypeErrorEvent, UncaughtException,
)
from lambdaq.values import BOT, L_IO, L_TIME, UNDEF

F = "function f(x) { return x; }\n"
G_ = "function g(x) { return x; }\n"


def reserved_untouched(c):
    for a in (L_TIME, L_IO):
        q = c.queues[a]
        assert (q.state, q.value, q.on_fulfill, q.on_reject) == (FULFILLED, BOT, [], [])


def user_queues(c) -> dict:
    return {a: q for a, q in c.queues.items() if a not in (L_TIME, L_IO)}


def cb(s: Stepper, fn: str, dep: str, args, on: str, receiver=UNDEF) -> Callback:
    return Callback(s.addr(dep), s.var(fn), tuple(args), receiver, s.addr(on))


# ----------------------------------------------------------------- js / newQ


def test_js_step():
    s = Stepper("var a = 1 + 2;\n")
    s.until("js", 2)
    c = s.c
    assert s.var("a") == 3
    assert (c.kappa, c.tau, c.chain, c.redexes) == ([], [], [], [])
    assert user_queues(c) == {}
    reserved_untouched(c)


def test_newQ():
    s = Stepper("var p = $q.newQ();\n")
    c = s.until("newQ")
    q = s.queue("p")
    assert (q.state, q.value, q.on_fulfill, q.on_reject, q.dependents) == (PENDING, None, [], [], [])
    assert list(user_queues(c)) == [s.addr("p")]
    assert (c.kappa, c.tau, c.chain, c.redexes) == ([], [], [], [])
    reserved_untouched(c)


# ------------------------------------------------------------------ settling


def test_fulfill_pending():
    s = Stepper(F + "var p = $q.newQ(); var d = $q.newQ();\n"
                "$q.registerFul(p, f, d); $q.fulfill(p, 1);\n")
    c = s.until("fulfill-pending")
    p = s.queue("p")
    assert (p.state, p.value, p.on_fulfill, p.on_reject) == (FULFILLED, 1, [], [])
    assert c.kappa == [cb(s, "f", "d", [1], "p")]
    assert s.queue("d").state == PENDING
    assert (c.tau, c.chain, c.redexes) == ([], [], [])


def test_fulfill_pending_bot_keeps_registered_args():
    s = Stepper(F + "var p = $q.newQ(); var d = $q.newQ();\n"
                "$q.registerFul(p, f, d, undefined, 7); $q.fulfill(p, $q.bot);\n")
    c = s.until("fulfill-pending-bot")
    p = s.queue("p")
    assert (p.state, p.value, p.on_fulfill, p.on_reject) == (FULFILLED, BOT, [], [])
    assert c.kappa == [cb(s, "f", "d", [7], "p")]
    assert (c.tau, c.chain, c.redexes) == ([], [], [])


def test_fulfill_settled_is_a_no_op():
    s = Stepper(F + "var p = $q.newQ(); var d = $q.newQ();\n"
                "$q.fulfill(p, 1); $q.registerFul(p, f, d); $q.fulfill(p, 2);\n")
    s.until("registerFul-fulfilled")
    before = (list(s.c.kappa), s.queue("p").state, s.queue("p").value)
    c = s.until("fulfill-settled")
    assert (list(c.kappa), s.queue("p").state, s.queue("p").value) == before
    assert s.queue("p").value == 1
    assert (c.tau, c.chain, c.redexes) == ([], [], [])


def test_fulfill_pend_pend_records_dependent():
    s = Stepper("var p = $q.newQ(); var v = $q.newQ(); $q.fulfill(p, v);\n")
    c = s.until("fulfill-pend-pend")
    assert s.queue("p").state == PENDING
    assert s.queue("v").state == PENDING
    assert s.queue("v").dependents == [s.addr("p")]
    assert s.queue("p").dependents == []
    assert (c.kappa, c.tau, c.chain, c.redexes) == ([], [], [], [])


def test_fulfill_pend_pend_then_cascade():
    s = Stepper(F + "var p = $q.newQ(); var v = $q.newQ(); var d = $q.newQ();\n"
                "$q.registerFul(p, f, d); $q.fulfill(p, v); $q.fulfill(v, 9);\n")
    s.until("fulfill-pend-pend")
    c = s.until("fulfill-pending", 1)
    # v settled first; the cascade to p is a pending redex
    assert s.queue("v").state == FULFILLED
    assert c.redexes == [SettleRedex("fulfill", s.addr("p"), 9)]
    c = s.until("fulfill-pending")
    assert (s.queue("p").state, s.queue("p").value) == (FULFILLED, 9)
    assert c.kappa == [cb(s, "f", "d", [9], "p")]


def test_fulfill_pend_ful_adopts_value():
    s = Stepper("var p = $q.newQ(); var v = $q.newQ(); $q.fulfill(v, 5); $q.fulfill(p, v);\n")
    c = s.until("fulfill-pend-ful")
    assert s.queue("p").state == PENDING
    assert c.redexes == [SettleRedex("fulfill", s.addr("p"), 5)]
    s.step()
    assert (s.queue("p").state, s.queue("p").value) == (FULFILLED, 5)
    assert s.c.redexes == []


def test_fulfill_pend_rej_adopts_rejection():
    s = Stepper("var p = $q.newQ(); var v = $q.newQ(); $q.reject(v, 5); $q.fulfill(p, v);\n")
    c = s.until("fulfill-pend-rej")
    assert c.redexes == [SettleRedex("reject", s.addr("p"), 5)]
    s.step()
    assert (s.queue("p").state, s.queue("p").value) == (REJECTED, 5)


def test_reject_pending():
    s = Stepper(F + G_ + "var p = $q.newQ(); var d = $q.newQ();\n"
                "$q.registerFul(p, f, d); $q.registerRej(p, g, d); $q.reject(p, 4);\n")
    c = s.until("reject-pending")
    p = s.queue("p")
    assert (p.state, p.value, p.on_fulfill, p.on_reject) == (REJECTED, 4, [], [])
    assert c.kappa == [cb(s, "g", "d", [4], "p")]
    assert (c.tau, c.chain, c.redexes) == ([], [], [])


def test_reject_pending_bot_keeps_registered_args():
    s = Stepper(G_ + "var p = $q.newQ(); var d = $q.newQ();\n"
                "$q.registerRej(p, g, d, undefined, 8); $q.reject(p, $q.bot);\n")
    c = s.until("reject-pending-bot")
    assert (s.queue("p").state, s.queue("p").value) == (REJECTED, BOT)
    assert c.kappa == [cb(s, "g", "d", [8], "p")]


def test_reject_settled_is_a_no_op():
    s = Stepper("var p = $q.newQ(); $q.reject(p, 1); $q.reject(p, 2); $q.fulfill(p, 3);\n")
    c = s.until("reject-settled")
    assert (s.queue("p").state, s.queue("p").value) == (REJECTED, 1)
    c = s.until("fulfill-settled")
    assert (s.queue("p").state, s.queue("p").value) == (REJECTED, 1)
    assert (c.kappa, c.tau, c.chain, c.redexes) == ([], [], [], [])


def test_reject_pend_pend_records_dependent():
    s = Stepper("var p = $q.newQ(); var v = $q.newQ(); $q.reject(p, v);\n")
    c = s.until("reject-pend-pend")
    assert s.queue("v").dependents == [s.addr("p")]
    assert s.queue("p").state == PENDING
    assert (c.kappa, c.tau, c.chain, c.redexes) == ([], [], [], [])


def test_reject_pend_rej():
    s = Stepper("var p = $q.newQ(); var v = $q.newQ(); $q.reject(v, 6); $q.reject(p, v);\n")
    c = s.until("reject-pend-rej")
    assert c.redexes == [SettleRedex("reject", s.addr("p"), 6)]
    s.step()
    assert (s.queue("p").state, s.queue("p").value) == (REJECTED, 6)


def test_reject_pend_ful():
    s = Stepper("var p = $q.newQ(); var v = $q.newQ(); $q.fulfill(v, 6); $q.reject(p, v);\n")
    c = s.until("reject-pend-ful")
    assert c.redexes == [SettleRedex("fulfill", s.addr("p"), 6)]
    s.step()
    assert (s.queue("p").state, s.queue("p").value) == (FULFILLED, 6)


# --------------------------------------------------------------- registering


def test_registerFul_pending():
    s = Stepper(F + "var p = $q.newQ(); var d = $q.newQ(); $q.registerFul(p, f, d, undefined, 3);\n")
    c = s.until("registerFul-pending")
    p = s.queue("p")
    assert p.on_fulfill == [cb(s, "f", "d", [3], "p")]
    assert p.on_reject == []
    assert (c.kappa, c.tau, c.chain, c.redexes) == ([], [], [], [])


def test_registerRej_pending():
    s = Stepper(G_ + "var p = $q.newQ(); var d = $q.newQ(); $q.registerRej(p, g, d);\n")
    c = s.until("registerRej-pending")
    assert s.queue("p").on_reject == [cb(s, "g", "d", [], "p")]
    assert s.queue("p").on_fulfill == []
    assert c.kappa == []


def test_registerFul_fulfilled_uses_settled_value():
    s = Stepper(F + "var p = $q.newQ(); var d = $q.newQ(); $q.fulfill(p, 42);\n"
                "$q.registerFul(p, f, d, undefined, 3);\n")
    c = s.until("registerFul-fulfilled")
    assert c.kappa == [cb(s, "f", "d", [42], "p")]
    assert (s.queue("p").on_fulfill, c.tau, c.chain, c.redexes) == ([], [], [], [])


def test_registerFul_fulfilled_bot_uses_extras():
    s = Stepper(F + "var p = $q.newQ(); var d = $q.newQ(); $q.fulfill(p, $q.bot);\n"
                "$q.registerFul(p, f, d, undefined, 3, 4);\n")
    c = s.until("registerFul-fulfilled-bot")
    assert c.kappa == [cb(s, "f", "d", [3, 4], "p")]


def test_registerRej_rejected_uses_settled_value():
    s = Stepper(G_ + "var p = $q.newQ(); var d = $q.newQ(); $q.reject(p, 13);\n"
                "$q.registerRej(p, g, d);\n")
    c = s.until("registerRej-rejected")
    assert c.kappa == [cb(s, "g", "d", [13], "p")]


def test_registerRej_rejected_bot_uses_extras():
    s = Stepper(G_ + "var p = $q.newQ(); var d = $q.newQ(); $q.reject(p, $q.bot);\n"
                "$q.registerRej(p, g, d, undefined, 5);\n")
    c = s.until("registerRej-rejected-bot")
    assert c.kappa == [cb(s, "g", "d", [5], "p")]


def test_register_on_other_outcome_is_a_no_op():
    s = Stepper(F + G_ + "var p = $q.newQ(); var r = $q.newQ(); var d = $q.newQ();\n"
                "$q.fulfill(p, 1); $q.reject(r, 2);\n"
                "$q.registerRej(p, g, d); $q.registerFul(r, f, d);\n")
    c = s.until("registerRej-fulfilled")
    assert c.kappa == []
    c = s.until("registerFul-rejected")
    assert (c.kappa, c.tau, c.redexes) == ([], [], [])


def test_registerFul_timer_io_bot():
    s = Stepper(F + "$q.addTimerCallback(f, 7);\n")
    s.until("registerFul-timer-io-bot")
    c = s.c
    assert c.tau == [Callback(L_TIME, s.var("f"), (7,), UNDEF, L_TIME)]
    assert (c.kappa, c.chain, c.redexes) == ([], [], [])
    reserved_untouched(c)


# ---------------------------------------------------- timers, I/O and chain


def test_add_timer_callback():
    s = Stepper(F + "$q.addTimerCallback(f, 1, 2);\n")
    c = s.until("add-timer-callback")
    assert c.redexes == [RegisterRedex("fulfill", L_TIME, s.var("f"), L_TIME, UNDEF, (1, 2))]
    assert (c.kappa, c.tau, c.chain) == ([], [], [])


def test_add_io_callback():
    s = Stepper(F + "$q.addIOCallback(f, 'data');\n")
    c = s.until("add-io-callback")
    assert c.redexes == [RegisterRedex("fulfill", L_IO, s.var("f"), L_IO, UNDEF, ("data",))]
    s.step()
    assert c.tau == [Callback(L_IO, s.var("f"), ("data",), UNDEF, L_IO)]
    reserved_untouched(c)


def test_append():
    s = Stepper("var p = $q.newQ(); var r = $q.newQ(); $q.append(p); $q.append(r);\n")
    c = s.until("append", 2)
    assert c.chain == [s.addr("r"), s.addr("p")]
    assert (c.kappa, c.tau, c.redexes) == ([], [], [])


def test_pop():
    s = Stepper("var p = $q.newQ(); var r = $q.newQ(); $q.append(p); $q.append(r); $q.pop();\n")
    c = s.until("pop")
    assert c.chain == [s.addr("p")]
    assert (s.queue("p").state, s.queue("r").state) == (PENDING, PENDING)


def test_error_rejects_chain_top():
    s = Stepper("var p = $q.newQ(); $guard (p) { throw 3; }\n")
    c = s.until("error")
    assert c.chain == []
    assert c.redexes == [SettleRedex("reject", s.addr("p"), 3)]
    s.step()
    assert (s.queue("p").state, s.queue("p").value) == (REJECTED, 3)


def test_error_inside_callback_rejects_dependent():
    s = Stepper("function h() { throw 'boom'; }\n"
                "var p = $q.newQ(); var d = $q.newQ(); $q.registerFul(p, h, d); $q.fulfill(p, 1);\n"
                "$q.eventLoop();\n")
    c = s.until("error")
    assert c.chain == []
    assert c.redexes == [SettleRedex("reject", s.addr("d"), "boom")]
    c = s.finish()
    assert (s.queue("d").state, s.queue("d").value) == (REJECTED, "boom")
    assert c.status == "done"


def test_uncaught_at_top_level():
    s = Stepper("throw 1;\n")
    c = s.until("uncaught")
    assert c.status == "uncaught"
    assert c.trace == [UncaughtException("1")]


# ---------------------------------------------------------------- event loop


def test_event_loop_dispatches_kappa_head():
    s = Stepper(F + G_ + "var p = $q.newQ(); var d = $q.newQ(); var e = $q.newQ();\n"
                "$q.registerFul(p, f, d); $q.registerFul(p, g, e); $q.fulfill(p, 1);\n"
                "$q.eventLoop();\n")
    c = s.until("event-loop")
    assert c.kappa == [cb(s, "g", "e", [1], "p")]
    assert c.chain == [s.addr("d")]
    assert c.frames[-1].kind == "callback"
    assert c.frames[-1].fn_id == s.var("f").fn_id
    assert isinstance(c.trace[-1], CallbackBegin) and c.trace[-1].source == "kappa"
    # the callback's return value fulfills its dependent, then the frame is popped
    c = s.until("fulfill-pending", 2)
    assert (s.queue("d").state, s.queue("d").value) == (FULFILLED, 1)
    assert c.redexes == [PopRedex()]
    s.until("pop")
    assert c.chain == []


def test_event_loop_timers_io_pick():
    s = Stepper(F + G_ + "$q.addTimerCallback(f); $q.addTimerCallback(g); $q.eventLoop();\n")
    s.until("registerFul-timer-io-bot", 2)
    while not s.c.at_loop:
        s.step()
    assert s.m.choices(s.c) == [0, 1]
    c = s.until("event-loop-timers-io", choice=1)
    assert c.tau == [Callback(L_TIME, s.var("f"), (), UNDEF, L_TIME)]
    assert c.chain == [L_TIME]
    assert c.frames[-1].fn_id == s.var("g").fn_id
    assert c.trace[-1].source == "tau" and c.trace[-1].kappa_len == 0


def test_event_loop_prefers_kappa_over_tau():
    s = Stepper(F + G_ + "var p = $q.newQ(); var d = $q.newQ();\n"
                "$q.addTimerCallback(f); $q.registerFul(p, g, d); $q.fulfill(p, 0);\n"
                "$q.eventLoop();\n")
    while not s.c.at_loop:
        s.step()
    assert s.m.choices(s.c) == []
    assert s.step() == "event-loop"
    assert s.c.frames[-1].fn_id == s.var("g").fn_id
    assert len(s.c.tau) == 1


def test_terminal():
    s = Stepper("$q.eventLoop();\n")
    c = s.until("terminal")
    assert c.status == "done" and c.terminal
    assert (c.kappa, c.tau, c.chain, c.frames) == ([], [], [], [])


def test_non_callable_then_handler_is_identity():
    t = run_once("var d = Promise.resolve(2).then(5);\n")
    assert t.callback_order() == ["$identity"]
    assert t.status == "done"
    assert [e.value for e in t.events if isinstance(e, Settle)] == ["2", "2"]


def test_non_callable_intrinsic_handler_raises():
    s = Stepper("var p = $q.newQ(); var d = $q.newQ(); $q.registerFul(p, 5, d);\n")
    c = s.until("uncaught")
    assert [e.error for e in c.trace if isinstance(e, TypeErrorEvent)] == ["CallNonFunction"]


RULE_TESTS = {
    "js": test_js_step,
    "newQ": test_newQ,
    "fulfill-pending": test_fulfill_pending,
    "fulfill-pending-bot": test_fulfill_pending_bot_keeps_registered_args,
    "fulfill-settled": test_fulfill_settled_is_a_no_op,
    "fulfill-pend-pend": test_fulfill_pend_pend_records_dependent,
    "fulfill-pend-ful": test_fulfill_pend_ful_adopts_value,
    "fulfill-pend-rej": test_fulfill_pend_rej_adopts_rejection,
    "reject-pending": test_reject_pending,
    "reject-pending-bot": test_reject_pending_bot_keeps_registered_args,
    "reject-settled": test_reject_settled_is_a_no_op,
    "reject-pend-pend": test_reject_pend_pend_records_dependent,
    "reject-pend-ful": test_reject_pend_ful,
    "reject-pend-rej": test_reject_pend_rej,
    "registerFul-pending": test_registerFul_pending,
    "registerFul-fulfilled": test_registerFul_fulfilled_uses_settled_value,
    "registerFul-fulfilled-bot": test_registerFul_fulfilled_bot_uses_extras,
    "registerFul-timer-io-bot": test_registerFul_timer_io_bot,
    "registerFul-rejected": test_register_on_other_outcome_is_a_no_op,
    "registerRej-pending": test_registerRej_pending,
    "registerRej-rejected": test_registerRej_rejected_uses_settled_value,
    "registerRej-rejected-bot": test_registerRej_rejected_bot_uses_extras,
    "registerRej-fulfilled": test_register_on_other_outcome_is_a_no_op,
    "append": test_append,
    "pop": test_pop,
    "error": test_error_rejects_chain_top,
    "uncaught": test_uncaught_at_top_level,
    "event-loop": test_event_loop_dispatches_kappa_head,
    "event-loop-timers-io": test_event_loop_timers_io_pick,
    "add-timer-callback": test_add_timer_callback,
    "add-io-callback": test_add_io_callback,
    "terminal": test_terminal,
}


def rules_confirmed() -> list:
    """Rules whose dedicated test passes and actually takes that rule."""
    ok = []
    for rule, test in RULE_TESTS.items():
        Stepper.fired = set()
        try:
            test()
            if rule in Stepper.fired:
                ok.append(rule)
        finally:
            Stepper.fired = None
    return ok


def test_rule_coverage():
    assert len(RULE_TESTS) >= 20
    assert rules_confirmed() == list(RULE_TESTS)
