"""Randomized lattice laws, transfer monotonicity, and graph precision checks."""

from hypothesis import given, settings
from hypothesis import strategies as st
from properties import (
    chain_leq, check_dispatch_monotone, check_leq_implies_covered, check_lattice, check_precision, check_register_monotone,
    check_settle_monotone, check_unop_monotone, check_value_ops_monotone,
)
from strategies import (
    FNS, SITES, callback_sets, chains, objects, queue_objects, scheduled_lists, site_sets, states,
    timer_sets, values,
)

from lambdaq.domain import join_chain, join_states, leq_states

N = 150


def _join(a, b):
    return a.join(b)


def _leq(a, b):
    return a.leq(b)


@settings(max_examples=N)
@given(values, values, values)
def test_value_lattice(a, b, c):
    check_lattice(a, b, c, _join, _leq)


@settings(max_examples=N)
@given(objects, objects, objects)
def test_object_lattice(a, b, c):
    check_lattice(a, b, c, _join, _leq)


@settings(max_examples=N)
@given(queue_objects(), queue_objects(), queue_objects())
def test_queue_object_lattice(a, b, c):
    check_lattice(a, b, c, _join, _leq)


@settings(max_examples=N)
@given(scheduled_lists(), scheduled_lists(), scheduled_lists())
def test_scheduled_list_lattice(a, b, c):
    check_lattice(a, b, c, _join, _leq)


@settings(max_examples=N)
@given(timer_sets(), timer_sets(), timer_sets())
def test_timer_set_lattice(a, b, c):
    check_lattice(a, b, c, _join, _leq)


@settings(max_examples=N)
@given(chains, chains, chains)
def test_chain_lattice(a, b, c):
    check_lattice(a, b, c, join_chain, chain_leq)


@settings(max_examples=N, deadline=None)
@given(states(), states(), states())
def test_state_lattice(a, b, c):
    check_lattice(a, b, c, _join, _leq)


@settings(max_examples=N, deadline=None)
@given(states(), states())
def test_join_is_covering(a, b):
    check_leq_implies_covered(a, b)


@settings(max_examples=N, deadline=None)
@given(scheduled_lists(), scheduled_lists())
def test_scheduled_list_join_is_covering(a, b):
    check_leq_implies_covered(a, b)


@settings(max_examples=50, deadline=None)
@given(states())
def test_bottom_state_is_identity(s):
    assert join_states(None, s) is s
    assert join_states(s, None) is s
    assert leq_states(None, s)
    assert not leq_states(s, None)


@settings(max_examples=20, deadline=None)
@given(st.lists(states(), min_size=1, max_size=40))
def test_ascending_chain_stabilizes(ss):
    acc = None
    grew = 0
    for s in ss * 3:
        nxt = join_states(acc, s)
        if acc is None or nxt != acc:
            grew += 1
        acc = nxt
    # after one pass every further join is a no-op
    assert grew <= len(ss)


# ------------------------------------------------------------ monotonicity

kinds = st.sampled_from(["fulfill", "reject"])
targets = st.frozensets(st.sampled_from(SITES), min_size=1, max_size=2)
singletons = st.frozensets(st.sampled_from(SITES))


@settings(max_examples=N, deadline=None)
@given(states(), states(), targets, kinds, values, values, singletons)
def test_settle_monotone(s, t, tg, kind, v, w, single):
    check_settle_monotone(s, t, tg, kind, v, w, single)


@settings(max_examples=N, deadline=None)
@given(states(), states(), targets, callback_sets, kinds, singletons)
def test_register_monotone(s, t, tg, cbs, kind, single):
    check_register_monotone(s, t, tg, cbs, kind, single)


@settings(max_examples=N, deadline=None)
@given(states(), states())
def test_dispatch_monotone(s, t):
    check_dispatch_monotone(s, t)


binops = st.sampled_from(["+", "-", "*", "<", "===", "!==", "==", "!="])


@settings(max_examples=N)
@given(binops, values, values, values, values)
def test_binop_monotone(op, a, b, a2, b2):
    check_value_ops_monotone(op, a, b, a2, b2)


@settings(max_examples=N)
@given(st.sampled_from(["!", "-", "typeof"]), values, values)
def test_unop_monotone(op, a, a2):
    check_unop_monotone(op, a, a2)


# --------------------------------------------------------------- precision

graphs = st.integers(0, 12).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(st.tuples(st.integers(0, max(n - 1, 0)), st.integers(0, max(n - 1, 0))), max_size=20)
        if n else st.just([]),
    )
)


@settings(max_examples=N, deadline=None)
@given(graphs)
def test_precision_matches_brute_force(g):
    check_precision(*g)


def test_fns_universe_nonempty():
    assert FNS and site_sets is not None
