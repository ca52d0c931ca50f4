"""Property checks shared by the property tests and the acceptance summary."""

from __future__ import annotations

from lambdaq.analysis import (
    abstract_binop, abstract_unop, dispatch, transfer_register, transfer_settle,
)
from lambdaq.callgraph import CallbackGraph, brute_force_precision, node
from lambdaq.domain import join_chain


def chain_leq(a, b) -> bool:
    return join_chain(a, b) == b


def check_lattice(a, b, c, join, leq) -> None:
    assert join(a, b) == join(b, a)
    assert join(join(a, b), c) == join(a, join(b, c))
    assert join(a, a) == a
    assert leq(a, a)
    ab = join(a, b)
    assert leq(a, ab) and leq(b, ab)
    if leq(a, c) and leq(b, c):
        assert leq(ab, c)
    if leq(a, b) and leq(b, a):
        assert a == b
    if leq(a, b) and leq(b, c):
        assert leq(a, c)


def check_settle_monotone(s, t, targets, kind, v, w, singletons) -> None:
    if v.is_bottom():
        return  # unreachable settle; the transfer is the identity
    big = s.join(t)
    out_small = transfer_settle(s, targets, kind, v, singletons)
    out_big = transfer_settle(big, targets, kind, v.join(w), singletons)
    assert out_small.covered_by(out_big)


def check_register_monotone(s, t, targets, cbs, kind, singletons) -> None:
    big = s.join(t)
    assert transfer_register(s, targets, cbs, kind, singletons).covered_by(
        transfer_register(big, targets, cbs, kind, singletons))


def check_dispatch_monotone(s, t) -> None:
    big = s.join(t)
    small_cands, small_term = dispatch(s)
    big_cands, big_term = dispatch(big)
    assert big_term or not small_term
    for cb, rem, _src in small_cands:
        covering = [r for c, r, _ in big_cands if c == cb]
        assert covering, f"{cb} dispatchable from the smaller state only"
        assert any(rem.covered_by(r) for r in covering)


def check_leq_implies_covered(a, b) -> None:
    big = a.join(b)
    assert a.covered_by(big) and b.covered_by(big)
    assert a.covered_by(a)


def check_value_ops_monotone(op, a, b, a2, b2) -> None:
    assert abstract_binop(op, a, b).leq(abstract_binop(op, a.join(a2), b.join(b2)))


def check_unop_monotone(op, a, a2) -> None:
    assert abstract_unop(op, a).leq(abstract_unop(op, a.join(a2)))


def check_precision(n: int, edges) -> None:
    g = CallbackGraph()
    ns = [node(f"f{i}") for i in range(n)]
    for x in ns:
        g.add_node(x)
    for i, j in edges:
        g.add_edge(ns[i], ns[j])
    assert g.precision_fraction() == brute_force_precision(ns, g.edges)
    for a in ns:
        assert not g.reaches(a, a)
        for b in ns:
            if g.reaches(a, b):
                assert not g.reaches(b, a)
                for c in ns:
                    if g.reaches(b, c):
                        assert g.reaches(a, c)
