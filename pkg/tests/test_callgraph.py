from fractions import Fraction

from lambdaq.callgraph import CallbackGraph, brute_force_precision, node
from lambdaq.domain import Context

a, b, c, d = (node(x) for x in "abcd")


def test_empty_graph():
    g = CallbackGraph()
    assert g.precision() == 1.0
    assert g.to_json() == {"nodes": [], "edges": []}
    assert g.to_dot() == "digraph callbacks {\n}\n"


def test_single_node_is_fully_precise():
    g = CallbackGraph()
    g.add_node(a)
    assert g.precision() == 1.0


def test_four_nodes_half_ordered():
    g = CallbackGraph()
    g.add_edge(a, b)
    g.add_edge(b, c)
    g.add_node(d)
    assert g.precision_fraction() == Fraction(1, 2)
    assert g.reaches(a, c) and not g.reaches(c, a)
    assert not g.ordered(a, d)


def test_cycle_edges_are_dropped_with_diagnostic():
    g = CallbackGraph()
    assert g.add_edge(a, b)
    assert g.add_edge(b, c)
    assert not g.add_edge(c, a)
    assert not g.add_edge(a, a)
    assert len(g.diagnostics) == 2
    assert "c -> a" in g.diagnostics[0]
    assert (c, a) not in g.edges


def test_duplicate_edge_is_idempotent():
    g = CallbackGraph()
    g.add_edge(a, b)
    assert g.add_edge(a, b)
    assert len(g.edges) == 1 and not g.diagnostics


def test_contexts_distinguish_nodes():
    x = node("f", Context(("1:0", "2:0")))
    y = node("f", Context(("3:0", "4:0")))
    g = CallbackGraph()
    g.add_edge(x, y)
    assert len(g) == 2
    assert str(x) == "f(1:0,2:0)"


def test_json_and_dot_agree():
    g = CallbackGraph()
    g.add_edge(a, b)
    doc = g.to_json()
    assert doc["nodes"] == [{"id": "n0", "fn": "a", "context": "-"}, {"id": "n1", "fn": "b", "context": "-"}]
    assert doc["edges"] == [["n0", "n1"]]
    assert "n0 -> n1;" in g.to_dot()


def test_brute_force_reference():
    assert brute_force_precision([a, b, c], [(a, b), (b, c)]) == 1
    assert brute_force_precision([a, b, c], []) == 0
    assert brute_force_precision([a], []) == 1
