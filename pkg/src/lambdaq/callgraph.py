"""Callback graphs: which callback may run immediately after which.

Nodes are (context, function) pairs.  The graph is kept acyclic: an edge
that would close a cycle is dropped and the attempt is recorded in
``diagnostics``, so the two endpoints stay unordered.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .domain import NO_CONTEXT, Context


@dataclass(frozen=True)
class CGNode:
    context: Context
    fn: str
    label: str = field(default="", compare=False)

    def sort_key(self):
        return (self.label or self.fn, self.fn, self.context.sort_key())

    def __str__(self) -> str:
        ctx = str(self.context)
        return self.fn if ctx == "-" else f"{self.fn}{ctx}"


class CallbackGraph:
    def __init__(self):
        self._nodes: dict[CGNode, CGNode] = {}
        self._succ: dict[CGNode, set] = {}
        self.diagnostics: list[str] = []
        self._closure = None

    # ------------------------------------------------------------ building
    def add_node(self, n: CGNode) -> CGNode:
        if n not in self._nodes:
            self._nodes[n] = n
            self._succ[n] = set()
            self._closure = None
        return self._nodes[n]

    def add_edge(self, a: CGNode, b: CGNode) -> bool:
        """Insert a -> b unless it closes a cycle; return whether it was inserted."""
        a, b = self.add_node(a), self.add_node(b)
        if b in self._succ[a]:
            return True
        if a == b or self.reaches(b, a):
            self.diagnostics.append(f"dropped edge {a} -> {b}: it would close a cycle")
            return False
        self._succ[a].add(b)
        self._closure = None
        return True

    # ------------------------------------------------------------- queries
    @property
    def nodes(self) -> list:
        return sorted(self._nodes, key=CGNode.sort_key)

    @property
    def edges(self) -> list:
        return sorted(
            ((a, b) for a, s in self._succ.items() for b in s),
            key=lambda e: (e[0].sort_key(), e[1].sort_key()),
        )

    def __contains__(self, n: CGNode) -> bool:
        return n in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def successors(self, n: CGNode) -> set:
        return set(self._succ.get(n, ()))

    def _reach_sets(self) -> dict:
        """Bitset transitive closure, computed in reverse topological order."""
        if self._closure is not None:
            return self._closure
        order = self.nodes
        index = {n: i for i, n in enumerate(order)}
        reach = [0] * len(order)
        state: dict = {}
        post: list = []
        for root in order:
            if root in state:
                continue
            stack = [(root, iter(sorted(self._succ[root], key=CGNode.sort_key)))]
            state[root] = 1
            while stack:
                n, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    stack.pop()
                    post.append(n)
                    continue
                if nxt not in state:
                    state[nxt] = 1
                    stack.append((nxt, iter(sorted(self._succ[nxt], key=CGNode.sort_key))))
        for n in post:
            bits = 0
            for s in self._succ[n]:
                bits |= (1 << index[s]) | reach[index[s]]
            reach[index[n]] = bits
        self._closure = (index, reach)
        return self._closure

    def reaches(self, a: CGNode, b: CGNode) -> bool:
        """Whether b is reachable from a along at least one edge."""
        if a not in self._nodes or b not in self._nodes:
            return False
        index, reach = self._reach_sets()
        return bool(reach[index[a]] >> index[b] & 1)

    def ordered(self, a: CGNode, b: CGNode) -> bool:
        return self.reaches(a, b) or self.reaches(b, a)

    def precision_fraction(self) -> Fraction:
        n = len(self._nodes)
        if n < 2:
            return Fraction(1)
        index, reach = self._reach_sets()
        ordered = sum(bin(r).count("1") for r in reach)  # each ordered pair counted once
        return Fraction(ordered, n * (n - 1) // 2)

    def precision(self) -> float:
        return float(self.precision_fraction())

    # ------------------------------------------------------------- output
    def _ids(self) -> dict:
        return {n: f"n{i}" for i, n in enumerate(self.nodes)}

    def to_json(self) -> dict:
        ids = self._ids()
        return {
            "nodes": [{"id": ids[n], "fn": n.fn, "context": str(n.context)} for n in self.nodes],
            "edges": [[ids[a], ids[b]] for a, b in self.edges],
        }

    def to_json_text(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def to_dot(self) -> str:
        ids = self._ids()
        lines = ["digraph callbacks {"]
        for n in self.nodes:
            label = str(n).replace('"', '\\"')
            lines.append(f'  {ids[n]} [label="{label}"];')
        for a, b in self.edges:
            lines.append(f"  {ids[a]} -> {ids[b]};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def brute_force_precision(nodes: list, edges: list) -> Fraction:
    """All-pairs reachability by repeated relaxation; reference for tests."""
    n = len(nodes)
    if n < 2:
        return Fraction(1)
    idx = {x: i for i, x in enumerate(nodes)}
    r = [[False] * n for _ in range(n)]
    for a, b in edges:
        r[idx[a]][idx[b]] = True
    for k in range(n):
        for i in range(n):
            if r[i][k]:
                for j in range(n):
                    if r[k][j]:
                        r[i][j] = True
    ordered = sum(1 for i in range(n) for j in range(i + 1, n) if r[i][j] or r[j][i])
    return Fraction(ordered, n * (n - 1) // 2)


def node(fn: str, context: Context = NO_CONTEXT, label: str = "") -> CGNode:
    return CGNode(context, fn, label)
