"""Data model for rooted directed semantic graphs and their indexed-tree view."""

from __future__ import annotations

from dataclasses import dataclass, field

Edge = tuple  # (source var, relation, target var)
Attribute = tuple  # (var, relation, constant)


@dataclass(frozen=True)
class AmrGraph:
    """A rooted, directed, labeled concept graph.

    ``nodes`` is a sequence of (variable, concept) pairs, ``edges`` holds
    (source, relation, target) triples over variables, and ``attributes``
    holds (variable, relation, constant) triples whose constant is kept
    verbatim (quoted string, number, ``-``, ...).  Relation labels are
    opaque strings; ``-of`` inversions are never normalized.
    """

    root: str
    nodes: tuple = ()
    edges: tuple = ()
    attributes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(tuple(n) for n in self.nodes))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        object.__setattr__(self, "attributes", tuple(tuple(a) for a in self.attributes))

    @property
    def variables(self) -> set:
        return {v for v, _ in self.nodes}

    def concept(self, var: str) -> str:
        for v, c in self.nodes:
            if v == var:
                return c
        raise KeyError(var)

    def concepts(self) -> dict:
        return {v: c for v, c in self.nodes}

    def outgoing(self, var: str) -> list:
        return [e for e in self.edges if e[0] == var]

    def incoming(self, var: str) -> list:
        return [e for e in self.edges if e[2] == var]

    def attributes_of(self, var: str) -> list:
        return [a for a in self.attributes if a[0] == var]


def validate_graph(g: AmrGraph) -> list:
    """Check AmrGraph invariants; return one description per violation.

    An empty list means the graph is well formed.  Cycles are not
    rejected here: they are representable in the codec and are refused
    only where a spanning tree is actually required (graph_to_tree).
    """
    problems = []
    if not g.nodes:
        return ["graph has no nodes"]
    seen = set()
    for v, _ in g.nodes:
        if v in seen:
            problems.append(f"duplicate variable {v!r}")
        seen.add(v)
    if g.root not in seen:
        problems.append(f"root {g.root!r} is not a node")
    for s, rel, t in g.edges:
        if s not in seen:
            problems.append(f"dangling edge source {s!r} ({rel})")
        if t not in seen:
            problems.append(f"dangling edge target {t!r} ({rel})")
        if s == t:
            problems.append(f"self-loop on {s!r} ({rel})")
    for v, rel, _ in g.attributes:
        if v not in seen:
            problems.append(f"attribute {rel!r} on unknown variable {v!r}")
    if g.root in seen:
        # connectivity from the root, edges treated as undirected
        neigh = {}
        for s, _, t in g.edges:
            neigh.setdefault(s, set()).add(t)
            neigh.setdefault(t, set()).add(s)
        reached = {g.root}
        frontier = [g.root]
        while frontier:
            cur = frontier.pop()
            for nxt in neigh.get(cur, ()):
                if nxt not in reached:
                    reached.add(nxt)
                    frontier.append(nxt)
        for v in sorted(seen - reached):
            problems.append(f"node {v!r} unreachable from root")
    return problems


@dataclass(frozen=True)
class TreeNode:
    """One node of an indexed tree; duplicated reentrant nodes share ``index``."""

    node_id: int
    concept: str
    index: int
    attributes: tuple = ()  # (relation, constant); carried by originals only

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(tuple(a) for a in self.attributes))


@dataclass(frozen=True)
class IndexedTree:
    """A rooted tree of concept nodes, each carrying a positive index.

    Nodes that share an index denote one merged graph node; the first of
    them in pre-order is the original, the rest are copies.
    """

    root: int
    nodes: tuple = ()
    edges: tuple = ()  # (parent id, relation, child id)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))

    def node(self, node_id: int) -> TreeNode:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)

    def children(self, node_id: int) -> list:
        return [(rel, c) for p, rel, c in self.edges if p == node_id]

    def parent_edge(self, node_id: int):
        for p, rel, c in self.edges:
            if c == node_id:
                return (p, rel)
        return None


def validate_tree(t: IndexedTree) -> list:
    """Check IndexedTree invariants; return one description per violation."""
    problems = []
    if not t.nodes:
        return ["tree has no nodes"]
    ids = [n.node_id for n in t.nodes]
    if len(ids) != len(set(ids)):
        problems.append("duplicate node ids")
    id_set = set(ids)
    if t.root not in id_set:
        problems.append(f"root {t.root} is not a node")
    parents = {}
    for p, rel, c in t.edges:
        if p not in id_set or c not in id_set:
            problems.append(f"edge ({p},{rel},{c}) has unknown endpoint")
            continue
        if c in parents:
            problems.append(f"node {c} has multiple parents")
        parents[c] = p
    if t.root in parents:
        problems.append("root has a parent")
    # every non-root node needs a parent chain ending at the root
    for n in t.nodes:
        cur, hops = n.node_id, 0
        while cur != t.root and hops <= len(ids):
            if cur not in parents:
                problems.append(f"node {cur} detached from root")
                break
            cur = parents[cur]
            hops += 1
        if hops > len(ids):
            problems.append(f"cycle through node {n.node_id}")
    by_index = {}
    for n in t.nodes:
        if n.index < 1:
            problems.append(f"node {n.node_id} has non-positive index {n.index}")
        by_index.setdefault(n.index, set()).add(n.concept)
    for idx, concepts in sorted(by_index.items()):
        if len(concepts) > 1:
            problems.append(f"index {idx} carries distinct concepts {sorted(concepts)}")
    return problems
