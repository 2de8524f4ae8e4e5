"""Conversion between reentrant graphs and indexed trees, plus linearization.

A node with k incoming edges becomes one original tree node and k-1
copies that share its index; merging same-index nodes inverts the
conversion.  Linearization orders nodes by pre-order traversal with
children visited in ascending (relation label, concept label) order, so
role labels sort ARG0 before ARG1 before ARG2 and so on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .graph import AmrGraph, IndexedTree, TreeNode, validate_graph, validate_tree


class TransduceError(ValueError):
    pass


def _child_sort_key(g: AmrGraph):
    def key(edge):
        s, rel, t = edge
        return (rel, g.concept(t), t)
    return key


def graph_to_tree(g: AmrGraph) -> IndexedTree:
    """Unfold reentrancies into copies that share the original's index.

    Rejects cyclic graphs and graphs with nodes unreachable from the root
    along edge direction (no spanning tree exists for either).
    """
    problems = validate_graph(g)
    if problems:
        raise TransduceError("invalid graph: " + "; ".join(problems))

    key = _child_sort_key(g)
    index_of_var = {}
    nodes, edges = [], []
    on_stack = set()

    def visit(var, parent_id, relation):
        node_id = len(nodes)
        if var in index_of_var:
            # reentrant edge: attach a copy, do not expand it
            if var in on_stack:
                raise TransduceError(f"cycle through {var!r}: no spanning tree from the root")
            nodes.append(TreeNode(node_id, g.concept(var), index_of_var[var]))
            edges.append((parent_id, relation, node_id))
            return
        index_of_var[var] = len(index_of_var) + 1
        nodes.append(TreeNode(node_id, g.concept(var), index_of_var[var],
                              tuple((rel, const) for _, rel, const in g.attributes_of(var))))
        if parent_id is not None:
            edges.append((parent_id, relation, node_id))
        on_stack.add(var)
        for _, rel, tgt in sorted(g.outgoing(var), key=key):
            visit(tgt, node_id, rel)
        on_stack.remove(var)

    visit(g.root, None, None)
    if len(index_of_var) < len(g.nodes):
        missing = sorted(g.variables - set(index_of_var))
        raise TransduceError(f"nodes {missing} unreachable along edge direction: no spanning tree")
    return IndexedTree(root=0, nodes=nodes, edges=edges)


def tree_to_graph(t: IndexedTree) -> AmrGraph:
    """Merge identically indexed nodes and union their edges."""
    problems = validate_tree(t)
    if problems:
        raise TransduceError("invalid tree: " + "; ".join(problems))

    concept_by_index = {}
    for n in t.nodes:
        prev = concept_by_index.get(n.index)
        if prev is not None and prev != n.concept:
            raise TransduceError(
                f"index {n.index} carries both {prev!r} and {n.concept!r}")
        concept_by_index[n.index] = n.concept

    var_of = {idx: f"v{idx}" for idx in concept_by_index}
    nodes = [(var_of[idx], concept_by_index[idx]) for idx in sorted(concept_by_index)]
    node_by_id = {n.node_id: n for n in t.nodes}

    edges, seen = [], set()
    for p, rel, c in t.edges:
        triple = (var_of[node_by_id[p].index], rel, var_of[node_by_id[c].index])
        if triple[0] == triple[2]:
            raise TransduceError(f"merging creates a self-loop on index {node_by_id[p].index}")
        if triple not in seen:
            seen.add(triple)
            edges.append(triple)

    attributes, seen_attr = [], set()
    for n in t.nodes:
        for rel, const in n.attributes:
            triple = (var_of[n.index], rel, const)
            if triple not in seen_attr:
                seen_attr.add(triple)
                attributes.append(triple)

    root_var = var_of[node_by_id[t.root].index]
    return AmrGraph(root=root_var, nodes=nodes, edges=edges, attributes=attributes)


@dataclass
class LinearizedTarget:
    """Ordered node list with indices, head references, and copy sources.

    Positions are 1-based; ``heads[t-1] == 0`` points at the dummy root.
    ``sources`` entries are ("vocab", None), ("src", token position) or
    ("tgt", antecedent position), positions 1-based.
    """

    concepts: list
    indices: list
    heads: list
    labels: list
    sources: list = field(default_factory=list)

    def __len__(self):
        return len(self.concepts)


ROOT_LABEL = "root"


def linearize(t: IndexedTree, tokens=None, lemmas=None) -> LinearizedTarget:
    """Flatten a tree to the training target order.

    Pre-order traversal, children in ascending (relation, concept) order.
    Indices are renumbered so a new node's index equals its position and
    a copy carries its antecedent's position.  When source tokens are
    given, non-copy nodes matching a lowercased token or its lemma are
    tagged as source copies; otherwise they are tagged vocab.
    """
    problems = validate_tree(t)
    if problems:
        raise TransduceError("invalid tree: " + "; ".join(problems))

    node_by_id = {n.node_id: n for n in t.nodes}
    children = {}
    for p, rel, c in t.edges:
        children.setdefault(p, []).append((rel, c))
    for p in children:
        children[p].sort(key=lambda rc: (rc[0], node_by_id[rc[1]].concept, rc[1]))

    order = []
    def visit(node_id, rel, parent_pos):
        pos = len(order) + 1
        order.append((node_id, rel, parent_pos))
        for crel, cid in children.get(node_id, []):
            visit(cid, crel, pos)
    visit(t.root, ROOT_LABEL, 0)

    lowered = [tok.lower() for tok in tokens] if tokens else []
    lemma_list = list(lemmas) if lemmas is not None else lowered

    concepts, indices, heads, labels, sources = [], [], [], [], []
    first_pos_of_tree_index = {}
    for pos, (node_id, rel, parent_pos) in enumerate(order, start=1):
        node = node_by_id[node_id]
        concepts.append(node.concept)
        heads.append(parent_pos)
        labels.append(rel)
        if node.index in first_pos_of_tree_index:
            antecedent = first_pos_of_tree_index[node.index]
            indices.append(antecedent)
            sources.append(("tgt", antecedent))
        else:
            first_pos_of_tree_index[node.index] = pos
            indices.append(pos)
            src_pos = None
            for i, (low, lem) in enumerate(zip(lowered, lemma_list)):
                if node.concept == low or node.concept == lem:
                    src_pos = i + 1
                    break
            sources.append(("src", src_pos) if src_pos is not None else ("vocab", None))
    return LinearizedTarget(concepts, indices, heads, labels, sources)


def tree_as_graph(t: IndexedTree) -> tuple:
    """Render a tree as a one-variable-per-node graph plus pre-order indices.

    Variables are zero-padded so the codec's sorted traversal preserves
    the linearization order; the index list is aligned with it.
    """
    target = linearize(t)
    node_by_id = {n.node_id: n for n in t.nodes}
    order = []
    def visit(node_id):
        order.append(node_id)
        kids = sorted(((rel, cid) for p, rel, cid in t.edges if p == node_id),
                      key=lambda rc: (rc[0], node_by_id[rc[1]].concept, rc[1]))
        for _, cid in kids:
            visit(cid)
    visit(t.root)
    var_of = {nid: f"n{pos:04d}" for pos, nid in enumerate(order)}
    nodes = [(var_of[nid], node_by_id[nid].concept) for nid in order]
    edges = [(var_of[p], rel, var_of[c]) for p, rel, c in t.edges]
    attributes = [(var_of[n.node_id], rel, const)
                  for n in t.nodes for rel, const in n.attributes]
    return AmrGraph(root=var_of[t.root], nodes=nodes, edges=edges,
                    attributes=attributes), target.indices


def tree_from_graph_record(g: AmrGraph, indices) -> IndexedTree:
    """Inverse of tree_as_graph: reattach indices to a tree-shaped graph."""
    tree = graph_to_tree(g)
    if len(tree.nodes) != len(g.nodes):
        raise TransduceError("record is not tree-shaped (contains reentrancies)")
    if len(indices) != len(tree.nodes):
        raise TransduceError(f"{len(indices)} indices for {len(tree.nodes)} nodes")
    # graph_to_tree assigns node ids in the same sorted pre-order the
    # indices line was written in
    nodes = [TreeNode(n.node_id, n.concept, indices[n.node_id], n.attributes)
             for n in tree.nodes]
    return IndexedTree(root=tree.root, nodes=nodes, edges=tree.edges)


def delinearize(target: LinearizedTarget) -> IndexedTree:
    """Rebuild the indexed tree encoded by concepts/indices/heads/labels."""
    m = len(target.concepts)
    if m == 0:
        raise TransduceError("empty target")
    roots = [i for i in range(m) if target.heads[i] == 0]
    if len(roots) != 1:
        raise TransduceError(f"target must have exactly one root, found {len(roots)}")
    nodes = [TreeNode(i, target.concepts[i], target.indices[i]) for i in range(m)]
    edges = []
    for i in range(m):
        head = target.heads[i]
        if head == 0:
            continue
        if not (1 <= head <= m) or head == i + 1:
            raise TransduceError(f"position {i + 1} has invalid head {head}")
        edges.append((head - 1, target.labels[i], i))
    return IndexedTree(root=roots[0], nodes=nodes, edges=edges)
