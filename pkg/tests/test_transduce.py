import numpy as np
import pytest

from amrparse import (AmrGraph, delinearize, graph_to_tree, linearize, penman_decode,
                      smatch, tree_to_graph, validate_tree)
from amrparse.transduce import (TransduceError, tree_as_graph, tree_from_graph_record)

from conftest import random_graph

FIG1 = "(p / possible :ARG1 (h / help :ARG0 (v / victim) :ARG1 v))"


def test_reentrant_node_duplicated_with_shared_index():
    t = graph_to_tree(penman_decode(FIG1))
    assert validate_tree(t) == []
    victims = [n for n in t.nodes if n.concept == "victim"]
    assert len(victims) == 2
    assert victims[0].index == victims[1].index
    others = [n for n in t.nodes if n.concept != "victim"]
    assert len({n.index for n in others}) == len(others)


def test_chain_without_reentrancy_is_isomorphic():
    g = penman_decode("(a / alpha :ARG0 (b / beta :ARG0 (c / gamma)))")
    t = graph_to_tree(g)
    assert len(t.nodes) == 3
    assert len({n.index for n in t.nodes}) == 3


def test_three_incoming_edges_make_three_tree_nodes():
    g = penman_decode(
        "(a / alpha :ARG0 (x / waldo) :ARG1 (b / beta :ARG0 x) :ARG2 (c / gamma :ARG0 x))")
    t = graph_to_tree(g)
    waldos = [n for n in t.nodes if n.concept == "waldo"]
    assert len(waldos) == 3
    assert len({n.index for n in waldos}) == 1


def test_tree_node_count_matches_reentrancies():
    g = penman_decode(FIG1)
    t = graph_to_tree(g)
    reentrancies = sum(max(0, len(g.incoming(v)) - 1) for v in g.variables)
    assert len(t.nodes) == len(g.nodes) + reentrancies


def test_merge_recovers_fig1():
    g = penman_decode(FIG1)
    merged = tree_to_graph(graph_to_tree(g))
    assert smatch(merged, g).f1 == 1.0
    assert len(merged.nodes) == 3
    assert len(merged.edges) == 3


def test_all_distinct_indices_merge_to_same_shape():
    g = penman_decode("(a / alpha :ARG0 (b / beta) :mod (c / gamma))")
    merged = tree_to_graph(graph_to_tree(g))
    assert len(merged.nodes) == 3 and len(merged.edges) == 2


def test_same_index_concept_conflict_rejected():
    from amrparse import IndexedTree, TreeNode
    t = IndexedTree(root=0,
                    nodes=[TreeNode(0, "a", 1), TreeNode(1, "b", 2), TreeNode(2, "c", 2)],
                    edges=[(0, "x", 1), (0, "y", 2)])
    with pytest.raises(TransduceError, match="distinct concepts|carries both"):
        tree_to_graph(t)


def test_cyclic_graph_rejected():
    g = AmrGraph(root="a", nodes=[("a", "alpha"), ("b", "beta")],
                 edges=[("a", "x", "b"), ("b", "y", "a")])
    with pytest.raises(TransduceError, match="cycle"):
        graph_to_tree(g)


def test_directed_unreachable_rejected():
    g = AmrGraph(root="a", nodes=[("a", "alpha"), ("b", "beta")],
                 edges=[("b", "x", "a")])
    with pytest.raises(TransduceError, match="unreachable|spanning"):
        graph_to_tree(g)


def test_roundtrip_full_fixture(roundtrip_records):
    for rec in roundtrip_records:
        back = tree_to_graph(graph_to_tree(rec.graph))
        assert smatch(back, rec.graph).f1 == 1.0, rec.id


def test_linearize_fig1_order_and_indices():
    target = linearize(graph_to_tree(penman_decode(FIG1)))
    assert target.concepts == ["possible", "help", "victim", "victim"]
    assert target.indices == [1, 2, 3, 3]
    assert target.heads == [0, 1, 2, 2]
    assert target.labels == ["root", "ARG1", "ARG0", "ARG1"]


def test_linearize_single_node():
    target = linearize(graph_to_tree(penman_decode("(a / alpha)")))
    assert target.concepts == ["alpha"]
    assert target.heads == [0]
    assert target.indices == [1]


def test_children_visit_order_is_lexicographic():
    g = penman_decode("(a / alpha :ARG1 (b / beta) :ARG0 (c / gamma) :mod (d / delta))")
    target = linearize(graph_to_tree(g))
    assert target.concepts == ["alpha", "gamma", "beta", "delta"]
    assert target.labels == ["root", "ARG0", "ARG1", "mod"]


def test_preorder_property_on_fixture(roundtrip_records):
    for rec in roundtrip_records:
        target = linearize(graph_to_tree(rec.graph))
        for pos in range(1, len(target) + 1):
            assert target.heads[pos - 1] < pos


def test_copy_sources_from_tokens():
    g = penman_decode("(c / chase :ARG0 (d / dog) :ARG1 (c2 / cat))")
    target = linearize(graph_to_tree(g), tokens=["the", "Dog", "chased", "the", "cat"],
                       lemmas=["the", "dog", "chase", "the", "cat"])
    assert target.sources == [("src", 3), ("src", 2), ("src", 5)]


def test_delinearize_inverts_linearize():
    # delinearize carries no attributes: compare the node/edge structure
    rng = np.random.default_rng(7)
    for _ in range(100):
        g = random_graph(rng)
        bare = AmrGraph(root=g.root, nodes=g.nodes, edges=g.edges)
        t = graph_to_tree(bare)
        t2 = delinearize(linearize(t))
        assert smatch(tree_to_graph(t2), tree_to_graph(t)).f1 == 1.0


def test_index_rule_reconstructs_duplicate_sets(roundtrip_records):
    for rec in roundtrip_records:
        t = graph_to_tree(rec.graph)
        target = linearize(t)
        dup_positions = {}
        for pos, idx in enumerate(target.indices, start=1):
            dup_positions.setdefault(idx, []).append(pos)
        tree_dups = {}
        order = {n.node_id: i + 1 for i, n in enumerate(sorted(
            t.nodes, key=lambda n: n.node_id))}
        del order
        for idx, positions in dup_positions.items():
            assert positions[0] == idx  # first occurrence carries its own position
            tree_dups[idx] = len(positions)
        total = sum(tree_dups.values())
        assert total == len(t.nodes)


def test_tree_record_roundtrip(roundtrip_records):
    for rec in roundtrip_records:
        t = graph_to_tree(rec.graph)
        graph_form, indices = tree_as_graph(t)
        t2 = tree_from_graph_record(graph_form, indices)
        assert smatch(tree_to_graph(t2), rec.graph).f1 == 1.0
