from amrparse import AmrGraph, IndexedTree, TreeNode, validate_graph, validate_tree


def _fig1():
    return AmrGraph(root="h", nodes=[("h", "help"), ("v", "victim")],
                    edges=[("h", "ARG0", "v"), ("h", "ARG1", "v")])


def test_valid_graph_has_no_violations():
    assert validate_graph(_fig1()) == []


def test_dangling_edge_target():
    g = AmrGraph(root="a", nodes=[("a", "alpha")], edges=[("a", "ARG0", "zzz")])
    assert any("dangling edge target" in p for p in validate_graph(g))


def test_unreachable_component():
    g = AmrGraph(root="a", nodes=[("a", "alpha"), ("b", "beta")])
    assert any("unreachable" in p for p in validate_graph(g))


def test_duplicate_variable():
    g = AmrGraph(root="a", nodes=[("a", "alpha"), ("a", "beta")])
    assert any("duplicate" in p for p in validate_graph(g))


def test_self_loop():
    g = AmrGraph(root="a", nodes=[("a", "alpha")], edges=[("a", "mod", "a")])
    assert any("self-loop" in p for p in validate_graph(g))


def test_missing_root():
    g = AmrGraph(root="q", nodes=[("a", "alpha")])
    assert any("root" in p for p in validate_graph(g))


def test_undirected_connectivity_suffices():
    # b only has an outgoing edge to the root: still connected
    g = AmrGraph(root="a", nodes=[("a", "alpha"), ("b", "beta")],
                 edges=[("b", "ARG0", "a")])
    assert validate_graph(g) == []


def test_tree_valid():
    t = IndexedTree(root=0,
                    nodes=[TreeNode(0, "help", 1), TreeNode(1, "victim", 2),
                           TreeNode(2, "victim", 2)],
                    edges=[(0, "ARG0", 1), (0, "ARG1", 2)])
    assert validate_tree(t) == []


def test_tree_index_concept_conflict():
    t = IndexedTree(root=0,
                    nodes=[TreeNode(0, "help", 1), TreeNode(1, "victim", 1)],
                    edges=[(0, "ARG0", 1)])
    assert any("distinct concepts" in p for p in validate_tree(t))


def test_tree_multiple_parents():
    t = IndexedTree(root=0,
                    nodes=[TreeNode(0, "a", 1), TreeNode(1, "b", 2), TreeNode(2, "c", 3)],
                    edges=[(0, "x", 2), (1, "y", 2)])
    problems = validate_tree(t)
    assert any("multiple parents" in p for p in problems) or any("detached" in p for p in problems)
