import numpy as np
import pytest

from amrparse import AmrGraph, penman_decode, smatch, smatch_exact_oracle
from amrparse.smatch import corpus_smatch, triples

from conftest import random_graph


def test_identical_graphs_score_one():
    g = penman_decode("(h / help :ARG0 (v / victim) :ARG1 v :polarity -)")
    result = smatch(g, g)
    assert result.f1 == 1.0
    assert result.precision == 1.0 and result.recall == 1.0


def test_disjoint_concepts_score_zero():
    g1 = penman_decode("(a / alpha :ARG0 (b / beta))")
    g2 = penman_decode("(c / gamma :ARG0 (d / delta))")
    assert smatch(g1, g2).f1 == 0.0


def test_triples_include_top():
    g = penman_decode("(a / alpha :ARG0 (b / beta))")
    t = triples(g)
    assert ("TOP", "a", "alpha") in t.attributes
    assert t.total() == 4  # 2 instances + 1 relation + TOP


def test_one_relabeled_edge_of_four_triples():
    g1 = penman_decode("(a / alpha :ARG0 (b / beta))")
    g2 = penman_decode("(a / alpha :ARG1 (b / beta))")
    # 3 of 4 triples match under the natural mapping
    assert smatch(g1, g2).f1 == pytest.approx(0.75)
    assert smatch_exact_oracle(g1, g2) == pytest.approx(0.75)


def test_symmetry():
    rng = np.random.default_rng(11)
    for _ in range(30):
        g1, g2 = random_graph(rng), random_graph(rng)
        assert smatch(g1, g2, seed=3).f1 == pytest.approx(smatch(g2, g1, seed=3).f1)


def test_hill_climb_matches_oracle_and_never_exceeds_it():
    rng = np.random.default_rng(12)
    for _ in range(60):
        g1, g2 = random_graph(rng), random_graph(rng)
        got = smatch(g1, g2, restarts=4, seed=7).f1
        oracle = smatch_exact_oracle(g1, g2)
        assert got <= oracle + 1e-12
        assert got == pytest.approx(oracle)


def test_monotone_under_matched_triple_addition():
    g1 = penman_decode("(a / alpha :ARG0 (b / beta))")
    g2 = penman_decode("(a / alpha :ARG1 (b / beta))")
    base = smatch(g1, g2).f1
    g1b = AmrGraph(root=g1.root, nodes=g1.nodes, edges=g1.edges,
                   attributes=g1.attributes + (("a", "polarity", "-"),))
    g2b = AmrGraph(root=g2.root, nodes=g2.nodes, edges=g2.edges,
                   attributes=g2.attributes + (("a", "polarity", "-"),))
    assert smatch(g1b, g2b).f1 >= base


def test_oracle_guard():
    big = AmrGraph(root="v0", nodes=[(f"v{i}", "x") for i in range(9)],
                   edges=[(f"v{i}", "op", f"v{i+1}") for i in range(8)])
    with pytest.raises(ValueError):
        smatch_exact_oracle(big, big)


def test_corpus_smatch_micro_average():
    g1 = penman_decode("(a / alpha :ARG0 (b / beta))")
    g2 = penman_decode("(a / alpha :ARG1 (b / beta))")
    p, r, f1 = corpus_smatch([(g1, g1), (g1, g2)])
    assert p == pytest.approx((4 + 3) / 8)
    assert r == pytest.approx((4 + 3) / 8)
    assert f1 == pytest.approx((4 + 3) / 8)


def test_duplicate_triples_counted_as_multiset():
    g1 = penman_decode("(a / alpha :ARG0 (b / beta) :ARG0 b)")
    g2 = penman_decode("(a / alpha :ARG0 (b / beta))")
    result = smatch(g1, g2)
    assert result.matched == 4  # the duplicated edge matches only once
