import numpy as np
import pytest

from amrparse import AmrGraph, penman_decode, penman_encode, smatch
from amrparse.penman import PenmanError

from conftest import random_graph


def test_reentrant_reference_resolves_to_edges():
    g = penman_decode("(h / help :ARG0 (v / victim) :ARG1 v)")
    assert len(g.nodes) == 2
    assert set(g.edges) == {("h", "ARG0", "v"), ("h", "ARG1", "v")}
    assert g.root == "h"


def test_single_node():
    g = penman_decode("(a / alpha)")
    assert g.nodes == (("a", "alpha"),)
    assert g.edges == ()
    assert g.root == "a"


def test_truncated_input_is_a_syntax_error():
    with pytest.raises(PenmanError) as err:
        penman_decode("(a / ")
    assert err.value.line == 1
    assert err.value.column is not None


def test_error_positions_inside_input():
    bad = "(a / alpha\n  :ARG0 )"
    with pytest.raises(PenmanError) as err:
        penman_decode(bad)
    lines = bad.splitlines()
    assert 1 <= err.value.line <= len(lines)
    assert 1 <= err.value.column <= len(lines[err.value.line - 1]) + 1


def test_duplicate_variable_definition():
    with pytest.raises(PenmanError, match="duplicate"):
        penman_decode("(a / alpha :ARG0 (a / beta))")


def test_undefined_variable_reference():
    with pytest.raises(PenmanError, match="undefined variable"):
        penman_decode("(a / alpha :ARG0 v2)")


def test_trailing_garbage_rejected():
    with pytest.raises(PenmanError, match="trailing"):
        penman_decode("(a / alpha) (b / beta)")


def test_attributes_parse_as_constants():
    g = penman_decode('(f / fear :polarity - :quant 3 :wiki "Fear_(film)" :mode imperative)')
    assert g.nodes == (("f", "fear"),)
    assert set(g.attributes) == {
        ("f", "polarity", "-"), ("f", "quant", "3"),
        ("f", "wiki", '"Fear_(film)"'), ("f", "mode", "imperative"),
    }


def test_forward_reference_resolves():
    g = penman_decode("(a / alpha :ARG0 b :ARG1 (b / beta))")
    assert ("a", "ARG0", "b") in g.edges
    assert ("a", "ARG1", "b") in g.edges


def test_encode_deterministic_and_invertible():
    g = penman_decode("(h / help :ARG0 (v / victim) :ARG1 v :time (d / day :quant 2))")
    text1 = penman_encode(g)
    text2 = penman_encode(g)
    assert text1 == text2
    again = penman_decode(text1)
    assert smatch(again, g).f1 == 1.0


def test_encode_emits_bare_token_for_reentrancy():
    g = penman_decode("(h / help :ARG0 (v / victim) :ARG1 v)")
    text = penman_encode(g)
    assert text.count("/ victim") == 1  # second mention is a bare variable


def test_encode_rejects_invalid_graph():
    bad = AmrGraph(root="a", nodes=[("a", "alpha"), ("b", "beta")],
                   edges=[("a", "ARG0", "c")])
    with pytest.raises(PenmanError):
        penman_encode(bad)


def test_variable_naming_first_letter_plus_counter():
    g = AmrGraph(root="x1", nodes=[("x1", "dog"), ("x2", "dog"), ("x3", "cat")],
                 edges=[("x1", "ARG0", "x2"), ("x1", "ARG1", "x3")])
    text = penman_encode(g)
    assert "(d / dog" in text and "(d2 / dog" in text and "(c / cat" in text


def test_fixture_corpus_roundtrip(roundtrip_records):
    # decode(encode(decode(x))) must equal decode(x) up to variable names
    for rec in roundtrip_records:
        text = penman_encode(rec.graph)
        again = penman_decode(text)
        assert len(again.nodes) == len(rec.graph.nodes)
        assert len(again.edges) == len(rec.graph.edges)
        assert len(again.attributes) == len(rec.graph.attributes)
        assert penman_encode(again) == text


def test_random_graph_roundtrip():
    rng = np.random.default_rng(20240811)
    for _ in range(150):
        g = random_graph(rng)
        again = penman_decode(penman_encode(g))
        assert smatch(again, g, restarts=2, seed=5).f1 == 1.0
