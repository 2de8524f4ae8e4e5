"""Shared fixtures: corpora, toy configurations, and one trained model."""

from pathlib import Path

import numpy as np
import pytest

from amrparse import AmrGraph, Config, read_corpus
from amrparse.training import fit

FIXTURES = Path(__file__).parent / "fixtures"


def small_config(**overrides) -> Config:
    """A desk-scale configuration; dims shrunk, Table-style defaults kept."""
    base = dict(
        word_dim=24, pos_dim=8, anon_dim=4, index_dim=8, char_dim=12,
        char_filters=20, enc_hidden=32, dec_hidden=64, attn_dim=64,
        edge_hidden=32, label_hidden=16, enc_vocab=200, dec_vocab=200,
        max_index=24, epochs=300, batch_size=32, lr=0.005, dropout=0.0,
        coverage_weight=1.0, patience=25, seed=11,
    )
    base.update(overrides)
    return Config(**base)


def tiny_config(**overrides) -> Config:
    """Gradient-check scale: hidden 32, everything else minimal."""
    base = dict(
        word_dim=6, pos_dim=3, anon_dim=2, index_dim=3, char_dim=4,
        char_filters=8, enc_hidden=16, dec_hidden=32, attn_dim=16,
        edge_hidden=8, label_hidden=8, enc_vocab=50, dec_vocab=50,
        max_index=12, epochs=5, batch_size=8, dropout=0.0,
        coverage_weight=1.0, seed=3,
    )
    base.update(overrides)
    return Config(**base)


def random_graph(rng: np.random.Generator, max_nodes: int = 6,
                 reentrancy: bool = True) -> AmrGraph:
    """A rooted connected graph over a tiny concept inventory."""
    concepts = ["alpha", "beta", "gamma", "delta", "epsi", "zeta"]
    labels = ["ARG0", "ARG1", "ARG2", "mod", "time", "poss"]
    n = int(rng.integers(1, max_nodes + 1))
    chosen = [concepts[int(rng.integers(len(concepts)))] for _ in range(n)]
    variables = [f"v{i}" for i in range(n)]
    nodes = list(zip(variables, chosen))
    edges = []
    for i in range(1, n):
        parent = int(rng.integers(0, i))
        edges.append((variables[parent], labels[int(rng.integers(len(labels)))], variables[i]))
    if reentrancy and n >= 3:
        for _ in range(int(rng.integers(0, 2))):
            a, b = rng.choice(n, size=2, replace=False)
            a, b = int(min(a, b)), int(max(a, b))  # edge toward the later node: stays acyclic
            edge = (variables[a], labels[int(rng.integers(len(labels)))], variables[b])
            if edge not in edges:
                edges.append(edge)
    attributes = []
    if rng.random() < 0.4:
        attributes.append((variables[int(rng.integers(n))], "quant",
                           str(int(rng.integers(1, 100)))))
    return AmrGraph(root=variables[0], nodes=nodes, edges=edges, attributes=attributes)


@pytest.fixture(scope="session")
def roundtrip_records():
    return read_corpus(FIXTURES / "roundtrip.amr", require_graph=True)


@pytest.fixture(scope="session")
def train32_records():
    return read_corpus(FIXTURES / "train32.amr", require_graph=True)


@pytest.fixture(scope="session")
def copyheavy_records():
    return read_corpus(FIXTURES / "copyheavy.amr", require_graph=True)


@pytest.fixture(scope="session")
def negation_records():
    return read_corpus(FIXTURES / "negation.amr", require_graph=True)


@pytest.fixture(scope="session")
def anonym_records():
    return read_corpus(FIXTURES / "anonym.amr", require_graph=True)


@pytest.fixture(scope="session")
def overfit(train32_records):
    """One shared training run on the 32-pair corpus (hidden 64, lambda 1)."""
    import time

    cfg = small_config()
    tic = time.monotonic()
    result = fit(train32_records, train32_records, cfg)
    result.seconds = time.monotonic() - tic
    return result
