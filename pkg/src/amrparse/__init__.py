"""Sentence-to-semantic-graph parsing toolkit.

Two-stage parsing: an extended pointer-generator decoder predicts the
node list, then a deep biaffine classifier scores edges which a
constrained maximum-spanning-arborescence search assembles into a
rooted graph.  Ships with its own float64 reverse-mode autodiff core,
PENMAN codec, Smatch scorer, and a training/parsing/evaluation CLI.
"""

from .autodiff import (AdamState, Tensor, adam_step, backward, clip_grad_norm,
                       grad_check, generator, no_grad)
from .config import Config, load_config, parse_config, render_config
from .corpus import CorpusRecord, read_corpus, read_corpus_text, write_corpus
from .graph import AmrGraph, IndexedTree, TreeNode, validate_graph, validate_tree
from .mst import brute_force_mst, constrained_mst, unconstrained_mst
from .penman import PenmanError, penman_decode, penman_encode
from .smatch import corpus_smatch, smatch, smatch_exact_oracle
from .stats import node_source_stats
from .transduce import (LinearizedTarget, delinearize, graph_to_tree, linearize,
                        tree_to_graph)

__version__ = "0.1.0"

__all__ = [
    "AdamState", "AmrGraph", "Config", "CorpusRecord", "IndexedTree",
    "LinearizedTarget", "PenmanError", "Tensor", "TreeNode", "adam_step",
    "backward", "brute_force_mst", "clip_grad_norm", "constrained_mst",
    "corpus_smatch", "delinearize", "generator", "grad_check", "graph_to_tree",
    "linearize", "load_config", "no_grad", "node_source_stats", "parse_config",
    "penman_decode", "penman_encode", "read_corpus", "read_corpus_text",
    "render_config", "smatch", "smatch_exact_oracle", "tree_to_graph",
    "unconstrained_mst", "validate_graph", "validate_tree", "write_corpus",
]
