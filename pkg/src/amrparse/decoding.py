"""Node-sequence search and the full two-stage parse pipeline.

Stage one decodes the node list with greedy or beam search over the full
outcome space (vocabulary, source copies, target copies); stage two
scores edges with the biaffine classifier over the winning hypothesis's
attentional vectors and runs the index-constrained maximum spanning
arborescence, then same-index nodes are merged back into a graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .biaffine import edge_label_scores, label_distribution
from .embedding import BOS, EOS, PAD, UNK, encoder_features, fallback_pos_tags
from .encdec import DecoderState, decoder_step, init_decoder, node_distribution
from .graph import AmrGraph, validate_graph
from .mst import MstError, constrained_mst, force_single_root
from .prepost import Tables, add_polarity, anonymize_pair, deanonymize, sense_transform, wikify
from .transduce import ROOT_LABEL, LinearizedTarget, delinearize, tree_to_graph

FALLBACK_CONCEPT = "amr-empty"


@dataclass
class Hypothesis:
    """One partial decode: emitted nodes plus the recurrent cursor."""

    concepts: list = field(default_factory=list)
    indices: list = field(default_factory=list)
    tags: list = field(default_factory=list)        # ("vocab"|"src"|"tgt", pos|None)
    pos_ids: list = field(default_factory=list)
    logp: float = 0.0
    state: DecoderState | None = None
    finished: bool = False

    def __len__(self):
        return len(self.concepts)


def _prev_embedding(model, hyp: Hypothesis):
    if not hyp.concepts:
        return model.step_embedding(None, BOS, 0)
    return model.step_embedding(
        hyp.concepts[-1], hyp.pos_ids[-1],
        min(hyp.indices[-1], model.cfg.max_index))


def _masked_probs(dist) -> np.ndarray:
    probs = dist.probs.copy()
    probs[PAD] = 0.0
    probs[BOS] = 0.0
    return probs


def _apply_outcome(model, hyp: Hypothesis, outcome, prob: float,
                   state: DecoderState, src_pos_ids, src_lemmas) -> Hypothesis:
    kind, pos = outcome
    new = Hypothesis(
        concepts=list(hyp.concepts), indices=list(hyp.indices),
        tags=list(hyp.tags), pos_ids=list(hyp.pos_ids),
        logp=hyp.logp + math.log(prob), state=state)
    step_number = len(hyp.concepts) + 1
    if kind == "vocab":
        if pos == EOS:
            new.finished = True
            return new
        new.concepts.append(model.vocabs.dec.token(pos))
        new.indices.append(step_number)
        new.tags.append(("vocab", None))
        new.pos_ids.append(UNK)
    elif kind == "src":
        new.concepts.append(src_lemmas[pos - 1])
        new.indices.append(step_number)
        new.tags.append(("src", pos))
        new.pos_ids.append(src_pos_ids[pos - 1])
    else:  # target copy
        new.concepts.append(hyp.concepts[pos - 1])
        new.indices.append(hyp.indices[pos - 1])
        new.tags.append(("tgt", pos))
        new.pos_ids.append(hyp.pos_ids[pos - 1])
    return new


def greedy_decode(model, enc, src_lemmas, src_pos_ids, max_len: int) -> Hypothesis:
    """Argmax over the full outcome space at each step; stops at EOS."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    with ad.no_grad():
        hyp = Hypothesis(state=init_decoder(model.params, model.cfg, enc))
        for _ in range(max_len):
            prev = _prev_embedding(model, hyp)
            step = decoder_step(model.params, model.cfg, hyp.state, prev, enc)
            dist = node_distribution(step, src_lemmas, hyp.concepts, hyp.indices,
                                     model.vocabs.dec.tokens)
            probs = _masked_probs(dist)
            best = int(np.argmax(probs))
            if probs[best] <= 0.0:
                break
            hyp = _apply_outcome(model, hyp, dist.outcomes[best], probs[best],
                                 hyp.state, src_pos_ids, src_lemmas)
            if hyp.finished:
                break
    return hyp


def _hyp_sort_key(h: Hypothesis):
    return (-h.logp, tuple(h.concepts))


def beam_decode(model, enc, src_lemmas, src_pos_ids, beam: int, max_len: int) -> Hypothesis:
    """Beam search over the outcome space; beam=1 reproduces greedy.

    Returns the completed hypothesis with the highest cumulative
    log-probability; ties prefer the lexicographically smaller concept
    sequence.  Hypotheses still alive at max_len are force-finished.
    """
    if beam < 1:
        raise ValueError("beam must be >= 1")
    with ad.no_grad():
        live = [Hypothesis(state=init_decoder(model.params, model.cfg, enc))]
        finished = []
        for _ in range(max_len):
            if not live:
                break
            candidates = []
            for hyp in live:
                state = hyp.state.clone()
                prev = _prev_embedding(model, hyp)
                step = decoder_step(model.params, model.cfg, state, prev, enc)
                dist = node_distribution(step, src_lemmas, hyp.concepts, hyp.indices,
                                         model.vocabs.dec.tokens)
                probs = _masked_probs(dist)
                top = np.argsort(-probs, kind="stable")[:beam]
                for oi in top:
                    if probs[oi] <= 0.0:
                        continue
                    candidates.append((hyp, dist.outcomes[oi], float(probs[oi]), state))
            candidates.sort(key=lambda c: -(c[0].logp + math.log(c[2])))
            live = []
            for hyp, outcome, p, state in candidates[:beam]:
                new = _apply_outcome(model, hyp, outcome, p, state,
                                     src_pos_ids, src_lemmas)
                (finished if new.finished else live).append(new)
        finished.extend(live)  # force-finish leftovers at max_len
    if not finished:
        return Hypothesis(state=None, finished=True)
    return min(finished, key=_hyp_sort_key)


@dataclass
class ParseInfo:
    fallback: bool = False
    multi_root: int = 0
    unresolved_anon: int = 0
    polarity_unmatched: int = 0


def _fix_multi_root(heads, indices, scores_sq):
    """Leave exactly one dummy-root child, preferring the exact rerun."""
    roots = [t + 1 for t, h in enumerate(heads) if h == 0]
    if len(roots) <= 1:
        return heads, 0
    try:
        return force_single_root(scores_sq, indices, heads), len(roots) - 1
    except MstError:
        pass
    # degenerate constraints: reattach extra roots to the first reachable spot
    heads = list(heads)
    keep = roots[0]
    for t in roots[1:]:
        subtree = {t}
        changed = True
        while changed:
            changed = False
            for u in range(1, len(heads) + 1):
                if u not in subtree and heads[u - 1] in subtree:
                    subtree.add(u)
                    changed = True
        for k in range(1, len(heads) + 1):
            if k not in subtree and indices[k - 1] != indices[t - 1]:
                heads[t - 1] = k
                break
    if sum(1 for h in heads if h == 0) != 1:
        heads = None  # caller falls back to the single-node graph
    return heads, len(roots) - 1


def hypothesis_to_graph(model, hyp: Hypothesis) -> tuple:
    """Stage two: biaffine scores, constrained MST, labels, node merging."""
    m = len(hyp.concepts)
    info = ParseInfo()
    if m == 0:
        info.fallback = True
        return AmrGraph(root="a", nodes=[("a", FALLBACK_CONCEPT)]), info, None

    with ad.no_grad():
        states = ad.stack_rows(hyp.state.stildes[:m])
        scores = edge_label_scores(model.params, model.cfg, states)
    sq = np.zeros((m + 1, m + 1))
    sq[:, 1:] = scores.edge.data
    heads = constrained_mst(sq, hyp.indices)
    heads, extra_roots = _fix_multi_root(heads, hyp.indices, sq)
    info.multi_root = extra_roots
    if heads is None:
        info.fallback = True
        return AmrGraph(root="a", nodes=[("a", FALLBACK_CONCEPT)]), info, None

    labels = []
    for t in range(1, m + 1):
        head = heads[t - 1]
        if head == 0:
            labels.append(ROOT_LABEL)
        else:
            label_id = int(np.argmax(label_distribution(scores, head, t)))
            labels.append(model.vocabs.labels.token(label_id))
    target = LinearizedTarget(list(hyp.concepts), list(hyp.indices), heads,
                              labels, list(hyp.tags))
    graph = tree_to_graph(delinearize(target))
    return graph, info, target


@dataclass
class ParseOutput:
    graph: AmrGraph
    tags: list            # (surface, kind) per emitted node
    info: ParseInfo


def decode_max_len(cfg, n_tokens: int) -> int:
    return cfg.decode_max_len if cfg.decode_max_len > 0 else 3 * n_tokens + 10


def parse_record(model, tables: Tables, record, beam: int | None = None,
                 contextual_table=None) -> ParseOutput:
    """Full pipeline: preprocess, decode nodes, attach edges, postprocess."""
    cfg = model.cfg
    if not record.tokens:
        raise ValueError(f"record {record.id!r} has no tokens")
    tokens = list(record.tokens)
    pos_tags = list(record.pos) if record.pos is not None else fallback_pos_tags(tokens)
    lemmas = record.lemma_list()

    a_tokens, a_pos, a_lemmas, flags, _, amap = anonymize_pair(
        tokens, pos_tags, lemmas, None, tables.entity)
    feats = encoder_features(a_tokens, a_pos, flags, model.vocabs)
    contextual = None
    if cfg.use_contextual and contextual_table is not None and record.id in contextual_table:
        contextual = contextual_table[record.id][0]
        spans = contextual_table[record.id][1]
        if spans is not None:
            from .embedding import pool_subwords
            with ad.no_grad():
                contextual = pool_subwords(ad.constant(contextual), spans,
                                           cfg.contextual_pooling).data

    with ad.no_grad():
        enc = model.encode_tokens(feats, contextual)
        max_len = decode_max_len(cfg, len(a_tokens))
        beam = cfg.beam_size if beam is None else beam
        if beam == 1:
            hyp = greedy_decode(model, enc, a_lemmas, feats.pos_ids, max_len)
        else:
            hyp = beam_decode(model, enc, a_lemmas, feats.pos_ids, beam, max_len)

    graph, info, _ = hypothesis_to_graph(model, hyp)
    tags = [(c, k) for c, (k, _) in zip(hyp.concepts, hyp.tags)]

    graph = sense_transform(graph, "restore", tables.sense)
    graph, info.unresolved_anon = deanonymize(graph, amap)
    graph, info.polarity_unmatched = add_polarity(tokens, graph, pos_tags, lemmas)
    graph = wikify(graph)
    problems = validate_graph(graph)
    if problems:
        raise RuntimeError(f"parse produced an invalid graph: {problems}")
    return ParseOutput(graph=graph, tags=tags, info=info)
