"""Copy supervision, the joint objective, and the seeded training loop."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import AdamState, adam_step, backward, clip_grad_norm
from .config import Config
from .corpus import CorpusRecord
from .embedding import (UNK, Vocabularies, build_vocabularies, encoder_features,
                        fallback_pos_tags)
from .model import ParserModel, SentenceLosses
from .prepost import (Tables, anonymize_pair, build_entity_table, build_sense_table,
                      sense_transform, strip_wiki_polarity)
from .transduce import LinearizedTarget, graph_to_tree, linearize


class TrainingError(RuntimeError):
    pass


@dataclass
class StepSupervision:
    """Admissible outcomes for one reference step."""

    target_copy: bool
    antecedents: list = field(default_factory=list)     # 1-based positions, same surface
    src_positions: list = field(default_factory=list)   # 1-based token positions
    vocab_id: int | None = None
    unreachable: bool = False


def copy_supervision_targets(target: LinearizedTarget, tokens, lemmas,
                             dec_vocab, use_target_copy: bool = True) -> list:
    """Per-step admissible outcome sets for the reference node list.

    A step is a target-copy case iff its index repeats an earlier one;
    otherwise the marginal mixes vocabulary generation with source copies
    matched on the lowercased token or its lemma.
    """
    lowered = [t.lower() for t in tokens]
    lemma_list = list(lemmas) if lemmas is not None else lowered
    out = []
    for t in range(1, len(target.concepts) + 1):
        concept = target.concepts[t - 1]
        if use_target_copy and target.indices[t - 1] != t:
            antecedent = target.indices[t - 1]
            if target.concepts[antecedent - 1] != concept:
                raise TrainingError(
                    f"step {t}: copy of position {antecedent} but concepts differ "
                    f"({concept!r} vs {target.concepts[antecedent - 1]!r})")
            same = [j for j in range(1, t) if target.concepts[j - 1] == concept]
            out.append(StepSupervision(target_copy=True, antecedents=same))
            continue
        sup = StepSupervision(target_copy=False)
        if concept in dec_vocab:
            sup.vocab_id = dec_vocab.id(concept)
        sup.src_positions = [i + 1 for i, (low, lem) in enumerate(zip(lowered, lemma_list))
                             if concept == low or concept == lem]
        if sup.vocab_id is None and not sup.src_positions:
            sup.unreachable = True
        out.append(sup)
    return out


def joint_loss(losses: SentenceLosses, coverage_weight: float) -> ad.Tensor:
    """Summed node, head, label and weighted coverage terms of one sentence."""
    total = ad.constant(0.0)
    for nll in losses.node_nlls:
        total = ad.add(total, nll)
    for nll in losses.head_nlls:
        total = ad.add(total, nll)
    for nll in losses.label_nlls:
        total = ad.add(total, nll)
    if coverage_weight != 0.0:
        for cov in losses.covlosses:
            total = ad.add(total, ad.scale(cov, coverage_weight))
    return total


@dataclass
class TrainingInstance:
    record: CorpusRecord
    tokens: list                 # anonymized token stream fed to the encoder
    pos_tags: list
    lemmas: list
    enc_features: object
    contextual: np.ndarray | None
    target: LinearizedTarget
    supervision: list
    label_ids: list
    input_pos_ids: list          # decoder-input POS id when each node is consumed
    anon_map: object = None
    reference_graph: object = None     # original graph, for evaluation


def preprocess_record(rec: CorpusRecord, cfg: Config):
    """Training-side preprocessing: strip wiki/polarity, anonymize, strip senses."""
    tokens = list(rec.tokens or [])
    if not tokens:
        raise TrainingError(f"record {rec.id!r} has no tokens")
    pos_tags = list(rec.pos) if rec.pos is not None else fallback_pos_tags(tokens)
    lemmas = rec.lemma_list()
    graph = strip_wiki_polarity(rec.graph)
    tokens, pos_tags, lemmas, flags, graph, amap = anonymize_pair(
        tokens, pos_tags, lemmas, graph)
    graph = sense_transform(graph, "strip")
    return tokens, pos_tags, lemmas, flags, graph, amap


def training_sentences(records, cfg: Config):
    """Vocabulary-building view of the preprocessed corpus."""
    for rec in records:
        tokens, pos_tags, lemmas, flags, graph, _ = preprocess_record(rec, cfg)
        target = linearize(graph_to_tree(graph), tokens, lemmas)
        yield tokens, pos_tags, target.concepts, target.labels


def decoder_input_pos_ids(target: LinearizedTarget, pos_ids):
    """POS id seen by the decoder when a node is fed back as input.

    Source copies take the matched word's POS, target copies take their
    antecedent's, vocabulary nodes take UNK.
    """
    out = []
    for t, (kind, pos) in enumerate(target.sources, start=1):
        if kind == "src":
            out.append(pos_ids[pos - 1])
        elif kind == "tgt":
            out.append(out[pos - 1])
        else:
            out.append(UNK)
    return out


def make_instance(rec: CorpusRecord, cfg: Config, vocabs: Vocabularies,
                  contextual_table=None) -> TrainingInstance:
    tokens, pos_tags, lemmas, flags, graph, amap = preprocess_record(rec, cfg)
    target = linearize(graph_to_tree(graph), tokens, lemmas)
    if len(target) > cfg.max_index:
        raise TrainingError(
            f"record {rec.id!r}: {len(target)} nodes exceed vocab.max_index={cfg.max_index}")
    supervision = copy_supervision_targets(target, tokens, lemmas, vocabs.dec,
                                           cfg.target_copy)
    enc_feats = encoder_features(tokens, pos_tags, flags, vocabs)
    contextual = None
    if cfg.use_contextual and contextual_table is not None and rec.id in contextual_table:
        contextual = contextual_table[rec.id][0]
        spans = contextual_table[rec.id][1]
        if spans is not None:
            from .embedding import pool_subwords
            with ad.no_grad():
                contextual = pool_subwords(ad.constant(contextual), spans,
                                           cfg.contextual_pooling).data
    return TrainingInstance(
        record=rec, tokens=tokens, pos_tags=pos_tags, lemmas=lemmas,
        enc_features=enc_feats, contextual=contextual, target=target,
        supervision=supervision,
        label_ids=[vocabs.labels.id(lbl) for lbl in target.labels],
        input_pos_ids=decoder_input_pos_ids(target, enc_feats.pos_ids),
        anon_map=amap, reference_graph=rec.graph,
    )


@dataclass
class EpochMetrics:
    epoch: int
    loss: float
    dev_f1: float
    best_f1: float
    seconds: float


@dataclass
class FitResult:
    model: ParserModel
    tables: Tables
    metrics: list
    best_f1: float
    best_epoch: int


def fit(train_records, dev_records, cfg: Config, contextual_table=None,
        vectors=None, log=None, eval_beam: int = 1) -> FitResult:
    """Teacher-forced training with ADAM, clipping, and dev-Smatch early stopping."""
    from .decoding import parse_record  # deferred import; decoding depends on model
    from .smatch import corpus_smatch

    cfg.validate()
    if not train_records:
        raise TrainingError("empty training corpus")
    say = log if log is not None else (lambda s: None)

    tables = Tables(
        sense=build_sense_table(r.graph for r in train_records),
        entity=build_entity_table(train_records),
    )
    vocabs = build_vocabularies(training_sentences(train_records, cfg), cfg)
    model = ParserModel.build(cfg, vocabs, cfg.seed)
    if vectors:
        loaded = 0
        table = model.params["enc.word_emb"]
        for tok, idx in vocabs.enc.index.items():
            if tok in vectors:
                table.data[idx] = vectors[tok]
                loaded += 1
        say(f"pretrained_vectors_loaded={loaded}")

    instances = [make_instance(r, cfg, vocabs, contextual_table) for r in train_records]

    rng = ad.generator(cfg.seed + 1)       # dropout and shuffling
    adam = AdamState()
    step_count = 0
    best_f1, best_epoch = -1.0, 0
    best_params = {k: p.data.copy() for k, p in model.params.items()}
    metrics = []
    stale = 0

    for epoch in range(1, cfg.epochs + 1):
        tic = time.monotonic()
        order = rng.permutation(len(instances))
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = [instances[i] for i in order[start:start + cfg.batch_size]]
            total = ad.constant(0.0)
            for inst in batch:
                losses = model.sentence_losses(inst, train=True, rng=rng)
                sentence = ad.add(joint_loss(losses, cfg.coverage_weight), losses.eos_nll)
                total = ad.add(total, sentence)
            total = ad.scale(total, 1.0 / len(batch))
            value = float(total.data)
            if not np.isfinite(value):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch starting {start}: {value}")
            epoch_loss += value * len(batch)
            for p in model.params.values():
                p.grad = None
            backward(total)
            grads = {name: p.grad for name, p in model.params.items() if p.grad is not None}
            clip_grad_norm(grads, cfg.max_grad_norm)
            step_count += 1
            adam_step(model.params, grads, adam, step_count,
                      cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps)
        epoch_loss /= len(instances)

        pairs = []
        for rec in dev_records:
            out = parse_record(model, tables, rec, beam=eval_beam,
                               contextual_table=contextual_table)
            pairs.append((out.graph, rec.graph))
        _, _, dev_f1 = corpus_smatch(pairs, restarts=1, seed=0)

        if dev_f1 > best_f1 + 1e-9:
            best_f1, best_epoch = dev_f1, epoch
            best_params = {k: p.data.copy() for k, p in model.params.items()}
            stale = 0
        else:
            stale += 1
        metrics.append(EpochMetrics(epoch, epoch_loss, dev_f1, best_f1,
                                    time.monotonic() - tic))
        say(f"epoch={epoch} loss={epoch_loss:.6f} dev_f1={dev_f1:.4f} best_f1={best_f1:.4f}")
        if stale >= cfg.patience:
            say(f"early_stop=1 epoch={epoch} patience={cfg.patience}")
            break

    for name, p in model.params.items():
        p.data = best_params[name]
    return FitResult(model=model, tables=tables, metrics=metrics,
                     best_f1=best_f1, best_epoch=best_epoch)
