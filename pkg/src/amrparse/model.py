"""Parameter container and the shared forward computations of the parser."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .biaffine import edge_label_scores, head_nll, label_nll
from .config import Config
from .embedding import (BOS, EOS, PAD, UNK, TokenFeatures, Vocabularies,
                        embed_tokens, embedding_width)
from .encdec import DecoderState, decoder_step, encode, init_decoder

LOG_CLAMP = 1e-12


def _xavier(rng, shape):
    fan_in = shape[-1] if len(shape) > 1 else shape[0]
    fan_out = shape[0]
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, shape)


def _table(rng, shape):
    return rng.uniform(-0.1, 0.1, shape)


def init_params(cfg: Config, vocabs: Vocabularies, seed: int) -> dict:
    """Build every named parameter tensor with a seeded generator."""
    rng = ad.generator(seed)
    p = {}

    def param(name, array):
        p[name] = ad.Tensor(array, requires_grad=True)

    def lstm(name, input_dim, hidden):
        W = _xavier(rng, (4 * hidden, input_dim + hidden))
        b = np.zeros(4 * hidden)
        b[hidden:2 * hidden] = 1.0  # forget-gate bias
        param(f"{name}.W", W)
        param(f"{name}.b", b)

    # encoder embedding layer
    param("enc.word_emb", _table(rng, (len(vocabs.enc), cfg.word_dim)))
    param("enc.pos_emb", _table(rng, (len(vocabs.pos), cfg.pos_dim)))
    param("enc.anon_emb", _table(rng, (2, cfg.anon_dim)))
    param("enc.char_emb", _table(rng, (len(vocabs.chars), cfg.char_dim)))
    param("enc.charcnn.W", _xavier(rng, (cfg.char_ngram * cfg.char_dim, cfg.char_filters)))
    param("enc.charcnn.b", np.zeros(cfg.char_filters))
    # decoder embedding layer (parameters not tied to the encoder's)
    param("dec.word_emb", _table(rng, (len(vocabs.dec), cfg.word_dim)))
    param("dec.pos_emb", _table(rng, (len(vocabs.pos), cfg.pos_dim)))
    param("dec.index_emb", _table(rng, (cfg.max_index + 1, cfg.index_dim)))
    param("dec.char_emb", _table(rng, (len(vocabs.chars), cfg.char_dim)))
    param("dec.charcnn.W", _xavier(rng, (cfg.char_ngram * cfg.char_dim, cfg.char_filters)))
    param("dec.charcnn.b", np.zeros(cfg.char_filters))

    enc_in = embedding_width("encoder", cfg)
    for layer in range(cfg.enc_layers):
        width = enc_in if layer == 0 else cfg.encoder_width
        lstm(f"enc.lstm.l{layer}.fwd", width, cfg.enc_hidden)
        lstm(f"enc.lstm.l{layer}.bwd", width, cfg.enc_hidden)

    dec_in = embedding_width("decoder", cfg) + cfg.dec_hidden  # input feeding
    for layer in range(cfg.dec_layers):
        width = dec_in if layer == 0 else cfg.dec_hidden
        lstm(f"dec.lstm.l{layer}", width, cfg.dec_hidden)

    attn = cfg.attention_dim
    param("attn.src.W", _xavier(rng, (cfg.encoder_width, attn)))
    param("attn.src.U", _xavier(rng, (attn, cfg.dec_hidden)))
    param("attn.src.b", np.zeros(attn))
    param("attn.src.v", _xavier(rng, (attn,)))
    param("attn.tgt.W", _xavier(rng, (attn, cfg.dec_hidden)))
    param("attn.tgt.U", _xavier(rng, (attn, cfg.dec_hidden)))
    param("attn.tgt.b", np.zeros(attn))
    param("attn.tgt.v", _xavier(rng, (attn,)))

    param("dec.combine.W", _xavier(rng, (cfg.dec_hidden, cfg.encoder_width + cfg.dec_hidden)))
    param("dec.combine.b", np.zeros(cfg.dec_hidden))
    param("out.vocab.W", _xavier(rng, (len(vocabs.dec), cfg.dec_hidden)))
    param("out.vocab.b", np.zeros(len(vocabs.dec)))
    param("out.switch.W", _xavier(rng, (3, cfg.dec_hidden)))
    param("out.switch.b", np.zeros(3))

    param("edge.root_state", _table(rng, (cfg.dec_hidden,)))
    param("edge.head_mlp.W", _xavier(rng, (cfg.dec_hidden, cfg.edge_hidden)))
    param("edge.head_mlp.b", np.zeros(cfg.edge_hidden))
    param("edge.dep_mlp.W", _xavier(rng, (cfg.dec_hidden, cfg.edge_hidden)))
    param("edge.dep_mlp.b", np.zeros(cfg.edge_hidden))
    param("edge.U", _xavier(rng, (cfg.edge_hidden, cfg.edge_hidden)))
    param("edge.w_head", _xavier(rng, (cfg.edge_hidden,)))
    param("edge.w_dep", _xavier(rng, (cfg.edge_hidden,)))
    param("edge.b", np.zeros(()))
    param("label.head_mlp.W", _xavier(rng, (cfg.dec_hidden, cfg.label_hidden)))
    param("label.head_mlp.b", np.zeros(cfg.label_hidden))
    param("label.dep_mlp.W", _xavier(rng, (cfg.dec_hidden, cfg.label_hidden)))
    param("label.dep_mlp.b", np.zeros(cfg.label_hidden))
    param("label.U", _xavier(rng, (len(vocabs.labels), cfg.label_hidden, cfg.label_hidden)))
    param("label.b", np.zeros(len(vocabs.labels)))
    return p


@dataclass
class SentenceLosses:
    """Per-step loss tensors of one teacher-forced sentence."""

    node_nlls: list
    head_nlls: list
    label_nlls: list
    covlosses: list
    eos_nll: ad.Tensor
    unreachable: int
    stildes: list


class ParserModel:
    """Binds config, vocabularies and parameters; exposes the forward passes."""

    def __init__(self, cfg: Config, vocabs: Vocabularies, params: dict):
        self.cfg = cfg
        self.vocabs = vocabs
        self.params = params

    @classmethod
    def build(cls, cfg: Config, vocabs: Vocabularies, seed: int | None = None) -> "ParserModel":
        cfg.validate()
        return cls(cfg, vocabs, init_params(cfg, vocabs, cfg.seed if seed is None else seed))

    # --- embedding helpers -------------------------------------------------

    def encode_tokens(self, feats: TokenFeatures, contextual=None,
                      train: bool = False, rng=None):
        emb = embed_tokens(feats, "encoder", self.params, self.cfg,
                           contextual=contextual, train=train, rng=rng)
        return encode(self.params, self.cfg, emb, train=train, rng=rng)

    def step_embedding(self, surface: str | None, pos_id: int, index_id: int,
                       train: bool = False, rng=None) -> ad.Tensor:
        """Decoder-side embedding of the previously emitted node (or BOS)."""
        if surface is None:  # BOS pseudo-node
            feats = TokenFeatures(word_ids=[BOS], pos_ids=[BOS], char_ids=[[BOS]],
                                  index_ids=[0])
        else:
            feats = TokenFeatures(
                word_ids=[self.vocabs.dec.id(surface)],
                pos_ids=[pos_id],
                char_ids=[[self.vocabs.chars.id(c) for c in surface]],
                index_ids=[index_id],
            )
        emb = embed_tokens(feats, "decoder", self.params, self.cfg, train=train, rng=rng)
        return ad.reshape(emb, (emb.data.shape[1],))

    # --- teacher-forced training pass ---------------------------------------

    def sentence_losses(self, inst, train: bool = False, rng=None) -> SentenceLosses:
        """Run the full teacher-forced pass over one training instance.

        ``inst`` provides enc_features, contextual, target, supervision,
        head positions, label ids and per-step decoder-input features.
        """
        cfg = self.cfg
        enc = self.encode_tokens(inst.enc_features, inst.contextual, train, rng)
        state = init_decoder(self.params, cfg, enc)

        m = len(inst.target.concepts)
        node_nlls, covlosses, stildes = [], [], []
        unreachable = 0
        for t in range(1, m + 2):  # steps 1..m plus the EOS step
            if t == 1:
                prev = self.step_embedding(None, BOS, 0, train, rng)
            else:
                surface = inst.target.concepts[t - 2]
                prev = self.step_embedding(surface, inst.input_pos_ids[t - 2],
                                           min(inst.target.indices[t - 2], cfg.max_index),
                                           train, rng)
            step = decoder_step(self.params, cfg, state, prev, enc, train, rng)
            if t <= m:
                sup = inst.supervision[t - 1]
                mass, hit = self._reference_mass(step, sup)
                if not hit:
                    unreachable += 1
                node_nlls.append(ad.neg(ad.log(ad.clamp_min(mass, LOG_CLAMP))))
                covlosses.append(step.covloss)
                stildes.append(step.stilde)
            else:
                eos_mass = ad.mul(step.p_gen, self._pvocab_at(step, EOS))
                eos_nll = ad.neg(ad.log(ad.clamp_min(eos_mass, LOG_CLAMP)))

        scores = edge_label_scores(self.params, cfg, ad.stack_rows(stildes), train, rng)
        head_nlls = [head_nll(scores, t, inst.target.heads[t - 1]) for t in range(1, m + 1)]
        label_nlls = [label_nll(scores, t, inst.target.heads[t - 1], inst.label_ids[t - 1])
                      for t in range(1, m + 1)]
        return SentenceLosses(node_nlls, head_nlls, label_nlls, covlosses,
                              eos_nll, unreachable, stildes)

    @staticmethod
    def _pvocab_at(step, idx: int) -> ad.Tensor:
        return ad.reshape(ad.narrow(step.pvocab, 0, idx, 1), ())

    def _reference_mass(self, step, sup):
        """Probability mass the model assigns to the reference outcome."""
        if sup.target_copy:
            picks = ad.rows(step.a_tgt, [j - 1 for j in sup.antecedents])
            return ad.mul(step.p_tgt, ad.sum_(picks)), True
        terms = []
        if sup.vocab_id is not None:
            terms.append(ad.mul(step.p_gen, self._pvocab_at(step, sup.vocab_id)))
        if sup.src_positions and self.cfg.source_copy:
            picks = ad.rows(step.a_src, [i - 1 for i in sup.src_positions])
            terms.append(ad.mul(step.p_src, ad.sum_(picks)))
        if not terms:
            return ad.mul(step.p_gen, self._pvocab_at(step, UNK)), False
        mass = terms[0]
        for extra in terms[1:]:
            mass = ad.add(mass, extra)
        return mass, True
