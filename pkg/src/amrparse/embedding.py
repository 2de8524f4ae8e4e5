"""Vocabularies, token features, and the embedding layers.

Encoder rows concatenate word, POS, anonymization-flag and CharCNN
features (plus an optional contextual slot); decoder rows swap the
anonymization flag for an index embedding.  The two sides keep separate
parameter tables.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .config import Config

PAD, UNK, BOS, EOS = 0, 1, 2, 3
RESERVED = ("<pad>", "<unk>", "<bos>", "<eos>")


@dataclass
class Vocab:
    tokens: list
    index: dict

    @classmethod
    def from_counts(cls, counts: Counter, max_size: int = 0, preseed=()) -> "Vocab":
        """Most frequent first (ties lexicographic); cap includes reserved ids."""
        tokens = list(RESERVED) + [t for t in preseed if t not in RESERVED]
        for tok, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
            if tok in RESERVED or tok in preseed:
                continue
            if max_size and len(tokens) >= max_size:
                break
            tokens.append(tok)
        return cls(tokens, {t: i for i, t in enumerate(tokens)})

    def id(self, token: str) -> int:
        return self.index.get(token, UNK)

    def token(self, idx: int) -> str:
        return self.tokens[idx]

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index


@dataclass
class Vocabularies:
    enc: Vocab
    dec: Vocab
    pos: Vocab
    chars: Vocab
    labels: Vocab

    def to_dict(self) -> dict:
        return {name: getattr(self, name).tokens for name in ("enc", "dec", "pos", "chars", "labels")}

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabularies":
        return cls(**{name: Vocab(list(toks), {t: i for i, t in enumerate(toks)})
                      for name, toks in d.items()})


def build_vocabularies(sentences, cfg: Config) -> Vocabularies:
    """Count from training data only: (tokens, pos_tags, concepts, labels) tuples."""
    enc_counts, dec_counts, pos_counts, char_counts, label_counts = (
        Counter(), Counter(), Counter(), Counter(), Counter())
    for tokens, pos_tags, concepts, labels in sentences:
        for tok in tokens:
            enc_counts[tok.lower()] += 1
            char_counts.update(tok)
        pos_counts.update(pos_tags)
        for concept in concepts:
            dec_counts[concept] += 1
            char_counts.update(concept)
        label_counts.update(labels)
    from .transduce import ROOT_LABEL
    return Vocabularies(
        enc=Vocab.from_counts(enc_counts, cfg.enc_vocab),
        dec=Vocab.from_counts(dec_counts, cfg.dec_vocab),
        pos=Vocab.from_counts(pos_counts),
        chars=Vocab.from_counts(char_counts),
        labels=Vocab.from_counts(label_counts, preseed=(ROOT_LABEL,)),
    )


# --- part-of-speech fallback ------------------------------------------------

_POS_SUFFIXES = (
    ("ing", "VBG"), ("ed", "VBD"), ("ly", "RB"), ("tion", "NN"),
    ("ment", "NN"), ("ness", "NN"), ("ity", "NN"), ("est", "JJS"),
    ("er", "JJR"), ("s", "NNS"),
)
_POS_CLOSED = {
    "the": "DT", "a": "DT", "an": "DT", "of": "IN", "to": "TO", "in": "IN",
    "and": "CC", "or": "CC", "is": "VBZ", "are": "VBP", "was": "VBD",
    "were": "VBD", "be": "VB", "not": "RB", "it": "PRP", "he": "PRP",
    "she": "PRP", "they": "PRP",
}


def fallback_pos_tags(tokens) -> list:
    """Suffix-rule tagger used when the corpus carries no ``::pos`` line."""
    tags = []
    for tok in tokens:
        low = tok.lower()
        if low in _POS_CLOSED:
            tags.append(_POS_CLOSED[low])
        elif any(c.isdigit() for c in tok):
            tags.append("CD")
        elif tok[:1].isupper():
            tags.append("NNP")
        else:
            for suffix, tag in _POS_SUFFIXES:
                if low.endswith(suffix) and len(low) > len(suffix) + 1:
                    tags.append(tag)
                    break
            else:
                tags.append("NN")
    return tags


# --- token features -----------------------------------------------------------

@dataclass
class TokenFeatures:
    """Id views of one sentence (encoder) or one node step (decoder)."""

    word_ids: list
    pos_ids: list
    char_ids: list                      # one id list per token
    anon_flags: list | None = None      # encoder side
    index_ids: list | None = None       # decoder side


def encoder_features(tokens, pos_tags, anon_flags, vocabs: Vocabularies) -> TokenFeatures:
    return TokenFeatures(
        word_ids=[vocabs.enc.id(t.lower()) for t in tokens],
        pos_ids=[vocabs.pos.id(p) for p in pos_tags],
        char_ids=[[vocabs.chars.id(c) for c in t] for t in tokens],
        anon_flags=[int(bool(f)) for f in anon_flags],
    )


# --- embedding computation ------------------------------------------------------

def char_cnn_embed(char_ids, params: dict, prefix: str, cfg: Config) -> ad.Tensor:
    """Width-``char_ngram`` convolution over character embeddings, max-pool, tanh.

    Words shorter than the filter width are padded with the PAD character.
    """
    if not char_ids:
        raise ValueError("empty character sequence")
    ids = list(char_ids)
    while len(ids) < cfg.char_ngram:
        ids.append(PAD)
    emb = ad.rows(params[f"{prefix}.char_emb"], ids)     # (len, char_dim)
    windows = ad.concat([ad.narrow(emb, 0, off, len(ids) - cfg.char_ngram + 1)
                         for off in range(cfg.char_ngram)], axis=1)
    scores = ad.add(ad.matmul(windows, params[f"{prefix}.charcnn.W"]),
                    params[f"{prefix}.charcnn.b"])       # (positions, filters)
    return ad.tanh(ad.amax(scores, axis=0))


def pool_subwords(states: ad.Tensor, spans, mode: str = "average") -> ad.Tensor:
    """Pool subword state rows into word rows over ordered, disjoint spans."""
    if mode not in ("average", "max"):
        raise ValueError(f"unknown pooling mode {mode!r}")
    rows_out = []
    for start, end in spans:
        if end <= start:
            raise ValueError(f"empty span ({start}, {end})")
        block = ad.narrow(states, 0, start, end - start)
        pooled = ad.mean_(block, axis=0) if mode == "average" else ad.amax(block, axis=0)
        rows_out.append(pooled)
    return ad.stack_rows(rows_out)


def embed_tokens(features: TokenFeatures, side: str, params: dict, cfg: Config,
                 contextual: np.ndarray | None = None,
                 train: bool = False, rng=None) -> ad.Tensor:
    """Embed a token sequence into a (length x width) matrix."""
    if side not in ("encoder", "decoder"):
        raise ValueError(f"unknown side {side!r}")
    prefix = "enc" if side == "encoder" else "dec"
    n_words = len(features.word_ids)
    table = params[f"{prefix}.word_emb"]
    for wid in features.word_ids:
        if not 0 <= wid < table.data.shape[0]:
            raise IndexError(f"word id {wid} out of range")

    parts = [
        ad.rows(table, features.word_ids),
        ad.rows(params[f"{prefix}.pos_emb"], features.pos_ids),
    ]
    if side == "encoder":
        parts.append(ad.rows(params["enc.anon_emb"], features.anon_flags))
    else:
        index_ids = [min(i, cfg.max_index) for i in features.index_ids]
        parts.append(ad.rows(params["dec.index_emb"], index_ids))
    parts.append(ad.stack_rows([char_cnn_embed(cs, params, prefix, cfg)
                                for cs in features.char_ids]))
    if side == "encoder" and cfg.use_contextual:
        if contextual is None:
            contextual = np.zeros((n_words, cfg.contextual_dim))
        if contextual.shape != (n_words, cfg.contextual_dim):
            raise ValueError(
                f"contextual matrix shape {contextual.shape} does not match "
                f"({n_words}, {cfg.contextual_dim})")
        parts.append(ad.constant(contextual))
    out = ad.concat(parts, axis=1)
    if train and cfg.dropout > 0.0:
        out = ad.dropout(out, cfg.dropout, rng)
    return out


def embedding_width(side: str, cfg: Config) -> int:
    base = cfg.word_dim + cfg.pos_dim + cfg.char_filters
    if side == "encoder":
        return base + cfg.anon_dim + (cfg.contextual_dim if cfg.use_contextual else 0)
    return base + cfg.index_dim
