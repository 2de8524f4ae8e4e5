"""BiLSTM encoder and the input-feeding attention decoder step.

The decoder mixes three prediction channels through a switch softmax:
generate from the vocabulary, copy a source token via source attention,
or copy an earlier node via target attention.  Channels that cannot fire
(no antecedents yet, or a channel disabled by configuration) are removed
from the switch normalization so the full outcome distribution still
sums to one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .config import Config
from .embedding import EOS


@dataclass
class EncoderState:
    hidden: ad.Tensor            # (n, 2 * enc_hidden), top layer
    finals: list                 # per layer: ((h_fwd, c_fwd), (h_bwd, c_bwd))
    src_keys: ad.Tensor          # (n, attn_dim), precomputed W_src @ h_i


def encode(params: dict, cfg: Config, emb: ad.Tensor,
           train: bool = False, rng=None) -> EncoderState:
    """Run the multi-layer bidirectional LSTM over embedded tokens."""
    n = emb.data.shape[0]
    if n == 0:
        raise ValueError("cannot encode an empty sequence")
    layer_input = emb
    finals = []
    for layer in range(cfg.enc_layers):
        xs = [ad.reshape(ad.narrow(layer_input, 0, i, 1), (layer_input.data.shape[1],))
              for i in range(n)]
        outs = {}
        for direction, order in (("fwd", range(n)), ("bwd", range(n - 1, -1, -1))):
            W = params[f"enc.lstm.l{layer}.{direction}.W"]
            b = params[f"enc.lstm.l{layer}.{direction}.b"]
            h = ad.constant(np.zeros(cfg.enc_hidden))
            c = ad.constant(np.zeros(cfg.enc_hidden))
            states = [None] * n
            for i in order:
                h, c = ad.lstm_cell(xs[i], h, c, W, b)
                states[i] = h
            outs[direction] = (states, (h, c))
        rows = [ad.concat([outs["fwd"][0][i], outs["bwd"][0][i]]) for i in range(n)]
        layer_input = ad.stack_rows(rows)
        if train and cfg.dropout > 0.0:
            layer_input = ad.dropout(layer_input, cfg.dropout, rng)
        finals.append((outs["fwd"][1], outs["bwd"][1]))
    src_keys = ad.matmul(layer_input, params["attn.src.W"])
    return EncoderState(hidden=layer_input, finals=finals, src_keys=src_keys)


@dataclass
class DecoderState:
    """Mutable cursor of one decode: recurrent cells, histories, coverage."""

    layers: list                 # per layer (h, c) tensors
    stilde: ad.Tensor            # previous attentional vector (input feeding)
    tgt_keys: list = field(default_factory=list)    # W_tgt @ stilde_j per emitted step
    stildes: list = field(default_factory=list)     # emitted attentional vectors
    cov: ad.Tensor | None = None                    # coverage over source positions
    t: int = 1                                      # next step number

    def clone(self) -> "DecoderState":
        """Independent cursor sharing the immutable tensors (for beam search)."""
        return DecoderState(layers=list(self.layers), stilde=self.stilde,
                            tgt_keys=list(self.tgt_keys), stildes=list(self.stildes),
                            cov=self.cov, t=self.t)


def init_decoder(params: dict, cfg: Config, enc: EncoderState) -> DecoderState:
    """Start state: per-layer concat of the final forward/backward encoder states."""
    layers = []
    for (hf, cf), (hb, cb) in enc.finals:
        layers.append((ad.concat([hf, hb]), ad.concat([cf, cb])))
    n = enc.hidden.data.shape[0]
    return DecoderState(
        layers=layers,
        stilde=ad.constant(np.zeros(cfg.dec_hidden)),
        cov=ad.constant(np.zeros(n)),
    )


@dataclass
class DecoderStep:
    """Everything one decoder step exposes to the losses and the search."""

    s_top: ad.Tensor
    stilde: ad.Tensor
    a_src: ad.Tensor
    a_tgt: ad.Tensor | None
    context: ad.Tensor
    pvocab: ad.Tensor
    p_src: ad.Tensor
    p_tgt: ad.Tensor
    p_gen: ad.Tensor
    covloss: ad.Tensor
    cov: ad.Tensor               # coverage BEFORE this step's attention


# switch row order
SW_SRC, SW_TGT, SW_GEN = 0, 1, 2


def decoder_step(params: dict, cfg: Config, state: DecoderState,
                 prev_emb: ad.Tensor, enc: EncoderState,
                 train: bool = False, rng=None) -> DecoderStep:
    """Advance the decoder by one step (mutates ``state``)."""
    x = ad.concat([prev_emb, state.stilde])
    new_layers = []
    for layer, (h, c) in enumerate(state.layers):
        h, c = ad.lstm_cell(x, h, c,
                            params[f"dec.lstm.l{layer}.W"],
                            params[f"dec.lstm.l{layer}.b"])
        new_layers.append((h, c))
        x = h
        if train and cfg.dropout > 0.0:
            x = ad.dropout(x, cfg.dropout, rng)
    s_top = x

    # additive source attention
    e_src = ad.matmul(ad.tanh(ad.add(enc.src_keys,
                                     ad.add(ad.matmul(params["attn.src.U"], s_top),
                                            params["attn.src.b"]))),
                      params["attn.src.v"])
    a_src = ad.softmax(e_src)
    context = ad.matmul(a_src, enc.hidden)

    stilde = ad.tanh(ad.add(ad.matmul(params["dec.combine.W"],
                                      ad.concat([context, s_top])),
                            params["dec.combine.b"]))
    if train and cfg.dropout > 0.0:
        stilde = ad.dropout(stilde, cfg.dropout, rng)

    pvocab = ad.softmax(ad.add(ad.matmul(params["out.vocab.W"], stilde),
                               params["out.vocab.b"]))

    # additive target attention over earlier attentional vectors
    a_tgt = None
    has_antecedents = cfg.target_copy and state.t > 1
    if has_antecedents:
        keys = ad.stack_rows(state.tgt_keys)
        e_tgt = ad.matmul(ad.tanh(ad.add(keys,
                                         ad.add(ad.matmul(params["attn.tgt.U"], stilde),
                                                params["attn.tgt.b"]))),
                          params["attn.tgt.v"])
        a_tgt = ad.softmax(e_tgt)

    # switch over the channels that can actually fire at this step
    logits = ad.add(ad.matmul(params["out.switch.W"], stilde), params["out.switch.b"])
    active = []
    if cfg.source_copy:
        active.append(SW_SRC)
    if has_antecedents:
        active.append(SW_TGT)
    active.append(SW_GEN)
    zero = ad.constant(0.0)
    if len(active) == 1:
        probs = {SW_GEN: ad.constant(1.0)}
    else:
        sw = ad.softmax(ad.rows(logits, active))
        probs = {ch: ad.reshape(ad.narrow(sw, 0, i, 1), ()) for i, ch in enumerate(active)}

    covloss = ad.sum_(ad.minimum(a_src, state.cov))
    step = DecoderStep(
        s_top=s_top, stilde=stilde, a_src=a_src, a_tgt=a_tgt, context=context,
        pvocab=pvocab,
        p_src=probs.get(SW_SRC, zero),
        p_tgt=probs.get(SW_TGT, zero),
        p_gen=probs[SW_GEN],
        covloss=covloss, cov=state.cov,
    )

    state.layers = new_layers
    state.stilde = stilde
    state.stildes.append(stilde)
    state.tgt_keys.append(ad.matmul(params["attn.tgt.W"], stilde))
    state.cov = ad.add(state.cov, a_src)
    state.t += 1
    return step


def coverage_loss(attentions) -> tuple:
    """Per-step and total coverage penalty for a source-attention history.

    covloss_t = sum_i min(a^t[i], cov^t[i]) with cov^1 = 0.
    """
    per_step = []
    cov = None
    for a in attentions:
        arr = np.asarray(a, dtype=np.float64)
        if cov is None:
            cov = np.zeros_like(arr)
        per_step.append(float(np.minimum(arr, cov).sum()))
        cov = cov + arr
    return per_step, float(sum(per_step))


@dataclass
class NodeOutcomes:
    """Full outcome distribution of one step plus collapsed surface queries.

    Outcomes are ("vocab", vocab id), ("src", token position 1-based) and
    ("tgt", antecedent position 1-based); their probabilities sum to 1.
    """

    outcomes: list
    probs: np.ndarray
    source_surfaces: list        # emitted surface per source position (lemma)
    prior_surfaces: list
    prior_indices: list
    a_src: np.ndarray
    a_tgt: np.ndarray | None
    p_src: float
    p_tgt: float
    p_gen: float
    pvocab: np.ndarray
    vocab_tokens: list

    def p_copy(self, surface: str) -> float:
        """Final probability that the step copies an existing node ``surface``."""
        if self.a_tgt is None:
            return 0.0
        mass = sum(self.a_tgt[j] for j, s in enumerate(self.prior_surfaces) if s == surface)
        return self.p_tgt * mass

    def p_new(self, surface: str, vocab_index=None) -> float:
        """Final probability of emitting ``surface`` as a new node."""
        p = 0.0
        if vocab_index is not None:
            p += self.p_gen * self.pvocab[vocab_index]
        else:
            try:
                p += self.p_gen * self.pvocab[self.vocab_tokens.index(surface)]
            except ValueError:
                pass
        p += self.p_src * sum(self.a_src[i] for i, s in enumerate(self.source_surfaces)
                              if s == surface)
        return p

    def index_for(self, outcome, step_number: int) -> int:
        kind, pos = outcome
        if kind == "tgt":
            return self.prior_indices[pos - 1]
        return step_number

    def copy_antecedent(self, surface: str) -> int | None:
        """Highest-probability antecedent position for a collapsed copy; ties earliest."""
        if self.a_tgt is None:
            return None
        best, best_mass = None, -1.0
        for j, s in enumerate(self.prior_surfaces):
            if s == surface and self.a_tgt[j] > best_mass:
                best, best_mass = j + 1, self.a_tgt[j]
        return best


def node_distribution(step: DecoderStep, source_surfaces, prior_surfaces,
                      prior_indices, vocab_tokens) -> NodeOutcomes:
    """Assemble the final per-outcome distribution of one decoder step."""
    p_src = float(step.p_src.data)
    p_tgt = float(step.p_tgt.data)
    p_gen = float(step.p_gen.data)
    pvocab = step.pvocab.data
    a_src = step.a_src.data
    a_tgt = step.a_tgt.data if step.a_tgt is not None else None

    outcomes = [("vocab", i) for i in range(len(pvocab))]
    chunks = [p_gen * pvocab]
    outcomes += [("src", i + 1) for i in range(len(a_src))]
    chunks.append(p_src * a_src)
    if a_tgt is not None:
        outcomes += [("tgt", j + 1) for j in range(len(a_tgt))]
        chunks.append(p_tgt * a_tgt)
    probs = np.concatenate(chunks)
    return NodeOutcomes(
        outcomes=outcomes, probs=probs,
        source_surfaces=list(source_surfaces),
        prior_surfaces=list(prior_surfaces),
        prior_indices=list(prior_indices),
        a_src=a_src, a_tgt=a_tgt, p_src=p_src, p_tgt=p_tgt, p_gen=p_gen,
        pvocab=pvocab, vocab_tokens=vocab_tokens,
    )
