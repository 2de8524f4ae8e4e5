"""Deep biaffine scoring of edge existence and edge labels.

Head and dependent views of each decoder state are produced by four
single-layer ELU MLPs; edge scores use a biaffine form (bilinear plus
linear plus bias) and label scores a bilinear form per label.  Position
0 on the head axis is a learned dummy-root representation; the dummy
root never appears as a dependent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .config import Config


@dataclass
class EdgeScores:
    edge: ad.Tensor     # (m+1 heads, m dependents)
    label: ad.Tensor    # (m+1, m, L)


def _mlp(params: dict, name: str, x: ad.Tensor) -> ad.Tensor:
    return ad.elu(ad.add(ad.matmul(x, params[f"{name}.W"]), params[f"{name}.b"]))


def edge_label_scores(params: dict, cfg: Config, states: ad.Tensor,
                      train: bool = False, rng=None) -> EdgeScores:
    """Score all head/dependent pairs over decoder states (m, dec_hidden)."""
    m = states.data.shape[0]
    if m < 1:
        raise ValueError("need at least one decoder state")
    with_root = ad.concat([ad.reshape(params["edge.root_state"], (1, cfg.dec_hidden)),
                           states], axis=0)

    edge_head = _mlp(params, "edge.head_mlp", with_root)        # (m+1, E)
    edge_dep = _mlp(params, "edge.dep_mlp", states)             # (m,   E)
    label_head = _mlp(params, "label.head_mlp", with_root)      # (m+1, Lh)
    label_dep = _mlp(params, "label.dep_mlp", states)           # (m,   Lh)
    if train and cfg.dropout > 0.0:
        edge_head = ad.dropout(edge_head, cfg.dropout, rng)
        edge_dep = ad.dropout(edge_dep, cfg.dropout, rng)
        label_head = ad.dropout(label_head, cfg.dropout, rng)
        label_dep = ad.dropout(label_dep, cfg.dropout, rng)

    # Biaffine(x1, x2) = x1' U x2 + W [x1; x2] + b over all pairs
    bilinear = ad.matmul(ad.matmul(edge_head, params["edge.U"]), ad.transpose(edge_dep))
    lin_head = ad.reshape(ad.matmul(edge_head, params["edge.w_head"]), (m + 1, 1))
    lin_dep = ad.matmul(edge_dep, params["edge.w_dep"])
    edge = ad.add(ad.add(bilinear, ad.add(lin_head, lin_dep)), params["edge.b"])

    # Bilinear(x1, x2) = x1' U x2 + b, one slice of U per label
    label = ad.add(ad.bilinear_full(label_head, params["label.U"], label_dep),
                   params["label.b"])
    return EdgeScores(edge=edge, label=label)


def head_distribution(scores: EdgeScores, t: int) -> np.ndarray:
    """Softmax over candidate heads 0..m for dependent position t (1-based)."""
    col = scores.edge.data[:, t - 1]
    shifted = np.exp(col - col.max())
    return shifted / shifted.sum()


def label_distribution(scores: EdgeScores, k: int, t: int) -> np.ndarray:
    """Softmax over labels for the edge from head k to dependent t (1-based)."""
    logits = scores.label.data[k, t - 1]
    shifted = np.exp(logits - logits.max())
    return shifted / shifted.sum()


def head_nll(scores: EdgeScores, t: int, head: int) -> ad.Tensor:
    """Negative log-probability of ``head`` being the parent of position t."""
    col = ad.reshape(ad.narrow(scores.edge, 1, t - 1, 1), (scores.edge.data.shape[0],))
    logp = ad.log_softmax(col)
    return ad.neg(ad.reshape(ad.narrow(logp, 0, head, 1), ()))


def label_nll(scores: EdgeScores, t: int, head: int, label_id: int) -> ad.Tensor:
    """Negative log-probability of ``label_id`` on the edge head -> t."""
    row = ad.narrow(ad.narrow(scores.label, 0, head, 1), 1, t - 1, 1)
    logits = ad.reshape(row, (scores.label.data.shape[2],))
    logp = ad.log_softmax(logits)
    return ad.neg(ad.reshape(ad.narrow(logp, 0, label_id, 1), ()))
