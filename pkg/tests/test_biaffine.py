import numpy as np
import pytest

from amrparse import autodiff as ad
from amrparse.biaffine import (EdgeScores, edge_label_scores, head_distribution,
                               head_nll, label_distribution, label_nll)
from amrparse.embedding import build_vocabularies
from amrparse.model import init_params

from conftest import tiny_config


def _setup(seed=0):
    cfg = tiny_config()
    sentences = [(["a"], ["DT"], ["alpha"], ["ARG0", "ARG1", "mod"])]
    vocabs = build_vocabularies(sentences, cfg)
    params = init_params(cfg, vocabs, seed=seed)
    return cfg, vocabs, params


def _states(cfg, m, seed=1):
    rng = np.random.default_rng(seed)
    return ad.Tensor(rng.normal(0, 0.5, (m, cfg.dec_hidden)))


def test_zero_bilinear_and_linear_give_constant_scores():
    cfg, vocabs, params = _setup()
    params["edge.U"].data[:] = 0.0
    params["edge.w_head"].data[:] = 0.0
    params["edge.w_dep"].data[:] = 0.0
    params["edge.b"].data[()] = 2.5
    scores = edge_label_scores(params, cfg, _states(cfg, 3))
    assert np.allclose(scores.edge.data, 2.5)


def test_identity_bilinear_is_dot_product():
    cfg, vocabs, params = _setup()
    m = 3
    states = _states(cfg, m)
    params["edge.U"].data[:] = np.eye(cfg.edge_hidden)
    params["edge.w_head"].data[:] = 0.0
    params["edge.w_dep"].data[:] = 0.0
    params["edge.b"].data[()] = 0.0
    scores = edge_label_scores(params, cfg, states)
    # reproduce the MLP views, then expect plain dot products
    def mlp(name, x):
        z = x @ params[f"{name}.W"].data + params[f"{name}.b"].data
        return np.where(z > 0, z, np.exp(z) - 1.0)
    with_root = np.vstack([params["edge.root_state"].data, states.data])
    eh = mlp("edge.head_mlp", with_root)
    ed = mlp("edge.dep_mlp", states.data)
    assert np.allclose(scores.edge.data, eh @ ed.T, atol=1e-12)


def test_scores_match_independent_matrix_oracle():
    cfg, vocabs, params = _setup(seed=9)
    m = 3
    states = _states(cfg, m, seed=2)
    scores = edge_label_scores(params, cfg, states)

    def mlp(name, x):
        z = x @ params[f"{name}.W"].data + params[f"{name}.b"].data
        return np.where(z > 0, z, np.exp(z) - 1.0)

    with_root = np.vstack([params["edge.root_state"].data, states.data])
    eh = mlp("edge.head_mlp", with_root)
    ed = mlp("edge.dep_mlp", states.data)
    expected_edge = (eh @ params["edge.U"].data @ ed.T
                     + (eh @ params["edge.w_head"].data)[:, None]
                     + ed @ params["edge.w_dep"].data
                     + float(params["edge.b"].data))
    assert np.allclose(scores.edge.data, expected_edge, atol=1e-10)

    lh = mlp("label.head_mlp", with_root)
    ld = mlp("label.dep_mlp", states.data)
    expected_label = (np.einsum("ki,lij,tj->ktl", lh, params["label.U"].data, ld)
                      + params["label.b"].data)
    assert np.allclose(scores.label.data, expected_label, atol=1e-10)


def test_head_distribution_uniform_and_normalized():
    m = 4
    scores = EdgeScores(edge=ad.Tensor(np.zeros((m + 1, m))),
                        label=ad.Tensor(np.zeros((m + 1, m, 3))))
    p = head_distribution(scores, 2)
    assert np.allclose(p, np.full(m + 1, 1.0 / (m + 1)))
    rng = np.random.default_rng(0)
    scores = EdgeScores(edge=ad.Tensor(rng.normal(0, 3, (m + 1, m))),
                        label=ad.Tensor(np.zeros((m + 1, m, 3))))
    for t in range(1, m + 1):
        assert abs(head_distribution(scores, t).sum() - 1.0) < 1e-12


def test_head_distribution_dominant_score():
    m = 3
    edge = np.zeros((m + 1, m))
    edge[2, 0] = 50.0
    scores = EdgeScores(edge=ad.Tensor(edge), label=ad.Tensor(np.zeros((m + 1, m, 2))))
    assert head_distribution(scores, 1)[2] > 1.0 - 1e-9


def test_label_distribution_cases():
    m = 2
    one_label = EdgeScores(edge=ad.Tensor(np.zeros((m + 1, m))),
                           label=ad.Tensor(np.zeros((m + 1, m, 1))))
    assert label_distribution(one_label, 0, 1) == pytest.approx([1.0])
    ten = EdgeScores(edge=ad.Tensor(np.zeros((m + 1, m))),
                     label=ad.Tensor(np.zeros((m + 1, m, 10))))
    assert np.allclose(label_distribution(ten, 1, 2), np.full(10, 0.1))
    rng = np.random.default_rng(1)
    logits = rng.normal(0, 2, (m + 1, m, 5))
    scores = EdgeScores(edge=ad.Tensor(np.zeros((m + 1, m))), label=ad.Tensor(logits))
    expected = np.exp(logits[1, 0] - logits[1, 0].max())
    expected /= expected.sum()
    assert np.allclose(label_distribution(scores, 1, 1), expected)


def test_gradients_flow_to_decoder_states_and_all_params():
    cfg, vocabs, params = _setup()
    states = ad.Tensor(np.random.default_rng(3).normal(0, 0.5, (3, cfg.dec_hidden)),
                       requires_grad=True)
    scores = edge_label_scores(params, cfg, states)
    loss = ad.add(head_nll(scores, 2, 1), label_nll(scores, 2, 1, 2))
    ad.backward(loss)
    assert states.grad is not None and np.abs(states.grad).max() > 0
    for name in ("edge.U", "edge.root_state", "label.U", "edge.head_mlp.W"):
        assert params[name].grad is not None


def test_biaffine_gradcheck():
    cfg, vocabs, params = _setup(seed=4)
    states = ad.Tensor(np.random.default_rng(5).normal(0, 0.5, (3, cfg.dec_hidden)),
                       requires_grad=True)

    def loss_fn():
        scores = edge_label_scores(params, cfg, states)
        return ad.add(head_nll(scores, 1, 0),
                      ad.add(head_nll(scores, 3, 2), label_nll(scores, 2, 1, 1)))

    tracked = {"states": states, "U": params["edge.U"], "b": params["edge.b"],
               "root": params["edge.root_state"], "labU": params["label.U"],
               "wh": params["edge.w_head"], "mlp": params["edge.head_mlp.W"]}
    assert ad.grad_check(loss_fn, tracked) < 1e-6
