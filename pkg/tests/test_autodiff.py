import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from amrparse import autodiff as ad


def _tensor(rng, *shape):
    return ad.Tensor(rng.normal(0.0, 0.6, shape), requires_grad=True)


def _check_op(build, params, tol=1e-6, h=1e-5):
    err = ad.grad_check(build, params, h=h)
    assert err < tol, f"relative error {err}"


def test_quadratic_gradient_matches_hand_value():
    x = ad.Tensor([1.0, 2.0], requires_grad=True)
    loss = ad.sum_(ad.mul(x, x))
    ad.backward(loss)
    assert np.allclose(x.grad, [2.0, 4.0])
    err = ad.grad_check(lambda: ad.sum_(ad.mul(x, x)), {"x": x})
    assert err < 1e-9


def test_tanh_derivative_at_zero_is_one():
    x = ad.Tensor(0.0, requires_grad=True)
    y = ad.tanh(x)
    ad.backward(y)
    assert abs(float(x.grad) - 1.0) < 1e-12


@pytest.mark.parametrize("name", [
    "add", "sub", "mul", "addb", "matmul_mm", "matmul_vm", "matmul_mv",
    "matmul_vv", "concat0", "concat1", "narrow", "rows", "reshape",
    "transpose", "tanh", "sigmoid", "exp", "log", "elu", "clamp",
    "minimum", "maximum", "sum_axis", "mean_axis", "amax", "softmax",
    "log_softmax", "stack",
])
def test_each_op_matches_central_differences(name):
    rng = np.random.default_rng(hash(name) % (2 ** 32))
    a = _tensor(rng, 4, 3)
    b = _tensor(rng, 4, 3)
    v = _tensor(rng, 3)
    w = _tensor(rng, 3, 5)
    u = _tensor(rng, 4)
    builds = {
        "add": (lambda: ad.sum_(ad.tanh(ad.add(a, b))), {"a": a, "b": b}),
        "sub": (lambda: ad.sum_(ad.tanh(ad.sub(a, b))), {"a": a, "b": b}),
        "mul": (lambda: ad.sum_(ad.tanh(ad.mul(a, b))), {"a": a, "b": b}),
        "addb": (lambda: ad.sum_(ad.tanh(ad.add(a, v))), {"a": a, "v": v}),
        "matmul_mm": (lambda: ad.sum_(ad.tanh(ad.matmul(a, w))), {"a": a, "w": w}),
        "matmul_vm": (lambda: ad.sum_(ad.tanh(ad.matmul(v, ad.transpose(a)))), {"v": v, "a": a}),
        "matmul_mv": (lambda: ad.sum_(ad.tanh(ad.matmul(a, v))), {"a": a, "v": v}),
        "matmul_vv": (lambda: ad.tanh(ad.matmul(v, v)), {"v": v}),
        "concat0": (lambda: ad.sum_(ad.tanh(ad.concat([a, b], axis=0))), {"a": a, "b": b}),
        "concat1": (lambda: ad.sum_(ad.tanh(ad.concat([a, b], axis=1))), {"a": a, "b": b}),
        "narrow": (lambda: ad.sum_(ad.tanh(ad.narrow(a, 0, 1, 2))), {"a": a}),
        "rows": (lambda: ad.sum_(ad.tanh(ad.rows(a, [0, 2, 2]))), {"a": a}),
        "reshape": (lambda: ad.sum_(ad.tanh(ad.reshape(a, (2, 6)))), {"a": a}),
        "transpose": (lambda: ad.sum_(ad.tanh(ad.transpose(a))), {"a": a}),
        "tanh": (lambda: ad.sum_(ad.tanh(a)), {"a": a}),
        "sigmoid": (lambda: ad.sum_(ad.sigmoid(a)), {"a": a}),
        "exp": (lambda: ad.sum_(ad.exp(a)), {"a": a}),
        "log": (lambda: ad.sum_(ad.log(ad.add(ad.mul(a, a), ad.constant(0.5)))), {"a": a}),
        "elu": (lambda: ad.sum_(ad.elu(a)), {"a": a}),
        "clamp": (lambda: ad.sum_(ad.clamp_min(a, 0.3)), {"a": a}),
        "minimum": (lambda: ad.sum_(ad.minimum(a, b)), {"a": a, "b": b}),
        "maximum": (lambda: ad.sum_(ad.maximum(a, b)), {"a": a, "b": b}),
        "sum_axis": (lambda: ad.sum_(ad.tanh(ad.sum_(a, axis=1))), {"a": a}),
        "mean_axis": (lambda: ad.sum_(ad.tanh(ad.mean_(a, axis=0))), {"a": a}),
        "amax": (lambda: ad.sum_(ad.tanh(ad.amax(a, axis=0))), {"a": a}),
        "softmax": (lambda: ad.sum_(ad.mul(ad.softmax(a, axis=1), b)), {"a": a, "b": b}),
        "log_softmax": (lambda: ad.sum_(ad.mul(ad.log_softmax(a, axis=1), b)), {"a": a, "b": b}),
        "stack": (lambda: ad.sum_(ad.tanh(ad.stack_rows([v, ad.mul(v, v)]))), {"v": v}),
    }
    build, params = builds[name]
    _check_op(build, params)


def test_lstm_cell_gradients():
    rng = np.random.default_rng(42)
    x, h, c = _tensor(rng, 5), _tensor(rng, 4), _tensor(rng, 4)
    W, b = _tensor(rng, 16, 9), _tensor(rng, 16)

    def build():
        h2, c2 = ad.lstm_cell(x, h, c, W, b)
        return ad.sum_(ad.add(ad.mul(h2, h2), ad.tanh(c2)))

    _check_op(build, {"x": x, "h": h, "c": c, "W": W, "b": b})


def test_bilinear_full_gradients():
    rng = np.random.default_rng(43)
    x1, U, x2 = _tensor(rng, 3, 4), _tensor(rng, 5, 4, 2), _tensor(rng, 6, 2)
    _check_op(lambda: ad.sum_(ad.tanh(ad.bilinear_full(x1, U, x2))),
              {"x1": x1, "U": U, "x2": x2})


def test_dropout_gradients_with_fixed_mask():
    rng = np.random.default_rng(44)
    a = _tensor(rng, 6, 5)

    def build():
        return ad.sum_(ad.tanh(ad.dropout(a, 0.4, ad.generator(99))))

    _check_op(build, {"a": a})


def test_dropout_identity_when_rate_zero():
    a = ad.Tensor([[1.0, 2.0]], requires_grad=True)
    assert ad.dropout(a, 0.0, ad.generator(0)) is a


@settings(max_examples=40, deadline=None, derandomize=True)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=12))
def test_softmax_is_a_distribution(values):
    p = ad.softmax(ad.Tensor(values)).data
    assert np.all(p >= 0.0)
    assert abs(p.sum() - 1.0) < 1e-12


def test_multiple_uses_accumulate():
    x = ad.Tensor([3.0], requires_grad=True)
    y = ad.mul(x, x)            # x^2
    z = ad.add(y, ad.mul(x, ad.constant(2.0)))   # x^2 + 2x, d/dx = 2x + 2 = 8
    ad.backward(ad.sum_(z))
    assert np.allclose(x.grad, [8.0])


def test_no_grad_suppresses_tape():
    x = ad.Tensor([1.0], requires_grad=True)
    with ad.no_grad():
        y = ad.mul(x, x)
    assert y.node is None and not y.requires_grad


def test_nonfinite_raises():
    x = ad.Tensor([0.0])
    with pytest.raises(FloatingPointError):
        ad.log(x)


def test_backward_requires_scalar():
    x = ad.Tensor([1.0, 2.0], requires_grad=True)
    with pytest.raises(ValueError):
        ad.backward(ad.mul(x, x))


# --- clipping and Adam -------------------------------------------------------


def test_clip_scale_when_over_limit():
    grads = {"a": np.array([6.0, 8.0])}  # norm 10
    scale = ad.clip_grad_norm(grads, 5.0)
    assert scale == 0.5
    assert np.allclose(grads["a"], [3.0, 4.0])


def test_clip_noop_under_limit():
    grads = {"a": np.array([3.0])}
    assert ad.clip_grad_norm(grads, 5.0) == 1.0
    assert np.allclose(grads["a"], [3.0])


@settings(max_examples=40, deadline=None, derandomize=True)
@given(st.integers(0, 2 ** 32 - 1))
def test_clip_bounds_global_norm(seed):
    rng = np.random.default_rng(seed)
    grads = {f"g{i}": rng.normal(0, 10, rng.integers(1, 5)) for i in range(3)}
    ad.clip_grad_norm(grads, 5.0)
    norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    assert norm <= 5.0 + 1e-12


def test_adam_zero_gradient_keeps_params():
    p = ad.Tensor([1.0, -2.0], requires_grad=True)
    state = ad.AdamState()
    ad.adam_step({"p": p}, {"p": np.zeros(2)}, state, t=1)
    assert np.allclose(p.data, [1.0, -2.0])


def test_adam_first_step_hand_value():
    # m_hat = 1, v_hat = 1, update = lr * 1 / (1 + eps)
    p = ad.Tensor(1.0, requires_grad=True)
    state = ad.AdamState()
    ad.adam_step({"p": p}, {"p": np.asarray(1.0)}, state, t=1, lr=0.001)
    expected = 1.0 - 0.001 * 1.0 / (1.0 + 1e-8)
    assert abs(float(p.data) - expected) < 1e-15
    assert abs(float(p.data) - 0.999) < 1e-10


def test_adam_bitwise_deterministic():
    def run():
        rng = np.random.default_rng(5)
        p = ad.Tensor(rng.normal(0, 1, 8), requires_grad=True)
        state = ad.AdamState()
        for t in range(1, 20):
            g = rng.normal(0, 1, 8)
            ad.adam_step({"p": p}, {"p": g}, state, t=t)
        return p.data.tobytes()

    assert run() == run()
