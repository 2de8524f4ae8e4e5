"""Reverse-mode automatic differentiation over dense float64 arrays.

Dynamic-tape design: each differentiable operation links its output
tensors to a TapeNode holding the input references, cached forward
values (inside the backward closure) and the backward rule.  Calling
``backward`` on a scalar walks the tape in reverse topological order.
Every op validates that its output is finite; NaN/Inf is an error.

A tape is confined to one thread; independent tapes may run in parallel.
``no_grad`` disables recording (used for decoding and finite differences).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

_state = threading.local()


def _enabled() -> bool:
    return getattr(_state, "enabled", True)


class no_grad:
    """Context manager that suspends tape recording on this thread."""

    def __enter__(self):
        self._prev = _enabled()
        _state.enabled = False
        return self

    def __exit__(self, *exc):
        _state.enabled = self._prev
        return False


class TapeNode:
    __slots__ = ("op", "inputs", "outputs", "backward_rule")

    def __init__(self, op, inputs, outputs, backward_rule):
        self.op = op
        self.inputs = inputs
        self.outputs = outputs
        self.backward_rule = backward_rule


class Tensor:
    """A dense float64 array, optionally attached to the tape."""

    __slots__ = ("data", "grad", "node", "out_index", "requires_grad")

    def __init__(self, data, requires_grad=False):
        arr = np.asarray(data, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError("non-finite values in tensor literal")
        self.data = arr
        self.grad = None
        self.node = None
        self.out_index = 0
        self.requires_grad = bool(requires_grad)

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # light operator sugar, mainly for tests
    def __add__(self, other):
        return add(self, _wrap(other))

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, _wrap(other))

    def backward(self):
        backward(self)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def constant(x) -> Tensor:
    return _wrap(x)


def _check(op: str, arr: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"non-finite values produced by op {op!r}")
    return arr


def _make(op, inputs, data, backward_rule) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = _check(op, np.asarray(data, dtype=np.float64))
    out.grad = None
    out.node = None
    out.out_index = 0
    out.requires_grad = False
    if _enabled() and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out.node = TapeNode(op, inputs, [out], backward_rule)
    return out


def _make_multi(op, inputs, datas, backward_rule):
    outs = []
    for i, data in enumerate(datas):
        t = Tensor.__new__(Tensor)
        t.data = _check(op, np.asarray(data, dtype=np.float64))
        t.grad = None
        t.node = None
        t.out_index = i
        t.requires_grad = False
        outs.append(t)
    if _enabled() and any(t.requires_grad for t in inputs):
        node = TapeNode(op, inputs, outs, backward_rule)
        for t in outs:
            t.requires_grad = True
            t.node = node
    return tuple(outs)


def backward(loss: Tensor) -> None:
    """Accumulate gradients of a scalar into every tensor on its tape."""
    if loss.data.shape != ():
        raise ValueError("backward requires a scalar")
    if loss.node is None:
        return
    # iterative reverse topological order over tape nodes
    order, visited = [], set()
    stack = [(loss.node, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for t in node.inputs:
            if t.node is not None and id(t.node) not in visited:
                stack.append((t.node, False))

    loss.grad = np.ones((), dtype=np.float64)
    for node in reversed(order):
        out_grads = [t.grad for t in node.outputs]
        if all(g is None for g in out_grads):
            continue
        in_grads = node.backward_rule(out_grads)
        for t, g in zip(node.inputs, in_grads):
            if g is None or not t.requires_grad:
                continue
            if t.grad is None:
                t.grad = np.zeros_like(t.data)
            t.grad += g


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    if grad.shape == tuple(shape):
        return grad
    # sum over prepended axes, then over broadcast axes of extent 1
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# --- arithmetic -----------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    def rule(gs):
        g = gs[0]
        return (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape))
    return _make("add", (a, b), a.data + b.data, rule)


def sub(a: Tensor, b: Tensor) -> Tensor:
    def rule(gs):
        g = gs[0]
        return (_unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape))
    return _make("sub", (a, b), a.data - b.data, rule)


def mul(a: Tensor, b: Tensor) -> Tensor:
    da, db = a.data, b.data
    def rule(gs):
        g = gs[0]
        return (_unbroadcast(g * db, da.shape), _unbroadcast(g * da, db.shape))
    return _make("mul", (a, b), da * db, rule)


def neg(a: Tensor) -> Tensor:
    return _make("neg", (a,), -a.data, lambda gs: (-gs[0],))


def scale(a: Tensor, s: float) -> Tensor:
    return _make("scale", (a,), a.data * s, lambda gs: (gs[0] * s,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    da, db = a.data, b.data
    def rule(gs):
        g = gs[0]
        if da.ndim == 1 and db.ndim == 1:          # dot -> scalar
            return (g * db, g * da)
        if da.ndim == 1:                            # (k,) @ (k,n) -> (n,)
            return (db @ g, np.outer(da, g))
        if db.ndim == 1:                            # (m,k) @ (k,) -> (m,)
            return (np.outer(g, db), da.T @ g)
        return (g @ db.T, da.T @ g)                 # (m,k) @ (k,n)
    return _make("matmul", (a, b), da @ db, rule)


# --- shape ops ------------------------------------------------------------

def concat(tensors, axis: int = 0) -> Tensor:
    tensors = tuple(tensors)
    sizes = [t.data.shape[axis] for t in tensors]
    def rule(gs):
        g = gs[0]
        splits = np.cumsum(sizes)[:-1]
        return tuple(np.split(g, splits, axis=axis))
    return _make("concat", tensors, np.concatenate([t.data for t in tensors], axis=axis), rule)


def reshape(a: Tensor, shape) -> Tensor:
    old = a.data.shape
    return _make("reshape", (a,), a.data.reshape(shape), lambda gs: (gs[0].reshape(old),))


def transpose(a: Tensor) -> Tensor:
    return _make("transpose", (a,), a.data.T, lambda gs: (gs[0].T,))


def narrow(a: Tensor, axis: int, start: int, length: int) -> Tensor:
    key = tuple(slice(None) if i != axis else slice(start, start + length)
                for i in range(a.data.ndim))
    def rule(gs):
        g = np.zeros_like(a.data)
        g[key] = gs[0]
        return (g,)
    return _make("narrow", (a,), a.data[key], rule)


def rows(a: Tensor, indices) -> Tensor:
    idx = np.asarray(indices, dtype=np.intp)
    def rule(gs):
        g = np.zeros_like(a.data)
        np.add.at(g, idx, gs[0])
        return (g,)
    return _make("rows", (a,), a.data[idx], rule)


def stack_rows(tensors) -> Tensor:
    """Stack 1-d tensors into a matrix, one per row."""
    return concat([reshape(t, (1, t.data.shape[0])) for t in tensors], axis=0)


# --- pointwise nonlinearities ----------------------------------------------

def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return _make("tanh", (a,), out, lambda gs: (gs[0] * (1.0 - out * out),))


def sigmoid(a: Tensor) -> Tensor:
    out = 1.0 / (1.0 + np.exp(-a.data))
    return _make("sigmoid", (a,), out, lambda gs: (gs[0] * out * (1.0 - out),))


def exp(a: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        out = np.exp(a.data)
    return _make("exp", (a,), out, lambda gs: (gs[0] * out,))


def log(a: Tensor) -> Tensor:
    da = a.data
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(da)
    return _make("log", (a,), out, lambda gs: (gs[0] / da,))


def elu(a: Tensor, alpha: float = 1.0) -> Tensor:
    da = a.data
    out = np.where(da > 0.0, da, alpha * (np.exp(da) - 1.0))
    def rule(gs):
        return (gs[0] * np.where(da > 0.0, 1.0, out + alpha),)
    return _make("elu", (a,), out, rule)


def clamp_min(a: Tensor, floor: float) -> Tensor:
    da = a.data
    def rule(gs):
        return (gs[0] * (da >= floor),)
    return _make("clamp_min", (a,), np.maximum(da, floor), rule)


def minimum(a: Tensor, b: Tensor) -> Tensor:
    da, db = a.data, b.data
    take_a = da <= db  # ties route to the first argument
    def rule(gs):
        g = gs[0]
        return (_unbroadcast(g * take_a, da.shape), _unbroadcast(g * ~take_a, db.shape))
    return _make("minimum", (a, b), np.minimum(da, db), rule)


def maximum(a: Tensor, b: Tensor) -> Tensor:
    da, db = a.data, b.data
    take_a = da >= db
    def rule(gs):
        g = gs[0]
        return (_unbroadcast(g * take_a, da.shape), _unbroadcast(g * ~take_a, db.shape))
    return _make("maximum", (a, b), np.maximum(da, db), rule)


# --- reductions -------------------------------------------------------------

def sum_(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    shape = a.data.shape
    def rule(gs):
        g = gs[0]
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)
    return _make("sum", (a,), a.data.sum(axis=axis, keepdims=keepdims), rule)


def mean_(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    shape = a.data.shape
    count = a.data.size if axis is None else shape[axis]
    def rule(gs):
        g = gs[0]
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape) / count,)
    return _make("mean", (a,), a.data.mean(axis=axis, keepdims=keepdims), rule)


def amax(a: Tensor, axis: int) -> Tensor:
    """Max-pool along one axis; gradient flows to the first argmax."""
    da = a.data
    out = da.max(axis=axis)
    idx = da.argmax(axis=axis)
    def rule(gs):
        g = np.zeros_like(da)
        np.put_along_axis(g, np.expand_dims(idx, axis),
                          np.expand_dims(gs[0], axis), axis=axis)
        return (g,)
    return _make("amax", (a,), out, rule)


# --- softmax family ----------------------------------------------------------

def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)
    def rule(gs):
        g = gs[0]
        dot = (g * out).sum(axis=axis, keepdims=True)
        return (out * (g - dot),)
    return _make("softmax", (a,), out, rule)


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse
    def rule(gs):
        g = gs[0]
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)
    return _make("log_softmax", (a,), out, rule)


# --- stochastic / recurrent ---------------------------------------------------

def dropout(a: Tensor, p: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout with a train-mode mask from the given generator."""
    if p <= 0.0:
        return a
    if p >= 1.0:
        raise ValueError("dropout rate must be < 1")
    mask = (rng.random(a.data.shape) >= p) / (1.0 - p)
    return _make("dropout", (a,), a.data * mask, lambda gs: (gs[0] * mask,))


def lstm_cell(x: Tensor, h: Tensor, c: Tensor, W: Tensor, b: Tensor):
    """One LSTM step; gate order i, f, g, o; returns (h', c').

    ``W`` has shape (4H, I+H) applied to [x; h], ``b`` has shape (4H,).
    """
    H = h.data.shape[0]
    xh = np.concatenate([x.data, h.data])
    z = W.data @ xh + b.data
    i = 1.0 / (1.0 + np.exp(-z[:H]))
    f = 1.0 / (1.0 + np.exp(-z[H:2 * H]))
    g = np.tanh(z[2 * H:3 * H])
    o = 1.0 / (1.0 + np.exp(-z[3 * H:]))
    c2 = f * c.data + i * g
    tc2 = np.tanh(c2)
    h2 = o * tc2

    def rule(gs):
        dh2 = gs[0] if gs[0] is not None else 0.0
        dc2 = gs[1] if gs[1] is not None else 0.0
        dc2 = dc2 + dh2 * o * (1.0 - tc2 * tc2)
        do = dh2 * tc2
        di = dc2 * g
        df = dc2 * c.data
        dg = dc2 * i
        dc = dc2 * f
        dz = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            dg * (1.0 - g * g),
            do * o * (1.0 - o),
        ])
        dW = np.outer(dz, xh)
        dxh = W.data.T @ dz
        I = x.data.shape[0]
        return (dxh[:I], dxh[I:], dc, dW, dz)

    return _make_multi("lstm_cell", (x, h, c, W, b), (h2, c2), rule)


def bilinear_full(x1: Tensor, U: Tensor, x2: Tensor) -> Tensor:
    """All-pairs bilinear scores: (K,D1) x (L,D1,D2) x (T,D2) -> (K,T,L)."""
    d1, dU, d2 = x1.data, U.data, x2.data
    out = np.einsum("ki,lij,tj->ktl", d1, dU, d2, optimize=True)
    def rule(gs):
        g = gs[0]
        dx1 = np.einsum("ktl,lij,tj->ki", g, dU, d2, optimize=True)
        dU_ = np.einsum("ki,ktl,tj->lij", d1, g, d2, optimize=True)
        dx2 = np.einsum("ki,lij,ktl->tj", d1, dU, g, optimize=True)
        return (dx1, dU_, dx2)
    return _make("bilinear_full", (x1, U, x2), out, rule)


# --- gradient checking and optimization ----------------------------------------

def grad_check(loss_fn, params: dict, h: float = 1e-5, tol: float = 1e-4,
               verbose: bool = False) -> float:
    """Compare reverse-mode gradients of a scalar loss to central differences.

    ``loss_fn`` must be deterministic and close over ``params``.  Returns
    the worst relative error max(|ad - fd|) / max(|ad|, |fd|, 1) over all
    parameter entries.  Raises FloatingPointError on a non-finite loss.
    """
    for p in params.values():
        p.grad = None
    loss = loss_fn()
    backward(loss)
    analytic = {name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
                for name, p in params.items()}

    worst = 0.0
    for name, p in params.items():
        flat = p.data.ravel()
        ref = analytic[name].ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            with no_grad():
                f_plus = float(loss_fn().data)
            flat[i] = orig - h
            with no_grad():
                f_minus = float(loss_fn().data)
            flat[i] = orig
            fd = (f_plus - f_minus) / (2.0 * h)
            err = abs(fd - ref[i]) / max(abs(fd), abs(ref[i]), 1.0)
            if err > worst:
                worst = err
                if verbose and err > tol:
                    print(f"grad_check: {name}[{i}] analytic={ref[i]:.6g} fd={fd:.6g} err={err:.3g}")
    return worst


def clip_grad_norm(grads: dict, max_norm: float) -> float:
    """Scale a named gradient dict so its global L2 norm is at most max_norm."""
    if max_norm <= 0:
        raise ValueError("max_norm must be positive")
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    norm = float(np.sqrt(total))
    if norm <= max_norm or norm == 0.0:
        return 1.0
    factor = max_norm / norm
    for g in grads.values():
        g *= factor
    return factor


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState, t: int,
              lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> None:
    """Standard ADAM update with bias correction, in place on params."""
    if t < 1:
        raise ValueError("step count must be >= 1")
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        m = state.m.setdefault(name, np.zeros_like(p.data))
        v = state.v.setdefault(name, np.zeros_like(p.data))
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        p.data -= lr * m_hat / (np.sqrt(v_hat) + eps)


def generator(seed: int) -> np.random.Generator:
    """The project-wide seedable 64-bit PRNG (PCG64)."""
    return np.random.Generator(np.random.PCG64(seed))
