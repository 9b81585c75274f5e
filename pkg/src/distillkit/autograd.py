"""Reverse-mode automatic differentiation on numpy arrays.

A Tensor wraps an ndarray; every operation records its parents and a backward
closure, so the implicit graph is a tape in creation order (which is already a
valid topological order). backward() walks the reachable subgraph in reverse
creation order and accumulates gradients into .grad.

Default precision is float32; gradient checking builds float64 graphs and all
operations preserve the input dtype.
"""

import itertools

import numpy as np

from . import kernels
from .kernels import ShapeError

PROB_FLOOR = 1e-12  # probabilities are clamped to [PROB_FLOOR, 1] before logs

_ids = itertools.count()


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "op", "parents",
                 "_backward", "id")

    def __init__(self, data, requires_grad=False, op="leaf", parents=(),
                 backward=None):
        data = np.asarray(data)
        if data.dtype not in (np.float32, np.float64):
            data = data.astype(np.float32)
        self.data = data
        self.grad = None
        self.requires_grad = requires_grad
        self.op = op
        self.parents = parents
        self._backward = backward
        self.id = next(_ids)

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, op={self.op!r})"

    def backward(self):
        """Backpropagate from this scalar node through the recorded graph."""
        if self.data.size != 1:
            raise ShapeError(
                f"backward() requires a scalar loss node, got shape {self.shape}")
        order = _reachable(self)
        self.grad = np.ones_like(self.data)
        for node in order:
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- small algebra used by tests and loss construction --------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, mul(other, -1.0) if isinstance(other, Tensor) else -other)

    def sum(self):
        return tsum(self)

    def mean(self):
        return tmean(self)


def _reachable(root):
    seen = {root.id}
    stack = [root]
    nodes = [root]
    while stack:
        node = stack.pop()
        for p in node.parents:
            if p.id not in seen:
                seen.add(p.id)
                stack.append(p)
                nodes.append(p)
    nodes.sort(key=lambda n: n.id, reverse=True)
    return nodes


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _accum(t, g):
    if not t.requires_grad:
        return
    if t.grad is None:
        # own copy: the same gradient array may feed several parents
        t.grad = np.array(g, dtype=t.data.dtype)
    else:
        t.grad += g


def _node(data, op, parents, backward):
    rg = any(p.requires_grad for p in parents)
    return Tensor(data, rg, op, tuple(parents) if rg else (),
                  backward if rg else None)


def zero_grad(params):
    for p in (params.values() if isinstance(params, dict) else params):
        p.grad = None


def backprop(loss, params):
    """Run reverse-mode AD from a scalar loss; return {name: gradient array}.

    Every entry of `params` gets exactly one gradient of matching shape
    (zeros when the parameter does not influence the loss).
    """
    zero_grad(params)
    loss.backward()
    grads = {}
    for name, p in params.items():
        grads[name] = p.grad if p.grad is not None else np.zeros_like(p.data)
    return grads


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def conv2d(x, w, stride=1, padding="same"):
    """Bias-free 2-D convolution; x is (Cin,H,W) or (B,Cin,H,W)."""
    x, w = as_tensor(x), as_tensor(w)
    single = x.data.ndim == 3
    xd = x.data[None] if single else x.data
    if xd.ndim != 4:
        raise ShapeError(f"conv2d input must be 3-D or 4-D, got {x.data.ndim}-D")
    if w.data.ndim != 4:
        raise ShapeError(f"conv2d kernels must be 4-D, got {w.data.ndim}-D")
    if stride < 1:
        raise ShapeError(f"stride must be >= 1, got {stride}")
    out, ctx = kernels.conv2d_forward(np.ascontiguousarray(xd), w.data,
                                      stride, padding)
    if single:
        out = out[0]

    def bwd(g):
        g4 = g[None] if single else g
        gx, gw = kernels.conv2d_backward(ctx, g4)
        _accum(x, gx[0] if single else gx)
        _accum(w, gw)

    return _node(out, "conv2d", (x, w), bwd)


def maxpool2d(x):
    """2x2 max pooling, stride 2, ceil mode; (C,H,W) or (B,C,H,W)."""
    x = as_tensor(x)
    single = x.data.ndim == 3
    xd = x.data[None] if single else x.data
    if xd.ndim != 4:
        raise ShapeError(f"maxpool2d input must be 3-D or 4-D, got {x.data.ndim}-D")
    H, W = xd.shape[2], xd.shape[3]
    out, idx = kernels.maxpool2d_forward(np.ascontiguousarray(xd))
    if single:
        out = out[0]

    def bwd(g):
        g4 = g[None] if single else g
        gx = kernels.maxpool2d_backward(np.ascontiguousarray(g4), idx, H, W)
        _accum(x, gx[0] if single else gx)

    return _node(out, "maxpool2d", (x,), bwd)


def dense(x, w):
    """Bias-free linear map; x (n,) or (B,n), w (m,n)."""
    x, w = as_tensor(x), as_tensor(w)
    single = x.data.ndim == 1
    xd = x.data[None] if single else x.data
    out = kernels.dense_forward(xd, w.data)
    if single:
        out = out[0]

    def bwd(g):
        g2 = g[None] if single else g
        gx, gw = kernels.dense_backward(xd, w.data, g2)
        _accum(x, gx[0] if single else gx)
        _accum(w, gw)

    return _node(out, "dense", (x, w), bwd)


def relu(x):
    x = as_tensor(x)
    out = kernels.relu_forward(x.data)

    def bwd(g):
        _accum(x, kernels.relu_backward(x.data, g))

    return _node(out, "relu", (x,), bwd)


def flatten(x):
    """Collapse everything but a leading batch axis; 3-D input -> 1-D."""
    x = as_tensor(x)
    if x.data.ndim <= 1:
        out = x.data.reshape(-1)
    elif x.data.ndim == 3:
        out = x.data.reshape(-1)
    else:
        out = x.data.reshape(x.data.shape[0], -1)

    def bwd(g):
        _accum(x, g.reshape(x.data.shape))

    return _node(out, "flatten", (x,), bwd)


def softmax(z):
    """Stable softmax over the last axis; rows sum to 1."""
    z = as_tensor(z)
    if not np.all(np.isfinite(z.data)):
        raise ShapeError("softmax requires finite logits")
    p = kernels.softmax_forward(z.data)

    def bwd(g):
        _accum(z, kernels.softmax_backward(p, g))

    return _node(p, "softmax", (z,), bwd)


def add(a, b):
    a = as_tensor(a)
    if isinstance(b, Tensor):
        if a.data.shape != b.data.shape:
            raise ShapeError(
                f"add shape mismatch: {a.data.shape} vs {b.data.shape}")
        out = a.data + b.data

        def bwd(g):
            _accum(a, g)
            _accum(b, g)

        return _node(out, "add", (a, b), bwd)

    out = a.data + b

    def bwd(g):
        _accum(a, g)

    return _node(out, "add", (a,), bwd)


def mul(a, b):
    a = as_tensor(a)
    if isinstance(b, Tensor):
        if a.data.shape != b.data.shape:
            raise ShapeError(
                f"mul shape mismatch: {a.data.shape} vs {b.data.shape}")
        out = a.data * b.data

        def bwd(g):
            _accum(a, g * b.data)
            _accum(b, g * a.data)

        return _node(out, "mul", (a, b), bwd)

    out = a.data * b

    def bwd(g):
        _accum(a, g * b)

    return _node(out, "mul", (a,), bwd)


def tsum(x):
    x = as_tensor(x)
    out = x.data.sum()

    def bwd(g):
        _accum(x, np.full_like(x.data, g))

    return _node(np.asarray(out), "sum", (x,), bwd)


def tmean(x):
    x = as_tensor(x)
    out = x.data.mean()

    def bwd(g):
        _accum(x, np.full_like(x.data, g / x.data.size))

    return _node(np.asarray(out), "mean", (x,), bwd)


def nll_loss(probs, labels):
    """Mean negative log-likelihood of hard labels under probability rows."""
    probs = as_tensor(probs)
    labels = np.asarray(labels)
    p = probs.data[None] if probs.data.ndim == 1 else probs.data
    y = labels.reshape(-1)
    B, C = p.shape
    if y.shape[0] != B:
        raise ShapeError(f"{y.shape[0]} labels for a batch of {B}")
    if y.min() < 0 or y.max() >= C:
        raise ShapeError(f"label out of range for {C} classes")
    pc = np.clip(p, PROB_FLOOR, 1.0)
    rows = np.arange(B)
    out = -np.log(pc[rows, y]).mean()

    def bwd(g):
        gp = np.zeros_like(p)
        inside = p[rows, y] >= PROB_FLOOR
        gp[rows, y] = np.where(inside, -g / (B * pc[rows, y]), 0.0)
        _accum(probs, gp[0] if probs.data.ndim == 1 else gp)

    return _node(np.asarray(out), "nll_loss", (probs,), bwd)
