"""Models: an architecture bound to named parameter tensors."""

import numpy as np

from . import autograd, kernels
from .arch import CONV_KERNEL, propagate_shapes
from .autograd import Tensor
from .kernels import ShapeError


class Model:
    """An ArchitectureSpec plus its parameter tensors.

    Parameters are named `<kind><layer-index>` (e.g. conv0, dense12) and are
    the only mutable state; forward passes never touch them.
    """

    def __init__(self, spec, params, seed):
        self.spec = spec
        self.params = params
        self.seed = seed

    def param_arrays(self):
        return {k: t.data for k, t in self.params.items()}

    def total_params(self):
        return sum(t.data.size for t in self.params.values())

    def copy(self):
        params = {k: Tensor(t.data.copy(), requires_grad=True)
                  for k, t in self.params.items()}
        return Model(self.spec, params, self.seed)


def fingerprint(model):
    """Short content hash of a model's architecture and parameter payload."""
    import hashlib
    h = hashlib.sha256()
    h.update(model.spec.to_text().encode("utf-8"))
    for name in sorted(model.params):
        h.update(name.encode("utf-8"))
        h.update(np.ascontiguousarray(model.params[name].data,
                                      dtype="<f4").tobytes())
    return h.hexdigest()[:16]


def param_shapes(spec):
    """Parameter name -> shape, in layer order, from shape propagation."""
    shapes = {}
    prev = tuple(spec.input_shape)
    for i, (layer, shape) in enumerate(propagate_shapes(spec)):
        if layer.kind == "conv":
            shapes[f"conv{i}"] = (layer.filters, prev[0], CONV_KERNEL, CONV_KERNEL)
        elif layer.kind == "dense":
            shapes[f"dense{i}"] = (layer.units, prev[0])
        prev = shape
    return shapes


def build_model(spec, seed, dtype=np.float32):
    """Allocate seeded parameters: zero-mean gaussians, std sqrt(2/fan_in)."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in param_shapes(spec).items():
        fan_in = int(np.prod(shape[1:]))
        std = np.sqrt(2.0 / fan_in)
        data = rng.normal(0.0, std, size=shape).astype(dtype)
        params[name] = Tensor(data, requires_grad=True)
    return Model(spec, params, seed)


def forward(model, batch):
    """Differentiable forward pass; returns the post-softmax Tensor.

    batch is (B,C,H,W) (or (C,H,W) for a single image), as array or Tensor.
    """
    x = autograd.as_tensor(batch)
    expect = tuple(model.spec.input_shape)
    got = x.shape[-3:] if x.data.ndim >= 3 else x.shape
    if tuple(got) != expect:
        raise ShapeError(
            f"model {model.spec.name} expects input {expect}, got {tuple(x.shape)}")
    for i, layer in enumerate(model.spec.layers):
        if layer.kind == "conv":
            x = autograd.conv2d(x, model.params[f"conv{i}"])
        elif layer.kind == "pool":
            x = autograd.maxpool2d(x)
        elif layer.kind == "relu":
            x = autograd.relu(x)
        elif layer.kind == "flatten":
            x = autograd.flatten(x)
        elif layer.kind == "dense":
            x = autograd.dense(x, model.params[f"dense{i}"])
        elif layer.kind == "softmax":
            x = autograd.softmax(x)
    return x


def predict_probs(model, batch, chunk=64):
    """Inference-only forward (no graph); batches are processed in chunks."""
    batch = np.asarray(batch)
    single = batch.ndim == 3
    if single:
        batch = batch[None]
    outs = []
    for lo in range(0, batch.shape[0], chunk):
        outs.append(_forward_arrays(model, batch[lo:lo + chunk])[-1][1])
    probs = np.concatenate(outs, axis=0)
    return probs[0] if single else probs


def forward_activations(model, batch):
    """Per-layer output shapes/arrays for one batch (inference only)."""
    return _forward_arrays(model, np.asarray(batch))


def _forward_arrays(model, x):
    if x.dtype not in (np.float32, np.float64):
        x = x.astype(np.float32)
    trace = []
    for i, layer in enumerate(model.spec.layers):
        if layer.kind == "conv":
            x, _ = kernels.conv2d_forward(
                np.ascontiguousarray(x), model.params[f"conv{i}"].data)
        elif layer.kind == "pool":
            x, _ = kernels.maxpool2d_forward(np.ascontiguousarray(x))
        elif layer.kind == "relu":
            x = kernels.relu_forward(x)
        elif layer.kind == "flatten":
            x = x.reshape(x.shape[0], -1)
        elif layer.kind == "dense":
            x = kernels.dense_forward(x, model.params[f"dense{i}"].data)
        elif layer.kind == "softmax":
            x = kernels.softmax_forward(x)
        trace.append((layer, x))
    return trace
