"""Architecture DSL: parsing, shape propagation and the built-in model zoo.

A network is a line-oriented text spec, one layer per line:

    input 3 64 64
    classes 2
    conv 20        # 3x3 kernels, same padding, stride 1, no bias
    relu
    pool           # 2x2 max pool, stride 2, ceil rounding
    flatten
    dense 512
    relu
    dense 2
    softmax

`#` starts a comment. `input` and `classes` must appear before any layer.
"""

import math
from dataclasses import dataclass, field

CONV_KERNEL = 3  # every zoo network uses 3x3 kernels


class ArchError(ValueError):
    """Raised for unparsable or structurally invalid architecture text."""


@dataclass
class LayerSpec:
    kind: str               # conv | pool | dense | relu | flatten | softmax
    filters: int = 0        # conv only
    units: int = 0          # dense only

    def to_line(self):
        if self.kind == "conv":
            return f"conv {self.filters}"
        if self.kind == "dense":
            return f"dense {self.units}"
        return self.kind


@dataclass
class ArchitectureSpec:
    name: str
    input_shape: tuple      # (C, H, W)
    num_classes: int
    layers: list = field(default_factory=list)

    def to_text(self):
        lines = [f"# {self.name}",
                 "input {} {} {}".format(*self.input_shape),
                 f"classes {self.num_classes}"]
        lines += [l.to_line() for l in self.layers]
        return "\n".join(lines) + "\n"

    def shape_trail(self):
        """Per-layer output shapes, validating the whole network."""
        return propagate_shapes(self)


def propagate_shapes(spec):
    """Walk the layers symbolically; returns a list of (LayerSpec, shape).

    Conv/pool shapes are (C, H, W); flatten/dense/softmax shapes are (n,).
    Raises ArchError when any layer is fed an incompatible shape.
    """
    shape = tuple(spec.input_shape)
    if len(shape) != 3 or any(d < 1 for d in shape):
        raise ArchError(f"input shape must be C H W positive, got {shape}")
    trail = []
    for i, layer in enumerate(spec.layers):
        where = f"layer {i} ({layer.kind})"
        if layer.kind == "conv":
            if len(shape) != 3:
                raise ArchError(f"{where}: conv needs a C,H,W input, got {shape}")
            shape = (layer.filters, shape[1], shape[2])
        elif layer.kind == "pool":
            if len(shape) != 3:
                raise ArchError(f"{where}: pool needs a C,H,W input, got {shape}")
            shape = (shape[0], math.ceil(shape[1] / 2), math.ceil(shape[2] / 2))
        elif layer.kind == "relu":
            pass
        elif layer.kind == "flatten":
            shape = (_numel(shape),)
        elif layer.kind == "dense":
            if len(shape) != 1:
                raise ArchError(
                    f"{where}: dense needs a flattened input, got {shape}")
            shape = (layer.units,)
        elif layer.kind == "softmax":
            if len(shape) != 1:
                raise ArchError(
                    f"{where}: softmax needs a flat input, got {shape}")
        else:
            raise ArchError(f"{where}: unknown layer kind {layer.kind!r}")
        if any(d < 1 for d in shape):
            raise ArchError(f"{where}: shape underflow, got {shape}")
        trail.append((layer, shape))
    if not spec.layers or spec.layers[-1].kind != "softmax":
        raise ArchError("network must end with softmax")
    if trail[-1][1] != (spec.num_classes,):
        raise ArchError(
            f"final layer produces {trail[-1][1][0]} outputs, "
            f"expected {spec.num_classes} classes")
    return trail


def _numel(shape):
    n = 1
    for d in shape:
        n *= d
    return n


def parse_arch(text, name="network"):
    """Parse DSL text into a validated ArchitectureSpec."""
    input_shape = None
    num_classes = None
    layers = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        kind = tokens[0]

        def want(n):
            if len(tokens) != n + 1:
                raise ArchError(
                    f"line {lineno}: '{kind}' takes {n} argument(s): {raw!r}")

        def posint(s):
            try:
                v = int(s)
            except ValueError:
                raise ArchError(f"line {lineno}: expected integer, got {s!r}")
            if v < 1:
                raise ArchError(f"line {lineno}: expected positive integer, got {v}")
            return v

        if kind == "input":
            want(3)
            input_shape = tuple(posint(t) for t in tokens[1:])
        elif kind == "classes":
            want(1)
            num_classes = posint(tokens[1])
        elif kind == "conv":
            want(1)
            layers.append(LayerSpec("conv", filters=posint(tokens[1])))
        elif kind == "dense":
            want(1)
            layers.append(LayerSpec("dense", units=posint(tokens[1])))
        elif kind in ("pool", "relu", "flatten", "softmax"):
            want(0)
            layers.append(LayerSpec(kind))
        else:
            raise ArchError(f"line {lineno}: unknown token {kind!r}")

    if input_shape is None:
        raise ArchError("missing 'input C H W' line")
    if num_classes is None:
        raise ArchError("missing 'classes N' line")
    spec = ArchitectureSpec(name, input_shape, num_classes, layers)
    propagate_shapes(spec)
    return spec


def load_arch(path):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    import os
    return parse_arch(text, name=os.path.splitext(os.path.basename(path))[0])


# ---------------------------------------------------------------------------
# model zoo
# ---------------------------------------------------------------------------

SIMPLE_A_FILTERS = (20, 20, 30, 30, 40, 40, 160, 160, 250, 250)

# 13-conv VGG-16 feature plan; pools after blocks of 2,2,3,3,3
VGG16_FILTERS = (64, 64, 128, 128, 256, 256, 256,
                 512, 512, 512, 512, 512, 512)
VGG16_BLOCKS = (2, 2, 3, 3, 3)

DENSE_HIDDEN = 512


def _conv_stack(filter_plan, blocks):
    layers = []
    it = iter(filter_plan)
    for block in blocks:
        for _ in range(block):
            layers.append(LayerSpec("conv", filters=next(it)))
            layers.append(LayerSpec("relu"))
        layers.append(LayerSpec("pool"))
    return layers


def _head(num_classes):
    return [LayerSpec("flatten"),
            LayerSpec("dense", units=DENSE_HIDDEN),
            LayerSpec("relu"),
            LayerSpec("dense", units=num_classes),
            LayerSpec("softmax")]


def simple_a(input_shape=(3, 300, 300), num_classes=2):
    """The 10-conv SimpleA network (filters 20,20,30,30,40,40,160,160,250,250)."""
    layers = _conv_stack(SIMPLE_A_FILTERS, (2, 2, 2, 2, 2)) + _head(num_classes)
    spec = ArchitectureSpec("simple-a", tuple(input_shape), num_classes, layers)
    propagate_shapes(spec)
    return spec


def vgg_scaled(divisor, input_shape=(3, 64, 64), num_classes=2):
    """VGG-16 feature plan with every filter count divided by 1, 2 or 4."""
    if divisor not in (1, 2, 4):
        raise ArchError(f"divisor must be 1, 2 or 4, got {divisor}")
    plan = tuple(f // divisor for f in VGG16_FILTERS)
    layers = _conv_stack(plan, VGG16_BLOCKS) + _head(num_classes)
    name = "vgg" if divisor == 1 else f"vgg/{divisor}"
    spec = ArchitectureSpec(name, tuple(input_shape), num_classes, layers)
    propagate_shapes(spec)
    return spec


ZOO = {
    "simple-a": simple_a,
    "vgg": lambda input_shape=(3, 64, 64), num_classes=2: vgg_scaled(1, input_shape, num_classes),
    "vgg/2": lambda input_shape=(3, 64, 64), num_classes=2: vgg_scaled(2, input_shape, num_classes),
    "vgg/4": lambda input_shape=(3, 64, 64), num_classes=2: vgg_scaled(4, input_shape, num_classes),
}


def resolve_arch(ref, input_shape=None, num_classes=None):
    """Resolve 'zoo:<name>' or a DSL file path into an ArchitectureSpec."""
    if ref.startswith("zoo:"):
        name = ref[4:]
        if name not in ZOO:
            raise ArchError(
                f"unknown zoo model {name!r}; available: {sorted(ZOO)}")
        kwargs = {}
        if input_shape is not None:
            kwargs["input_shape"] = tuple(input_shape)
        if num_classes is not None:
            kwargs["num_classes"] = num_classes
        return ZOO[name](**kwargs)
    return load_arch(ref)
