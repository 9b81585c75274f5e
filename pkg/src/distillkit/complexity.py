"""Static model-complexity analysis: per-layer parameter and feature-map counts."""

import io
from dataclasses import dataclass

from .arch import CONV_KERNEL, propagate_shapes


@dataclass
class LayerReport:
    layer_name: str
    kind: str
    param_count: int
    feature_map_shape: tuple
    feature_map_elements: int


@dataclass
class ComplexityReport:
    model_name: str
    layers: list
    total_params: int
    peak_feature_map_elements: int
    total_feature_map_elements: int


def analyze(spec):
    """Symbolic per-layer complexity; no tensors are allocated."""
    rows = []
    prev = tuple(spec.input_shape)
    for i, (layer, shape) in enumerate(propagate_shapes(spec)):
        if layer.kind == "conv":
            params = layer.filters * prev[0] * CONV_KERNEL * CONV_KERNEL
        elif layer.kind == "dense":
            params = layer.units * prev[0]
        else:
            params = 0
        elements = 1
        for d in shape:
            elements *= d
        rows.append(LayerReport(f"{layer.kind}{i}", layer.kind, params,
                                tuple(shape), elements))
        prev = shape
    return ComplexityReport(
        model_name=spec.name,
        layers=rows,
        total_params=sum(r.param_count for r in rows),
        peak_feature_map_elements=max(r.feature_map_elements for r in rows),
        total_feature_map_elements=sum(r.feature_map_elements for r in rows),
    )


def _fmt_shape(shape):
    if len(shape) == 1:
        return str(shape[0])
    if len(shape) == 3 and shape[1] == shape[2]:
        return f"{shape[0]}x{shape[1]}^2"
    return "x".join(str(d) for d in shape)


def report_text(report, bytes_per_element=4):
    """Table-style text rendering of a single model's report."""
    out = io.StringIO()
    out.write(f"model: {report.model_name}\n")
    out.write(f"{'layer':<12}{'kind':<9}{'params':>12}{'feature map':>16}"
              f"{'elements':>12}\n")
    for r in report.layers:
        out.write(f"{r.layer_name:<12}{r.kind:<9}{r.param_count:>12,}"
                  f"{_fmt_shape(r.feature_map_shape):>16}"
                  f"{r.feature_map_elements:>12,}\n")
    out.write(f"total parameters:      {report.total_params:,}\n")
    out.write(f"peak feature map:      {report.peak_feature_map_elements:,} elements"
              f" ({report.peak_feature_map_elements * bytes_per_element:,} bytes)\n")
    out.write(f"total feature map:     {report.total_feature_map_elements:,} elements"
              f" ({report.total_feature_map_elements * bytes_per_element:,} bytes)\n")
    return out.getvalue()


def compare(reports):
    """Rank models by total parameters (descending, stable).

    Returns (rows, text, csv) where rows are
    (model_name, total_params, total_feature_map_elements).
    """
    if not reports:
        raise ValueError("compare() needs at least one report")
    order = sorted(range(len(reports)),
                   key=lambda i: (-reports[i].total_params, i))
    rows = [(reports[i].model_name,
             reports[i].total_params,
             reports[i].total_feature_map_elements) for i in order]
    width = max(len(r[0]) for r in rows) + 2
    lines = [f"{'model':<{width}}{'parameters':>14}{'feature-map elems':>20}"]
    for name, p, f in rows:
        lines.append(f"{name:<{width}}{p:>14,}{f:>20,}")
    text = "\n".join(lines) + "\n"
    csv = "model,total_params,total_feature_map_elements\n" + "".join(
        f"{name},{p},{f}\n" for name, p, f in rows)
    return rows, text, csv
