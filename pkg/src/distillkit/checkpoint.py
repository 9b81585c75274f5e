"""Checkpoint container: text header + raw little-endian float32 payload.

Layout (header and payload separated by one blank line):

    distillkit-checkpoint 1
    meta stage=stage1 epoch=4 seed=0 config=1a2b3c
    arch 8
    <architecture DSL, 8 lines>
    params 2
    conv2 4x3x3x3 0
    dense6 2x64 432

    <raw '<f4' parameter payload>

Parameter table columns: name, shape (`x`-separated), byte offset into the
payload. Parameters are stored and reloaded as float32, so a save/load round
trip reproduces forward passes bitwise.
"""

import numpy as np

from .arch import parse_arch
from .autograd import Tensor
from .model import Model

MAGIC = "distillkit-checkpoint 1"


def save_checkpoint(path, model, meta=None):
    meta = dict(meta or {})
    meta.setdefault("seed", model.seed)
    arch_lines = model.spec.to_text().strip("\n").split("\n")
    names = list(model.params)
    header = [MAGIC]
    header.append("meta " + " ".join(
        f"{k}={v}" for k, v in sorted(meta.items())))
    header.append(f"arch {len(arch_lines)}")
    header.extend(arch_lines)
    header.append(f"params {len(names)}")
    offset = 0
    blobs = []
    for name in names:
        data = np.ascontiguousarray(model.params[name].data, dtype="<f4")
        shape = "x".join(str(d) for d in data.shape)
        header.append(f"{name} {shape} {offset}")
        blobs.append(data.tobytes())
        offset += len(blobs[-1])
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n\n").encode("utf-8"))
        for blob in blobs:
            fh.write(blob)
    return path


def load_checkpoint(path):
    """Returns (model, meta). Forward outputs match the saved model bitwise."""
    with open(path, "rb") as fh:
        raw = fh.read()
    sep = raw.find(b"\n\n")
    if sep < 0:
        raise ValueError(f"{path}: missing header/payload separator")
    lines = raw[:sep].decode("utf-8").split("\n")
    payload = raw[sep + 2:]
    if lines[0] != MAGIC:
        raise ValueError(f"{path}: bad magic {lines[0]!r}")
    if not lines[1].startswith("meta"):
        raise ValueError(f"{path}: missing meta line")
    meta = {}
    for tok in lines[1].split()[1:]:
        k, _, v = tok.partition("=")
        meta[k] = v
    pos = 2
    if not lines[pos].startswith("arch "):
        raise ValueError(f"{path}: missing arch block")
    n_arch = int(lines[pos].split()[1])
    pos += 1
    arch_lines = lines[pos:pos + n_arch]
    spec = parse_arch("\n".join(arch_lines))
    if arch_lines and arch_lines[0].startswith("# "):
        spec.name = arch_lines[0][2:].strip()  # to_text puts the name here
    pos += n_arch
    n_params = int(lines[pos].split()[1])
    pos += 1
    params = {}
    for line in lines[pos:pos + n_params]:
        name, shape_s, off_s = line.split()
        shape = tuple(int(d) for d in shape_s.split("x"))
        count = 1
        for d in shape:
            count *= d
        off = int(off_s)
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=off)
        params[name] = Tensor(arr.reshape(shape).copy(), requires_grad=True)
    seed = int(meta.get("seed", 0))
    return Model(spec, params, seed), meta
