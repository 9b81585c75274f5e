"""Backend benchmark: numba @njit kernels vs the pure numpy fallback.

Times the data-movement kernels (max pooling, im2col/col2im lowering) and the
full convolution + training step, under both backends. The BLAS contractions
are shared by both paths, so deltas isolate the loop kernels.

Run:

    python benchmarks/bench_kernels.py [--repeats 5]

If numba is not installed only the numpy path is measured.
"""

import argparse
import statistics
import time

import numpy as np

from distillkit import backend, kernels
from distillkit.arch import simple_a
from distillkit.data import Image, ImageDataset
from distillkit.model import build_model
from distillkit.train import Hyper, train


def timeit(fn, repeats):
    durations = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        durations.append(time.perf_counter() - t0)
    return statistics.mean(durations), statistics.pstdev(durations)


def bench_maxpool(rng):
    x = rng.normal(size=(32, 40, 64, 64)).astype(np.float32)

    def run():
        out, idx = kernels.maxpool2d_forward(x)
        kernels.maxpool2d_backward(out, idx, 64, 64)

    return run


def bench_im2col(rng):
    x = rng.normal(size=(32, 20, 32, 32)).astype(np.float32)

    def run():
        cols = kernels._mv.im2col(x, 3, 3, 2, 1, 1)
        kernels._mv.col2im(cols, 32, 20, 32, 32, 3, 3, 2, 1, 1)

    return run


def bench_conv(rng):
    x = rng.normal(size=(32, 20, 64, 64)).astype(np.float32)
    w = rng.normal(size=(20, 20, 3, 3)).astype(np.float32)

    def run():
        out, ctx = kernels.conv2d_forward(x, w)
        kernels.conv2d_backward(ctx, out)

    return run


def bench_train_step(rng):
    imgs = ImageDataset([
        Image(rng.integers(0, 256, size=(3, 64, 64)).astype(np.uint8), i % 2)
        for i in range(32)])
    spec = simple_a(input_shape=(3, 64, 64))

    def run():
        model = build_model(spec, seed=0)
        train(model, imgs, "hard",
              Hyper(epochs=1, batch_size=32, lr=0.01, seed=0, eval_every=0))

    return run


BENCHES = [("maxpool fwd+bwd", bench_maxpool),
           ("im2col/col2im (stride 2)", bench_im2col),
           ("conv2d fwd+bwd (batch 32)", bench_conv),
           ("full train step (SimpleA@64)", bench_train_step)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    backends = ["numpy"] + (["numba"] if backend.HAVE_NUMBA else [])
    if not backend.HAVE_NUMBA:
        print("[info] numba not installed; measuring the numpy path only")

    results = {}
    for name in backends:
        backend.set_backend(name)
        rng = np.random.default_rng(0)
        for label, make in BENCHES:
            run = make(rng)
            run()  # warmup (JIT compile on the numba path)
            results[(label, name)] = timeit(run, args.repeats)

    width = max(len(label) for label, _ in BENCHES) + 2
    header = f"{'kernel':<{width}}" + "".join(f"{b + ' (ms)':>16}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, _ in BENCHES:
        row = f"{label:<{width}}"
        means = []
        for b in backends:
            mean, std = results[(label, b)]
            means.append(mean)
            row += f"{1e3 * mean:>10.1f}±{1e3 * std:<5.1f}"
        if len(means) == 2 and means[1] > 0:
            row += f"{means[0] / means[1]:>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
