"""Convolution, pooling and dense kernels.

The 3x3-style convolutions run as "canvas shift-GEMM": activations are packed
into a zero-padded channel-major canvas (C, B*Hc*Wc) and the kernel is applied
as one BLAS matmul per kernel offset on column-shifted views of that canvas.
Out-of-window products land only in canvas positions that are sliced away, so
no im2col matrix is ever materialized. Strided convolutions fall back to a
conventional im2col lowering.

Data-movement loops come from kernels_numba or kernels_numpy depending on the
active backend; the GEMMs are numpy/BLAS either way.
"""

import numpy as np

from . import backend

_mv = None  # mover module, bound by rebind()


def rebind():
    global _mv
    if backend.active_backend() == "numba":
        from . import kernels_numba as mv
    else:
        from . import kernels_numpy as mv
    _mv = mv


rebind()


class ShapeError(ValueError):
    """Raised when tensor shapes do not satisfy an operation's contract."""


def conv_padding(kh, kw, padding):
    if padding == "same":
        if kh % 2 == 0 or kw % 2 == 0:
            raise ShapeError(
                f"'same' padding requires odd kernel dims, got {kh}x{kw}")
        return (kh - 1) // 2, (kw - 1) // 2
    if padding == "valid":
        return 0, 0
    raise ShapeError(f"padding must be 'same' or 'valid', got {padding!r}")


def conv_output_hw(H, W, kh, kw, stride, padding):
    ph, pw = conv_padding(kh, kw, padding)
    Ho = (H + 2 * ph - kh) // stride + 1
    Wo = (W + 2 * pw - kw) // stride + 1
    if Ho < 1 or Wo < 1:
        raise ShapeError(
            f"convolution output would be empty: input {H}x{W}, "
            f"kernel {kh}x{kw}, stride {stride}, padding {padding}")
    return Ho, Wo


def conv2d_forward(x, w, stride=1, padding="same"):
    """x (B,Cin,H,W), w (Cout,Cin,kh,kw) -> (out (B,Cout,Ho,Wo), ctx)."""
    B, C, H, W = x.shape
    Co, Ci, kh, kw = w.shape
    if Ci != C:
        raise ShapeError(
            f"kernel expects {Ci} input channels, input has {C}")
    Ho, Wo = conv_output_hw(H, W, kh, kw, stride, padding)
    ph, pw = conv_padding(kh, kw, padding)

    if stride == 1:
        Hc, Wc = H + 2 * ph, W + 2 * pw
        L = Hc * Wc
        xc = np.zeros((C, B, Hc, Wc), dtype=x.dtype)
        _mv.pack_canvas(x, xc, ph, pw)
        xf = xc.reshape(C, B * L)
        Lg = B * L - ((kh - 1) * Wc + (kw - 1))
        wk = np.ascontiguousarray(w.transpose(2, 3, 0, 1))
        outf = np.zeros((Co, B * L), dtype=x.dtype)
        tmp = np.empty((Co, Lg), dtype=x.dtype)
        for ky in range(kh):
            for kx in range(kw):
                s = ky * Wc + kx
                np.matmul(wk[ky, kx], xf[:, s:s + Lg], out=tmp)
                outf[:, :Lg] += tmp
        out = _mv.extract_canvas(outf.reshape(Co, B, Hc, Wc), 0, 0, Ho, Wo)
        ctx = ("canvas", xc, w, stride, padding, (B, C, H, W))
        return out, ctx

    cols = _mv.im2col(x, kh, kw, stride, ph, pw)
    w2 = w.reshape(Co, -1)
    out = np.matmul(w2[None], cols).reshape(B, Co, Ho, Wo)
    ctx = ("cols", cols, w, stride, padding, (B, C, H, W))
    return out, ctx


def conv2d_backward(ctx, g):
    """g (B,Cout,Ho,Wo) -> (gx (B,Cin,H,W), gw like w)."""
    kind, saved, w, stride, padding, xshape = ctx
    B, C, H, W = xshape
    Co, Ci, kh, kw = w.shape
    ph, pw = conv_padding(kh, kw, padding)
    g = np.ascontiguousarray(g)

    if kind == "canvas":
        xc = saved
        Hc, Wc = H + 2 * ph, W + 2 * pw
        L = Hc * Wc
        Lg = B * L - ((kh - 1) * Wc + (kw - 1))
        xf = xc.reshape(C, B * L)
        gc = np.zeros((Co, B, Hc, Wc), dtype=g.dtype)
        _mv.pack_canvas(g, gc, 0, 0)
        gf = gc.reshape(Co, B * L)[:, :Lg]
        wk = np.ascontiguousarray(w.transpose(2, 3, 1, 0))  # (kh,kw,Ci,Co)
        gw = np.empty_like(w)
        gxf = np.zeros((C, B * L), dtype=g.dtype)
        tmp = np.empty((C, Lg), dtype=g.dtype)
        for ky in range(kh):
            for kx in range(kw):
                s = ky * Wc + kx
                gw[:, :, ky, kx] = gf @ xf[:, s:s + Lg].T
                np.matmul(wk[ky, kx], gf, out=tmp)
                gxf[:, s:s + Lg] += tmp
        gx = _mv.extract_canvas(gxf.reshape(C, B, Hc, Wc), ph, pw, H, W)
        return gx, gw

    cols = saved
    g2 = g.reshape(B, Co, -1)
    w2 = w.reshape(Co, -1)
    gw = np.matmul(g2, cols.transpose(0, 2, 1)).sum(axis=0).reshape(w.shape)
    gcols = np.matmul(w2.T[None], g2)
    gx = _mv.col2im(gcols, B, C, H, W, kh, kw, stride, ph, pw)
    return gx, gw


def maxpool2d_forward(x):
    """2x2/stride-2/ceil max pooling over (B,C,H,W)."""
    return _mv.maxpool_forward(x)


def maxpool2d_backward(g, idx, H, W):
    return _mv.maxpool_backward(g, idx, H, W)


def dense_forward(x, w):
    """x (B,n), w (m,n) -> (B,m); bias-free."""
    if x.shape[-1] != w.shape[1]:
        raise ShapeError(
            f"dense weights expect input length {w.shape[1]}, got {x.shape[-1]}")
    return x @ w.T


def dense_backward(x, w, g):
    return g @ w, g.T @ x


def relu_forward(x):
    return np.maximum(x, 0)


def relu_backward(x, g):
    return np.where(x > 0, g, 0).astype(g.dtype, copy=False)


def softmax_forward(z):
    """Row-wise stable softmax over the last axis."""
    m = z.max(axis=-1, keepdims=True)
    e = np.exp(z - m)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward(p, g):
    inner = (g * p).sum(axis=-1, keepdims=True)
    return p * (g - inner)
