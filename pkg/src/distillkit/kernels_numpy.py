"""Pure numpy implementations of the data-movement kernels."""

import numpy as np


def pack_canvas(x, xc, oy, ox):
    # x (B,C,H,W) into pre-zeroed canvas xc (C,B,Hc,Wc) at offset (oy,ox)
    H, W = x.shape[2], x.shape[3]
    xc[:, :, oy:oy + H, ox:ox + W] = x.transpose(1, 0, 2, 3)


def extract_canvas(outc, oy, ox, H, W):
    # interior of canvas (Co,B,Hc,Wc) back to contiguous (B,Co,H,W)
    return np.ascontiguousarray(
        outc[:, :, oy:oy + H, ox:ox + W].transpose(1, 0, 2, 3))


def maxpool_forward(x):
    # 2x2 window, stride 2, ceil mode; returns output and per-window argmax
    # code (dy*2+dx) for the backward scatter
    B, C, H, W = x.shape
    Ho, Wo = (H + 1) // 2, (W + 1) // 2
    if H % 2 or W % 2:
        xp = np.full((B, C, 2 * Ho, 2 * Wo), -np.inf, dtype=x.dtype)
        xp[:, :, :H, :W] = x
    else:
        xp = x
    win = xp.reshape(B, C, Ho, 2, Wo, 2).transpose(0, 1, 2, 4, 3, 5)
    win = win.reshape(B, C, Ho, Wo, 4)
    idx = win.argmax(axis=4).astype(np.uint8)
    out = np.take_along_axis(win, idx[..., None].astype(np.intp), axis=4)[..., 0]
    return np.ascontiguousarray(out), idx


def maxpool_backward(g, idx, H, W):
    B, C, Ho, Wo = g.shape
    gp = np.zeros((B, C, 2 * Ho, 2 * Wo), dtype=g.dtype)
    dy = (idx >> 1).astype(np.intp)
    dx = (idx & 1).astype(np.intp)
    bb, cc, yy, xx = np.indices((B, C, Ho, Wo), sparse=True)
    gp[bb, cc, 2 * yy + dy, 2 * xx + dx] = g
    return np.ascontiguousarray(gp[:, :, :H, :W])


def im2col(x, kh, kw, stride, ph, pw):
    # general-stride lowering; returns (B, C*kh*kw, Ho*Wo)
    B, C, H, W = x.shape
    Hp, Wp = H + 2 * ph, W + 2 * pw
    if ph or pw:
        xp = np.zeros((B, C, Hp, Wp), dtype=x.dtype)
        xp[:, :, ph:ph + H, pw:pw + W] = x
    else:
        xp = x
    Ho = (Hp - kh) // stride + 1
    Wo = (Wp - kw) // stride + 1
    s0, s1, s2, s3 = xp.strides
    v = np.lib.stride_tricks.as_strided(
        xp, (B, C, kh, kw, Ho, Wo),
        (s0, s1, s2, s3, s2 * stride, s3 * stride))
    return np.ascontiguousarray(v).reshape(B, C * kh * kw, Ho * Wo)


def col2im(gcols, B, C, H, W, kh, kw, stride, ph, pw):
    Hp, Wp = H + 2 * ph, W + 2 * pw
    Ho = (Hp - kh) // stride + 1
    Wo = (Wp - kw) // stride + 1
    gxp = np.zeros((B, C, Hp, Wp), dtype=gcols.dtype)
    gc = gcols.reshape(B, C, kh, kw, Ho, Wo)
    for ky in range(kh):
        for kx in range(kw):
            gxp[:, :, ky:ky + Ho * stride:stride,
                kx:kx + Wo * stride:stride] += gc[:, :, ky, kx]
    if ph or pw:
        return np.ascontiguousarray(gxp[:, :, ph:ph + H, pw:pw + W])
    return gxp
