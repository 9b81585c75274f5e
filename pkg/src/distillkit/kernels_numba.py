"""Numba @njit implementations of the data-movement kernels.

Same contracts and tie-break rules as kernels_numpy; outputs are expected to
match the numpy path bitwise.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _pack(x, xc, oy, ox):
    B, C, H, W = x.shape
    for c in range(C):
        for b in range(B):
            for y in range(H):
                src = x[b, c, y]
                dst = xc[c, b, y + oy]
                for i in range(W):
                    dst[i + ox] = src[i]


def pack_canvas(x, xc, oy, ox):
    _pack(x, xc, oy, ox)


@njit(cache=True)
def _extract(outc, out, oy, ox):
    B, Co, H, W = out.shape
    for co in range(Co):
        for b in range(B):
            for y in range(H):
                src = outc[co, b, y + oy]
                dst = out[b, co, y]
                for i in range(W):
                    dst[i] = src[i + ox]


def extract_canvas(outc, oy, ox, H, W):
    out = np.empty((outc.shape[1], outc.shape[0], H, W), dtype=outc.dtype)
    _extract(outc, out, oy, ox)
    return out


@njit(cache=True)
def _maxpool_fwd(x, out, idx):
    B, C, H, W = x.shape
    Ho, Wo = out.shape[2], out.shape[3]
    for b in range(B):
        for c in range(C):
            for y in range(Ho):
                for xo in range(Wo):
                    best = x[b, c, 2 * y, 2 * xo]
                    code = np.uint8(0)
                    for dy in range(2):
                        yy = 2 * y + dy
                        if yy >= H:
                            break
                        for dx in range(2):
                            xx = 2 * xo + dx
                            if xx >= W:
                                break
                            v = x[b, c, yy, xx]
                            if v > best:
                                best = v
                                code = np.uint8(dy * 2 + dx)
                    out[b, c, y, xo] = best
                    idx[b, c, y, xo] = code


def maxpool_forward(x):
    B, C, H, W = x.shape
    Ho, Wo = (H + 1) // 2, (W + 1) // 2
    out = np.empty((B, C, Ho, Wo), dtype=x.dtype)
    idx = np.empty((B, C, Ho, Wo), dtype=np.uint8)
    _maxpool_fwd(x, out, idx)
    return out, idx


@njit(cache=True)
def _maxpool_bwd(g, idx, gx):
    B, C, Ho, Wo = g.shape
    H, W = gx.shape[2], gx.shape[3]
    for b in range(B):
        for c in range(C):
            for y in range(Ho):
                for xo in range(Wo):
                    code = idx[b, c, y, xo]
                    yy = 2 * y + (code >> 1)
                    xx = 2 * xo + (code & 1)
                    gx[b, c, yy, xx] = g[b, c, y, xo]


def maxpool_backward(g, idx, H, W):
    B, C = g.shape[0], g.shape[1]
    gx = np.zeros((B, C, H, W), dtype=g.dtype)
    _maxpool_bwd(g, idx, gx)
    return gx


@njit(cache=True)
def _im2col(xp, cols, kh, kw, stride, Ho, Wo):
    B, C = xp.shape[0], xp.shape[1]
    for b in range(B):
        r = 0
        for c in range(C):
            for ky in range(kh):
                for kx in range(kw):
                    i = 0
                    for y in range(Ho):
                        src = xp[b, c, y * stride + ky]
                        for x in range(Wo):
                            cols[b, r, i] = src[x * stride + kx]
                            i += 1
                    r += 1


def im2col(x, kh, kw, stride, ph, pw):
    B, C, H, W = x.shape
    Hp, Wp = H + 2 * ph, W + 2 * pw
    if ph or pw:
        xp = np.zeros((B, C, Hp, Wp), dtype=x.dtype)
        xp[:, :, ph:ph + H, pw:pw + W] = x
    else:
        xp = x
    Ho = (Hp - kh) // stride + 1
    Wo = (Wp - kw) // stride + 1
    cols = np.empty((B, C * kh * kw, Ho * Wo), dtype=x.dtype)
    _im2col(xp, cols, kh, kw, stride, Ho, Wo)
    return cols


@njit(cache=True)
def _col2im(gcols, gxp, kh, kw, stride, Ho, Wo):
    B, C = gxp.shape[0], gxp.shape[1]
    for b in range(B):
        r = 0
        for c in range(C):
            for ky in range(kh):
                for kx in range(kw):
                    i = 0
                    for y in range(Ho):
                        dst = gxp[b, c, y * stride + ky]
                        for x in range(Wo):
                            dst[x * stride + kx] += gcols[b, r, i]
                            i += 1
                    r += 1


def col2im(gcols, B, C, H, W, kh, kw, stride, ph, pw):
    Hp, Wp = H + 2 * ph, W + 2 * pw
    Ho = (Hp - kh) // stride + 1
    Wo = (Wp - kw) // stride + 1
    gxp = np.zeros((B, C, Hp, Wp), dtype=gcols.dtype)
    _col2im(gcols, gxp, kh, kw, stride, Ho, Wo)
    if ph or pw:
        return np.ascontiguousarray(gxp[:, :, ph:ph + H, pw:pw + W])
    return gxp
