"""Network layers with hand-written forward and backward passes.

Every forward returns ``(output, cache)``; the matching backward consumes
the cache and the upstream gradient. Arrays keep whatever float dtype the
caller supplies, so the same code runs in float32 for training and in
float64 for finite-difference verification. Inputs may carry a leading
batch axis or not; backward gradients mirror the forward input's layout.
"""

from __future__ import annotations

import numpy as np

from .tensor import ShapeError

__all__ = [
    "conv2d_forward",
    "conv2d_backward",
    "maxpool2x2",
    "maxpool2x2_backward",
    "batchnorm_forward",
    "batchnorm_backward",
    "dense_forward",
    "dense_backward",
    "relu_forward",
    "relu_backward",
    "lstm_cell_step",
    "lstm_cell_backward",
    "softmax",
    "softmax_backward",
    "conv_output_size",
    "glorot_uniform",
    "lstm_uniform",
]

BN_EPS = 1e-5
BN_MOMENTUM = 0.99


def conv_output_size(size: int, kernel: int, stride: int) -> int:
    """Spatial output extent of a valid (unpadded) convolution."""
    return (size - kernel) // stride + 1


def _promote(x, rank):
    """Add a singleton batch axis when ``x`` has rank ``rank - 1``."""
    x = np.asarray(x)
    if x.ndim == rank - 1:
        return x[None], True
    if x.ndim != rank:
        raise ShapeError(f"expected a rank-{rank - 1} or rank-{rank} array, got shape {x.shape}")
    return x, False


# ---------------------------------------------------------------------------
# Convolution


def conv2d_forward(x, w, b, stride: int):
    """Valid 2-D convolution.

    x: (C, H, W) or (N, C, H, W); w: (K, C, k, k); b: (K,).
    Output spatial extent is floor((H - k) / stride) + 1 per side.

    Float64 inputs accumulate taps in the direct convolution's row-major
    (channel, ky, kx) order, so results are bit-reproducible against a
    reference loop; float32 takes the BLAS matmul path.
    """
    x, squeezed = _promote(x, 4)
    w = np.asarray(w)
    b = np.asarray(b)
    if w.ndim != 4 or w.shape[2] != w.shape[3]:
        raise ShapeError(f"conv weights must be (K, C, k, k), got {w.shape}")
    n, c, h, wd = x.shape
    k_out, c_w, k, _ = w.shape
    if c_w != c:
        raise ShapeError(f"input has {c} channels but weights expect {c_w}")
    if b.shape != (k_out,):
        raise ShapeError(f"bias shape {b.shape} does not match {k_out} kernels")
    if h < k or wd < k:
        raise ShapeError(f"input {h}x{wd} smaller than kernel {k}x{k}")
    if stride < 1:
        raise ShapeError(f"stride must be >= 1, got {stride}")
    ho = conv_output_size(h, k, stride)
    wo = conv_output_size(wd, k, stride)

    x = np.ascontiguousarray(x)
    win = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(2, 3))
    win = win[:, :, ::stride, ::stride]  # (N, C, Ho, Wo, k, k)
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * k * k)
    if x.dtype == np.float64:
        y = np.zeros((n, k_out, ho, wo), dtype=x.dtype)
        for ci in range(c):
            for i in range(k):
                for j in range(k):
                    tap = x[:, ci, i : i + stride * ho : stride, j : j + stride * wo : stride]
                    y += tap[:, None] * w[None, :, ci, i, j, None, None]
        y += b[None, :, None, None]
    else:
        y = cols @ w.reshape(k_out, -1).T
        y += b
        y = y.reshape(n, ho, wo, k_out).transpose(0, 3, 1, 2)
    cache = (cols, x.shape, w, stride, (ho, wo), squeezed)
    return (y[0] if squeezed else y), cache


def conv2d_backward(dy, cache):
    """Gradients of a cached conv2d_forward: returns (dx, dw, db)."""
    if cache is None:
        raise ValueError("conv2d_backward: missing forward cache")
    cols, x_shape, w, stride, (ho, wo), squeezed = cache
    n, c, h, wd = x_shape
    k_out = w.shape[0]
    k = w.shape[2]
    dy = np.asarray(dy)
    if squeezed and dy.ndim == 3:
        dy = dy[None]
    if dy.shape != (n, k_out, ho, wo):
        raise ShapeError(f"upstream gradient shape {dy.shape} != {(n, k_out, ho, wo)}")

    dy_mat = dy.transpose(0, 2, 3, 1).reshape(-1, k_out)
    db = dy_mat.sum(axis=0)
    dw = (dy_mat.T @ cols).reshape(w.shape)
    dcols = dy_mat @ w.reshape(k_out, -1)
    dwin = dcols.reshape(n, ho, wo, c, k, k).transpose(0, 3, 1, 2, 4, 5)
    dx = np.zeros(x_shape, dtype=dy.dtype)
    for i in range(k):
        for j in range(k):
            dx[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += dwin[
                :, :, :, :, i, j
            ]
    return (dx[0] if squeezed else dx), dw, db


# ---------------------------------------------------------------------------
# 2x2 max pooling


def maxpool2x2(x):
    """Non-overlapping 2x2 max pooling.

    Returns (output, switches). Switches hold, for every output cell, the
    flat index into ``x.ravel()`` of the chosen maximum; ties resolve to the
    lowest flat index so the feature visualizer's unpooling is reproducible.
    """
    x = np.asarray(x)
    h, wd = x.shape[-2], x.shape[-1]
    if h < 2 or wd < 2:
        raise ShapeError(f"cannot 2x2-pool a {h}x{wd} input")
    ho, wo = h // 2, wd // 2
    lead = x.shape[:-2]
    x2 = np.ascontiguousarray(x).reshape(-1, h, wd)
    m = x2.shape[0]
    cells = x2[:, : 2 * ho, : 2 * wo].reshape(m, ho, 2, wo, 2)
    cells = cells.transpose(0, 1, 3, 2, 4).reshape(m, ho, wo, 4)
    arg = cells.argmax(axis=-1)  # first (lowest) index wins ties
    out = np.take_along_axis(cells, arg[..., None], axis=-1)[..., 0]
    di, dj = arg // 2, arg % 2
    iy = 2 * np.arange(ho)[None, :, None] + di
    ix = 2 * np.arange(wo)[None, None, :] + dj
    base = (np.arange(m) * h * wd)[:, None, None]
    switches = base + iy * wd + ix
    return out.reshape(*lead, ho, wo), switches.reshape(*lead, ho, wo)


def maxpool2x2_backward(dy, switches, x_shape):
    """Route upstream gradients to the positions recorded in ``switches``."""
    dy = np.asarray(dy)
    dx = np.zeros(int(np.prod(x_shape)), dtype=dy.dtype)
    np.add.at(dx, np.asarray(switches).ravel(), dy.ravel())
    return dx.reshape(x_shape)


# ---------------------------------------------------------------------------
# Batch normalization


def batchnorm_forward(x, gamma, beta, running_mean, running_var, train: bool,
                      momentum: float = BN_MOMENTUM, eps: float = BN_EPS):
    """Per-channel normalization over batch and spatial axes.

    In train mode the batch moments normalize and the running statistics are
    updated in place (keep factor ``momentum``); eval mode uses the running
    statistics only and returns no backward cache.
    """
    x, squeezed = _promote(x, 4)
    c = x.shape[1]
    for name, v in (("gamma", gamma), ("beta", beta)):
        if np.asarray(v).shape != (c,):
            raise ShapeError(f"{name} shape {np.asarray(v).shape} != ({c},)")
    gamma = np.asarray(gamma)
    beta = np.asarray(beta)
    if train:
        mean = x.mean(axis=(0, 2, 3))
        var = x.var(axis=(0, 2, 3))
        invstd = 1.0 / np.sqrt(var + eps)
        xhat = (x - mean[None, :, None, None]) * invstd[None, :, None, None]
        y = gamma[None, :, None, None] * xhat + beta[None, :, None, None]
        running_mean *= momentum
        running_mean += (1.0 - momentum) * mean
        running_var *= momentum
        running_var += (1.0 - momentum) * var
        m = x.shape[0] * x.shape[2] * x.shape[3]
        cache = (xhat, invstd, gamma, m, squeezed)
    else:
        invstd = 1.0 / np.sqrt(running_var + eps)
        y = gamma[None, :, None, None] * (x - running_mean[None, :, None, None]) \
            * invstd[None, :, None, None] + beta[None, :, None, None]
        cache = None
    return (y[0] if squeezed else y), cache


def batchnorm_backward(dy, cache):
    """Gradients of train-mode batch norm: returns (dx, dgamma, dbeta).

    The batch moments couple every element of a channel, so dx includes the
    mean/variance terms even for elements whose upstream gradient is zero.
    """
    if cache is None:
        raise ValueError("batchnorm_backward: missing forward cache (eval mode has none)")
    xhat, invstd, gamma, m, squeezed = cache
    dy = np.asarray(dy)
    if squeezed and dy.ndim == 3:
        dy = dy[None]
    dgamma = (dy * xhat).sum(axis=(0, 2, 3))
    dbeta = dy.sum(axis=(0, 2, 3))
    dxhat = dy * gamma[None, :, None, None]
    s1 = dxhat.sum(axis=(0, 2, 3), keepdims=True)
    s2 = (dxhat * xhat).sum(axis=(0, 2, 3), keepdims=True)
    dx = (invstd[None, :, None, None] / m) * (m * dxhat - s1 - xhat * s2)
    return (dx[0] if squeezed else dx), dgamma, dbeta


# ---------------------------------------------------------------------------
# Dense / ReLU


def dense_forward(x, w, b):
    """Affine map y = x @ w.T + b with w of shape (out, in)."""
    x, squeezed = _promote(x, 2)
    w = np.asarray(w)
    b = np.asarray(b)
    if x.shape[1] != w.shape[1]:
        raise ShapeError(f"input width {x.shape[1]} != weight fan-in {w.shape[1]}")
    if b.shape != (w.shape[0],):
        raise ShapeError(f"bias shape {b.shape} != ({w.shape[0]},)")
    y = x @ w.T + b
    return (y[0] if squeezed else y), (x, w, squeezed)


def dense_backward(dy, cache):
    if cache is None:
        raise ValueError("dense_backward: missing forward cache")
    x, w, squeezed = cache
    dy = np.asarray(dy)
    if squeezed and dy.ndim == 1:
        dy = dy[None]
    dx = dy @ w
    dw = dy.T @ x
    db = dy.sum(axis=0)
    return (dx[0] if squeezed else dx), dw, db


def relu_forward(x):
    x = np.asarray(x)
    mask = x > 0
    return x * mask, mask


def relu_backward(dy, mask):
    return np.asarray(dy) * mask


# ---------------------------------------------------------------------------
# LSTM cell


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def lstm_cell_step(x, h, c, wx, wh, b):
    """One LSTM step. Gate layout along the packed axis is [i, f, o, g].

    x: (N, D) input; h, c: (N, H) previous state; wx: (4H, D); wh: (4H, H);
    b: (4H,). Returns (h_new, c_new, cache); the cell's output is h_new.
    """
    x, sq = _promote(x, 2)
    h, _ = _promote(h, 2)
    c, _ = _promote(c, 2)
    wx = np.asarray(wx)
    wh = np.asarray(wh)
    b = np.asarray(b)
    hn = wh.shape[1]
    if wx.shape[0] != 4 * hn or b.shape != (4 * hn,):
        raise ShapeError(f"packed LSTM weights expect 4*{hn} rows, got wx {wx.shape}, b {b.shape}")
    if x.shape[1] != wx.shape[1]:
        raise ShapeError(f"input width {x.shape[1]} != wx fan-in {wx.shape[1]}")
    if h.shape[1] != hn or c.shape[1] != hn:
        raise ShapeError(f"state width {h.shape[1]}/{c.shape[1]} != {hn} units")
    z = x @ wx.T + h @ wh.T + b
    i = _sigmoid(z[:, :hn])
    f = _sigmoid(z[:, hn : 2 * hn])
    o = _sigmoid(z[:, 2 * hn : 3 * hn])
    g = np.tanh(z[:, 3 * hn :])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    cache = (x, h, c, i, f, o, g, tc, wx, wh, sq)
    return (h_new[0] if sq else h_new), (c_new[0] if sq else c_new), cache


def lstm_cell_backward(dh, dc, cache):
    """Backward of one LSTM step.

    dh, dc are the gradients flowing into h_new and c_new. Returns
    (dx, dh_prev, dc_prev, dwx, dwh, db).
    """
    if cache is None:
        raise ValueError("lstm_cell_backward: missing forward cache")
    x, h, c, i, f, o, g, tc, wx, wh, sq = cache
    dh = np.asarray(dh)
    dc = np.asarray(dc) if dc is not None else np.zeros_like(tc)
    if sq and dh.ndim == 1:
        dh = dh[None]
    if sq and dc.ndim == 1:
        dc = dc[None]
    do = dh * tc
    dc_total = dc + dh * o * (1.0 - tc * tc)
    df = dc_total * c
    dc_prev = dc_total * f
    di = dc_total * g
    dg = dc_total * i
    dz = np.concatenate(
        [di * i * (1.0 - i), df * f * (1.0 - f), do * o * (1.0 - o), dg * (1.0 - g * g)],
        axis=1,
    )
    dwx = dz.T @ x
    dwh = dz.T @ h
    db = dz.sum(axis=0)
    dx = dz @ wx
    dh_prev = dz @ wh
    if sq:
        return dx[0], dh_prev[0], dc_prev[0], dwx, dwh, db
    return dx, dh_prev, dc_prev, dwx, dwh, db


# ---------------------------------------------------------------------------
# Softmax


def softmax(v):
    """Numerically stable softmax along the last axis."""
    v = np.asarray(v)
    shifted = v - v.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward(dy, probs):
    """Gradient through softmax given its output ``probs``."""
    dy = np.asarray(dy)
    dot = (dy * probs).sum(axis=-1, keepdims=True)
    return probs * (dy - dot)


# ---------------------------------------------------------------------------
# Initialization


def glorot_uniform(rng, shape, fan_in: int, fan_out: int, dtype=np.float32):
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def lstm_uniform(rng, shape, dtype=np.float32, bound: float = 0.08):
    return rng.uniform(-bound, bound, size=shape).astype(dtype)
