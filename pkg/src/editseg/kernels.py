"""Differentiable neural-network kernels built on the autodiff core.

Covers everything the segmentation model needs: embedding lookup, a masked
(bi)LSTM with hand-rolled backprop-through-time, 3x3 same-padded convolution,
2x2 max pooling, 2x2 stride-2 transposed convolution, batch normalization,
affine layers, weighted cross-entropy, Adam, and a finite-difference
gradient checker. No ML framework underneath, just numpy.

Spatial ops accept either a single example ``(C, H, W)`` or a batch
``(B, C, H, W)``; single examples are treated as batches of one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


# ---------------------------------------------------------------------------
# initialization


def xavier_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> Tensor:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=shape), requires_grad=True)


def zeros_param(shape) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)


def embedding_init(rng: np.random.Generator, vocab: int, dim: int) -> Tensor:
    return Tensor(rng.normal(0.0, 0.1, size=(vocab, dim)), requires_grad=True)


# ---------------------------------------------------------------------------
# embedding


def embedding_lookup(table: Tensor, ids) -> Tensor:
    """Gather rows of ``table`` by integer ids; grad scatter-adds into rows."""
    ids = np.asarray(ids, dtype=np.int64)
    vocab = table.data.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= vocab):
        bad = ids[(ids < 0) | (ids >= vocab)][0]
        raise IndexError(f"embedding id {int(bad)} out of range for vocab of {vocab}")
    return table[ids]


# ---------------------------------------------------------------------------
# LSTM


@dataclass
class LSTMParams:
    """One direction: input and recurrent weights plus bias, gate order i,f,g,o."""

    w_ih: Tensor  # (E, 4H)
    w_hh: Tensor  # (H, 4H)
    b: Tensor  # (4H,)

    def tensors(self):
        return [self.w_ih, self.w_hh, self.b]


@dataclass
class BiLSTMParams:
    fwd: LSTMParams
    bwd: LSTMParams

    def tensors(self):
        return self.fwd.tensors() + self.bwd.tensors()


def lstm_params_init(rng: np.random.Generator, input_dim: int, hidden_dim: int) -> LSTMParams:
    return LSTMParams(
        w_ih=xavier_uniform(rng, (input_dim, 4 * hidden_dim), input_dim, 4 * hidden_dim),
        w_hh=xavier_uniform(rng, (hidden_dim, 4 * hidden_dim), hidden_dim, 4 * hidden_dim),
        b=zeros_param(4 * hidden_dim),
    )


def bilstm_params_init(rng: np.random.Generator, input_dim: int, hidden_dim: int) -> BiLSTMParams:
    return BiLSTMParams(
        fwd=lstm_params_init(rng, input_dim, hidden_dim),
        bwd=lstm_params_init(rng, input_dim, hidden_dim),
    )


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def lstm(x: Tensor, params: LSTMParams, lengths=None, reverse: bool = False) -> Tensor:
    """Masked unidirectional LSTM over ``x`` of shape (B, L, E) -> (B, L, H).

    Positions at or beyond an example's length produce zero output and carry
    the hidden state through unchanged, so right-padded batches give exactly
    the unpadded per-example results. The whole scan is one graph node with a
    hand-written BPTT backward.
    """
    xd = x.data
    B, L, E = xd.shape
    H = params.w_hh.data.shape[0]
    if lengths is None:
        lengths = np.full(B, L, dtype=np.int64)
    else:
        lengths = np.asarray(lengths, dtype=np.int64)
    mask = (np.arange(L)[None, :] < lengths[:, None]).astype(np.float64)  # (B, L)

    w_ih, w_hh, b = params.w_ih, params.w_hh, params.b
    order = range(L - 1, -1, -1) if reverse else range(L)

    h = np.zeros((B, H))
    c = np.zeros((B, H))
    out = np.zeros((B, L, H))
    cache = []
    for t in order:
        m = mask[:, t : t + 1]
        z = xd[:, t] @ w_ih.data + h @ w_hh.data + b.data
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H : 2 * H])
        g = np.tanh(z[:, 2 * H : 3 * H])
        o = _sigmoid(z[:, 3 * H :])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        out[:, t] = m * h_new
        cache.append((t, m, h, c, i, f, g, o, tc))
        c = m * c_new + (1.0 - m) * c
        h = m * h_new + (1.0 - m) * h

    def factory(node):
        def backward():
            dout = node.grad
            dh = np.zeros((B, H))
            dc = np.zeros((B, H))
            dw_ih = np.zeros_like(w_ih.data) if w_ih.requires_grad else None
            dw_hh = np.zeros_like(w_hh.data) if w_hh.requires_grad else None
            db = np.zeros_like(b.data) if b.requires_grad else None
            dx = np.zeros_like(xd) if x.requires_grad else None
            for t, m, h_prev, c_prev, i, f, g, o, tc in reversed(cache):
                dh_new = m * (dh + dout[:, t])
                dc_new = m * dc + dh_new * o * (1.0 - tc * tc)
                do = dh_new * tc
                df = dc_new * c_prev
                di = dc_new * g
                dg = dc_new * i
                dz = np.concatenate(
                    [
                        di * i * (1.0 - i),
                        df * f * (1.0 - f),
                        dg * (1.0 - g * g),
                        do * o * (1.0 - o),
                    ],
                    axis=1,
                )
                if dx is not None:
                    dx[:, t] = dz @ w_ih.data.T
                if dw_ih is not None:
                    dw_ih += xd[:, t].T @ dz
                if dw_hh is not None:
                    dw_hh += h_prev.T @ dz
                if db is not None:
                    db += dz.sum(axis=0)
                dh = (1.0 - m) * dh + dz @ w_hh.data.T
                dc = (1.0 - m) * dc + dc_new * f
            if dx is not None:
                ad._accumulate(x, dx)
            if dw_ih is not None:
                ad._accumulate(w_ih, dw_ih)
            if dw_hh is not None:
                ad._accumulate(w_hh, dw_hh)
            if db is not None:
                ad._accumulate(b, db)

        return backward

    return ad._node(out, (x, w_ih, w_hh, b), factory)


def bilstm(x: Tensor, params: BiLSTMParams, lengths=None) -> Tensor:
    """Bidirectional LSTM; concatenates both directions per position.

    Accepts (L, E) for a single sequence (returns (L, 2H)) or (B, L, E)
    batches (returns (B, L, 2H)).
    """
    single = x.data.ndim == 2
    if single:
        x = ad.reshape(x, (1,) + x.data.shape)
    fwd = lstm(x, params.fwd, lengths=lengths, reverse=False)
    bwd = lstm(x, params.bwd, lengths=lengths, reverse=True)
    out = ad.concat([fwd, bwd], axis=2)
    if single:
        out = ad.reshape(out, out.data.shape[1:])
    return out


# ---------------------------------------------------------------------------
# spatial ops


def _as_batch(x: Tensor):
    if x.data.ndim == 3:
        return ad.reshape(x, (1,) + x.data.shape), True
    return x, False


def conv2d(x: Tensor, kernels: Tensor) -> Tensor:
    """3x3 convolution with same padding via im2col; (B, C, H, W) -> (B, C', H, W)."""
    x, single = _as_batch(x)
    xd = x.data
    B, C, H, W = xd.shape
    Co, Ck, kh, kw = kernels.data.shape
    if (kh, kw) != (3, 3):
        raise ValueError("conv2d kernels must be 3x3")
    if Ck != C:
        raise ValueError(f"conv2d channel mismatch: input has {C}, kernels expect {Ck}")

    xp = np.pad(xd, ((0, 0), (0, 0), (1, 1), (1, 1)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(2, 3))  # (B,C,H,W,3,3)
    cols = win.transpose(1, 4, 5, 0, 2, 3).reshape(C * 9, B * H * W)
    kmat = kernels.data.reshape(Co, C * 9)
    out = (kmat @ cols).reshape(Co, B, H, W).transpose(1, 0, 2, 3)

    def factory(node):
        def backward():
            dmat = node.grad.transpose(1, 0, 2, 3).reshape(Co, B * H * W)
            if kernels.requires_grad:
                ad._accumulate(kernels, (dmat @ cols.T).reshape(Co, C, 3, 3))
            if x.requires_grad:
                dwin = (kmat.T @ dmat).reshape(C, 3, 3, B, H, W)
                dxp = np.zeros((B, C, H + 2, W + 2))
                for di in range(3):
                    for dj in range(3):
                        dxp[:, :, di : di + H, dj : dj + W] += dwin[:, di, dj].transpose(1, 0, 2, 3)
                ad._accumulate(x, dxp[:, :, 1 : H + 1, 1 : W + 1])

        return backward

    res = ad._node(out, (x, kernels), factory)
    return ad.reshape(res, res.data.shape[1:]) if single else res


def maxpool2(x: Tensor) -> Tensor:
    """2x2 max pooling, stride 2; gradient routes to the first argmax per window."""
    x, single = _as_batch(x)
    B, C, H, W = x.data.shape
    if H % 2 or W % 2:
        raise ValueError(f"maxpool2 needs even spatial dims, got {H}x{W}")
    h, w = H // 2, W // 2
    r = x.data.reshape(B, C, h, 2, w, 2).transpose(0, 1, 2, 4, 3, 5).reshape(B, C, h, w, 4)
    idx = r.argmax(axis=4)
    out = np.take_along_axis(r, idx[..., None], axis=4)[..., 0]

    def factory(node):
        def backward():
            dr = np.zeros((B, C, h, w, 4))
            np.put_along_axis(dr, idx[..., None], node.grad[..., None], axis=4)
            dx = dr.reshape(B, C, h, w, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(B, C, H, W)
            ad._accumulate(x, dx)

        return backward

    res = ad._node(out, (x,), factory)
    return ad.reshape(res, res.data.shape[1:]) if single else res


def deconv2(x: Tensor, kernels: Tensor) -> Tensor:
    """Transposed convolution, 2x2 kernel, stride 2; doubles spatial dims.

    ``kernels`` has shape (C_in, C_out, 2, 2).
    """
    x, single = _as_batch(x)
    B, C, H, W = x.data.shape
    Ci, Co, kh, kw = kernels.data.shape
    if (kh, kw) != (2, 2):
        raise ValueError("deconv2 kernels must be 2x2")
    if Ci != C:
        raise ValueError(f"deconv2 channel mismatch: input has {C}, kernels expect {Ci}")

    out6 = np.einsum("bcij,cdkl->bdikjl", x.data, kernels.data, optimize=True)
    out = out6.reshape(B, Co, 2 * H, 2 * W)

    def factory(node):
        def backward():
            g6 = node.grad.reshape(B, Co, H, 2, W, 2)
            if x.requires_grad:
                ad._accumulate(x, np.einsum("bdikjl,cdkl->bcij", g6, kernels.data, optimize=True))
            if kernels.requires_grad:
                ad._accumulate(kernels, np.einsum("bcij,bdikjl->cdkl", x.data, g6, optimize=True))

        return backward

    res = ad._node(out, (x, kernels), factory)
    return ad.reshape(res, res.data.shape[1:]) if single else res


# ---------------------------------------------------------------------------
# batch normalization


@dataclass
class BatchNormParams:
    """Per-channel scale/shift plus running statistics for eval mode."""

    gamma: Tensor
    beta: Tensor
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1
    eps: float = 1e-5

    @staticmethod
    def create(channels: int) -> "BatchNormParams":
        return BatchNormParams(
            gamma=Tensor(np.ones(channels), requires_grad=True),
            beta=zeros_param(channels),
            running_mean=np.zeros(channels),
            running_var=np.ones(channels),
        )

    def tensors(self):
        return [self.gamma, self.beta]


def batch_norm(x: Tensor, bn: BatchNormParams, training: bool) -> Tensor:
    """Channel-wise normalization over batch and spatial dims of (B, C, H, W)."""
    C = x.data.shape[1]
    shape = (1, C, 1, 1)
    if training:
        mu = ad.tmean(x, axis=(0, 2, 3), keepdims=True)
        xc = ad.sub(x, mu)
        var = ad.tmean(ad.mul(xc, xc), axis=(0, 2, 3), keepdims=True)
        inv = ad.pow_scalar(ad.add(var, bn.eps), -0.5)
        xhat = ad.mul(xc, inv)
        m = bn.momentum
        bn.running_mean = (1.0 - m) * bn.running_mean + m * mu.data.reshape(C)
        bn.running_var = (1.0 - m) * bn.running_var + m * var.data.reshape(C)
    else:
        inv = 1.0 / np.sqrt(bn.running_var + bn.eps)
        xhat = ad.mul(ad.sub(x, bn.running_mean.reshape(shape)), inv.reshape(shape))
    return ad.add(ad.mul(xhat, ad.reshape(bn.gamma, shape)), ad.reshape(bn.beta, shape))


def conv_bn_relu(x: Tensor, kernels: Tensor, bn: BatchNormParams | None, training: bool) -> Tensor:
    """Conv module from the segmentation net: 3x3 conv, batch norm, ReLU.

    ``bn=None`` skips normalization (plain conv + ReLU).
    """
    x, single = _as_batch(x)
    out = conv2d(x, kernels)
    if bn is not None:
        out = batch_norm(out, bn, training)
    out = ad.relu(out)
    return ad.reshape(out, out.data.shape[1:]) if single else out


# ---------------------------------------------------------------------------
# affine / loss


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """Affine map over the last axis: (..., A) @ (A, B) + (B,)."""
    in_dim = x.data.shape[-1]
    if in_dim != w.data.shape[0]:
        raise ValueError(f"linear inner dims differ: input {in_dim}, weight {w.data.shape}")
    lead = x.data.shape[:-1]
    flat = ad.reshape(x, (-1, in_dim)) if x.data.ndim != 2 else x
    out = ad.matmul(flat, w)
    if b is not None:
        out = ad.add(out, b)
    if x.data.ndim != 2:
        out = ad.reshape(out, lead + (w.data.shape[1],))
    return out


def weighted_cross_entropy(logits: Tensor, targets, weights, mask=None) -> Tensor:
    """Mean over unmasked cells of ``weights[target] * -log softmax(logits)[target]``.

    ``logits`` is (K, n_classes); ``targets`` integer class ids; ``mask`` an
    optional boolean keep-flag per cell.
    """
    targets = np.asarray(targets, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    if np.any(weights <= 0):
        raise ValueError("class weights must be positive")
    K = logits.data.shape[0]
    keep = np.ones(K, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    sel = np.flatnonzero(keep)
    if sel.size == 0:
        raise ValueError("weighted_cross_entropy: all cells are masked")

    z = logits.data[sel]
    t = targets[sel]
    zmax = z.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=1))
    logp_t = z[np.arange(sel.size), t] - lse
    w_t = weights[t]
    loss = float((-w_t * logp_t).mean())

    def factory(node):
        def backward():
            p = np.exp(z - lse[:, None])
            p[np.arange(sel.size), t] -= 1.0
            p *= w_t[:, None] * (node.grad / sel.size)
            g = np.zeros_like(logits.data)
            g[sel] = p
            ad._accumulate(logits, g)

        return backward

    return ad._node(np.float64(loss), (logits,), factory)


# ---------------------------------------------------------------------------
# optimization


@dataclass
class AdamState:
    """First/second moment estimates, one slot per parameter."""

    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @staticmethod
    def for_params(params) -> "AdamState":
        return AdamState(
            m=[np.zeros_like(p.data) for p in params],
            v=[np.zeros_like(p.data) for p in params],
        )


def adam_step(params, grads, state: AdamState, lr: float):
    """One bias-corrected Adam update; mutates parameter data in place."""
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g is None:
            continue
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


# ---------------------------------------------------------------------------
# verification


def grad_check(f, params, h: float = 1e-4) -> float:
    """Max relative error between reverse-mode and central-difference gradients.

    ``f()`` rebuilds and returns a scalar Tensor; ``params`` are the leaves to
    probe. Every coordinate of every parameter is perturbed by ±h.
    """
    for p in params:
        p.zero_grad()
    out = f()
    out.backward()
    analytic = [None if p.grad is None else p.grad.copy() for p in params]

    worst = 0.0
    for p, ana in zip(params, analytic):
        if ana is None:
            continue
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = f().item()
            flat[i] = orig - h
            fm = f().item()
            flat[i] = orig
            num = (fp - fm) / (2.0 * h)
            a = ana.reshape(-1)[i]
            denom = max(abs(num), abs(a), 1e-6)
            worst = max(worst, abs(num - a) / denom)
    return worst
