"""Transformer Q-network over short state windows, with exact reverse-mode
gradients written by hand.

Forward pass: tokenize each state in the window with a linear embedding
plus sinusoidal positional encodings (window-relative positions 1..T),
run L pre-norm encoder layers (multi-head self-attention and a ReLU
feedforward block, both residual), pool, and project to one Q-value per
discrete action.  The backward pass mirrors every step; the finite
difference oracle in the test suite checks every parameter group.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .encoding import encoding_matrix, softmax

_LN_EPS = 1e-5


@dataclass(frozen=True)
class TransformerArch:
    state_dim: int
    n_actions: int
    history_len: int = 8
    embed_dim: int = 64
    heads: int = 4
    layers: int = 2
    pooling: str = "last_token"  # last_token | mean
    dueling: bool = True
    ffn_mult: int = 4

    def __post_init__(self) -> None:
        if self.embed_dim % self.heads != 0:
            raise ValueError("embed_dim must be divisible by heads")
        if self.pooling not in ("last_token", "mean"):
            raise ValueError(f"unknown pooling {self.pooling!r}")


@lru_cache(maxsize=8)
def _pe_table(length: int, d: int) -> np.ndarray:
    table = encoding_matrix(length, d, start=1)
    table.setflags(write=False)
    return table


def _uniform_fan_in(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def init_transformer_params(arch: TransformerArch, rng: np.random.Generator) -> dict[str, np.ndarray]:
    d = arch.embed_dim
    f = arch.ffn_mult * d
    params: dict[str, np.ndarray] = {"embed_w": _uniform_fan_in(rng, arch.state_dim, d)}
    for l in range(arch.layers):
        p = f"l{l}_"
        params[p + "ln1_g"] = np.ones(d)
        params[p + "ln1_b"] = np.zeros(d)
        for name in ("wq", "wk", "wv", "wo"):
            params[p + name] = _uniform_fan_in(rng, d, d)
        for name in ("bq", "bk", "bv", "bo"):
            params[p + name] = np.zeros(d)
        params[p + "ln2_g"] = np.ones(d)
        params[p + "ln2_b"] = np.zeros(d)
        params[p + "w1"] = _uniform_fan_in(rng, d, f)
        params[p + "b1"] = np.zeros(f)
        params[p + "w2"] = _uniform_fan_in(rng, f, d)
        params[p + "b2"] = np.zeros(d)
    if arch.dueling:
        params["v_w"] = _uniform_fan_in(rng, d, 1)
        params["v_b"] = np.zeros(1)
        params["a_w"] = _uniform_fan_in(rng, d, arch.n_actions)
        params["a_b"] = np.zeros(arch.n_actions)
    else:
        params["head_w"] = _uniform_fan_in(rng, d, arch.n_actions)
        params["head_b"] = np.zeros(arch.n_actions)
    return params


def _ln_forward(x: np.ndarray, g: np.ndarray, b: np.ndarray):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + _LN_EPS)
    xhat = xc * inv
    return g * xhat + b, (xhat, inv)


def _ln_backward(dy: np.ndarray, g: np.ndarray, cache):
    xhat, inv = cache
    dxhat = dy * g
    dg = (dy * xhat).sum(axis=tuple(range(dy.ndim - 1)))
    db = dy.sum(axis=tuple(range(dy.ndim - 1)))
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dg, db


def _split_heads(x: np.ndarray, heads: int) -> np.ndarray:
    n, t, d = x.shape
    return x.reshape(n, t, heads, d // heads).transpose(0, 2, 1, 3)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    n, h, t, dk = x.shape
    return x.transpose(0, 2, 1, 3).reshape(n, t, h * dk)


def transformer_forward(params: dict, arch: TransformerArch, windows: np.ndarray,
                        want_cache: bool = False):
    """Q-values for a batch of windows (N, T, state_dim) -> (N, n_actions)."""
    n, t, _ = windows.shape
    d = arch.embed_dim
    h = arch.heads
    scale = 1.0 / np.sqrt(d // h)

    x = windows @ params["embed_w"] + _pe_table(t, d)
    layer_caches = []
    for l in range(arch.layers):
        p = f"l{l}_"
        xn, ln1_cache = _ln_forward(x, params[p + "ln1_g"], params[p + "ln1_b"])
        q = _split_heads(xn @ params[p + "wq"] + params[p + "bq"], h)
        k = _split_heads(xn @ params[p + "wk"] + params[p + "bk"], h)
        v = _split_heads(xn @ params[p + "wv"] + params[p + "bv"], h)
        scores = (q @ k.transpose(0, 1, 3, 2)) * scale
        attn = softmax(scores, axis=-1)
        ctx = _merge_heads(attn @ v)
        mha = ctx @ params[p + "wo"] + params[p + "bo"]
        z = x + mha
        zn, ln2_cache = _ln_forward(z, params[p + "ln2_g"], params[p + "ln2_b"])
        f_pre = zn @ params[p + "w1"] + params[p + "b1"]
        f_act = np.maximum(f_pre, 0.0)
        ffn = f_act @ params[p + "w2"] + params[p + "b2"]
        x_next = z + ffn
        layer_caches.append(
            {"x": x, "xn": xn, "ln1": ln1_cache, "q": q, "k": k, "v": v,
             "attn": attn, "ctx": ctx, "z": z, "zn": zn, "ln2": ln2_cache,
             "f_act": f_act}
        )
        x = x_next

    if arch.pooling == "last_token":
        pooled = x[:, -1, :]
    else:
        pooled = x.mean(axis=1)

    if arch.dueling:
        val = pooled @ params["v_w"] + params["v_b"]
        adv = pooled @ params["a_w"] + params["a_b"]
        qvals = val + adv - adv.mean(axis=1, keepdims=True)
    else:
        qvals = pooled @ params["head_w"] + params["head_b"]

    if not want_cache:
        return qvals
    return qvals, {"windows": windows, "layers": layer_caches, "encoded": x, "pooled": pooled}


def transformer_backward(params: dict, arch: TransformerArch, cache: dict,
                         dq: np.ndarray) -> dict[str, np.ndarray]:
    """Parameter gradients of a scalar loss given dL/dQ."""
    grads: dict[str, np.ndarray] = {}
    pooled = cache["pooled"]
    h = arch.heads
    d = arch.embed_dim
    scale = 1.0 / np.sqrt(d // h)

    if arch.dueling:
        da = dq - dq.mean(axis=1, keepdims=True)
        dv = dq.sum(axis=1, keepdims=True)
        grads["a_w"] = pooled.T @ da
        grads["a_b"] = da.sum(axis=0)
        grads["v_w"] = pooled.T @ dv
        grads["v_b"] = dv.sum(axis=0)
        dpooled = da @ params["a_w"].T + dv @ params["v_w"].T
    else:
        grads["head_w"] = pooled.T @ dq
        grads["head_b"] = dq.sum(axis=0)
        dpooled = dq @ params["head_w"].T

    encoded = cache["encoded"]
    dx = np.zeros_like(encoded)
    if arch.pooling == "last_token":
        dx[:, -1, :] = dpooled
    else:
        dx += dpooled[:, None, :] / encoded.shape[1]

    for l in reversed(range(arch.layers)):
        p = f"l{l}_"
        c = cache["layers"][l]
        # FFN residual branch
        dffn = dx
        grads[p + "w2"] = c["f_act"].reshape(-1, c["f_act"].shape[-1]).T @ dffn.reshape(-1, d)
        grads[p + "b2"] = dffn.sum(axis=(0, 1))
        df_act = dffn @ params[p + "w2"].T
        df_pre = df_act * (c["f_act"] > 0.0)
        zn = c["zn"]
        grads[p + "w1"] = zn.reshape(-1, d).T @ df_pre.reshape(-1, df_pre.shape[-1])
        grads[p + "b1"] = df_pre.sum(axis=(0, 1))
        dzn = df_pre @ params[p + "w1"].T
        dz_ln, dg2, db2 = _ln_backward(dzn, params[p + "ln2_g"], c["ln2"])
        grads[p + "ln2_g"] = dg2
        grads[p + "ln2_b"] = db2
        dz = dx + dz_ln
        # attention residual branch
        dmha = dz
        ctx = c["ctx"]
        grads[p + "wo"] = ctx.reshape(-1, d).T @ dmha.reshape(-1, d)
        grads[p + "bo"] = dmha.sum(axis=(0, 1))
        dctx = _split_heads(dmha @ params[p + "wo"].T, h)
        attn = c["attn"]
        dattn = dctx @ c["v"].transpose(0, 1, 3, 2)
        dv_h = attn.transpose(0, 1, 3, 2) @ dctx
        dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True))
        dq_h = (dscores @ c["k"]) * scale
        dk_h = (dscores.transpose(0, 1, 3, 2) @ c["q"]) * scale
        dq_flat = _merge_heads(dq_h)
        dk_flat = _merge_heads(dk_h)
        dv_flat = _merge_heads(dv_h)
        xn = c["xn"]
        xn_flat = xn.reshape(-1, d)
        grads[p + "wq"] = xn_flat.T @ dq_flat.reshape(-1, d)
        grads[p + "bq"] = dq_flat.sum(axis=(0, 1))
        grads[p + "wk"] = xn_flat.T @ dk_flat.reshape(-1, d)
        grads[p + "bk"] = dk_flat.sum(axis=(0, 1))
        grads[p + "wv"] = xn_flat.T @ dv_flat.reshape(-1, d)
        grads[p + "bv"] = dv_flat.sum(axis=(0, 1))
        dxn = dq_flat @ params[p + "wq"].T + dk_flat @ params[p + "wk"].T + dv_flat @ params[p + "wv"].T
        dx_ln, dg1, db1 = _ln_backward(dxn, params[p + "ln1_g"], c["ln1"])
        grads[p + "ln1_g"] = dg1
        grads[p + "ln1_b"] = db1
        dx = dz + dx_ln

    windows = cache["windows"]
    grads["embed_w"] = windows.reshape(-1, windows.shape[-1]).T @ dx.reshape(-1, d)
    return grads
