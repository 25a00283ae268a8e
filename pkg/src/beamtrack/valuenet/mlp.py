"""Feedforward Q-network with exact hand-written reverse-mode gradients.

Parameters live in a flat dict of float64 arrays (weights stored with
(fan_in, fan_out) orientation so the forward pass is ``x @ W + b``).  The
optional dueling variant splits the last hidden layer into a scalar value
head and an advantage head recombined as Q = V + A - mean(A).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MlpArch:
    state_dim: int
    n_actions: int
    hidden: tuple[int, ...] = (128, 128)
    dueling: bool = True


def _uniform_fan_in(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def init_mlp_params(arch: MlpArch, rng: np.random.Generator) -> dict[str, np.ndarray]:
    params: dict[str, np.ndarray] = {}
    sizes = (arch.state_dim, *arch.hidden)
    for i in range(len(arch.hidden)):
        params[f"w{i}"] = _uniform_fan_in(rng, sizes[i], sizes[i + 1])
        params[f"b{i}"] = np.zeros(sizes[i + 1])
    last = sizes[-1]
    if arch.dueling:
        params["v_w"] = _uniform_fan_in(rng, last, 1)
        params["v_b"] = np.zeros(1)
        params["a_w"] = _uniform_fan_in(rng, last, arch.n_actions)
        params["a_b"] = np.zeros(arch.n_actions)
    else:
        params["head_w"] = _uniform_fan_in(rng, last, arch.n_actions)
        params["head_b"] = np.zeros(arch.n_actions)
    return params


def mlp_forward(params: dict, arch: MlpArch, x: np.ndarray, want_cache: bool = False):
    """Q-values for a batch of states (N, state_dim) -> (N, n_actions)."""
    h = x
    acts = [x]
    for i in range(len(arch.hidden)):
        z = h @ params[f"w{i}"] + params[f"b{i}"]
        h = np.maximum(z, 0.0)
        acts.append(h)
    if arch.dueling:
        v = h @ params["v_w"] + params["v_b"]
        a = h @ params["a_w"] + params["a_b"]
        q = v + a - a.mean(axis=1, keepdims=True)
    else:
        q = h @ params["head_w"] + params["head_b"]
    if not want_cache:
        return q
    return q, {"acts": acts}


def mlp_backward(params: dict, arch: MlpArch, cache: dict, dq: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss given dL/dQ; exact reverse of mlp_forward."""
    acts = cache["acts"]
    h = acts[-1]
    grads: dict[str, np.ndarray] = {}
    if arch.dueling:
        da = dq - dq.mean(axis=1, keepdims=True)
        dv = dq.sum(axis=1, keepdims=True)
        grads["a_w"] = h.T @ da
        grads["a_b"] = da.sum(axis=0)
        grads["v_w"] = h.T @ dv
        grads["v_b"] = dv.sum(axis=0)
        dh = da @ params["a_w"].T + dv @ params["v_w"].T
    else:
        grads["head_w"] = h.T @ dq
        grads["head_b"] = dq.sum(axis=0)
        dh = dq @ params["head_w"].T
    for i in reversed(range(len(arch.hidden))):
        dz = dh * (acts[i + 1] > 0.0)
        grads[f"w{i}"] = acts[i].T @ dz
        grads[f"b{i}"] = dz.sum(axis=0)
        dh = dz @ params[f"w{i}"].T
    return grads
