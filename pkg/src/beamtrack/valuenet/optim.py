"""Adam optimizer state and Polyak target blending over parameter dicts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], lr: float) -> "AdamState":
        return cls(
            lr=lr,
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def adam_update(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
                state: AdamState) -> dict[str, np.ndarray]:
    """Bias-corrected adaptive-moment step, applied in place."""
    state.step += 1
    b1 = state.beta1
    b2 = state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for key, g in grads.items():
        m = state.m[key]
        v = state.v[key]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        params[key] -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params


def polyak_update(target: dict[str, np.ndarray], online: dict[str, np.ndarray],
                  tau: float) -> dict[str, np.ndarray]:
    """Soft target blend: target <- (1 - tau) target + tau online, in place."""
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must lie in (0, 1]")
    for key, p in online.items():
        t = target[key]
        t *= 1.0 - tau
        t += tau * p
    return target
