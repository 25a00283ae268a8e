"""Critic objects bundling parameters, target copies, optimizer state, and
the state-representation bookkeeping each network needs.

A critic's "repr" is whatever its forward pass consumes: the raw state
vector for the MLP, a rolling window of the last T states for the
transformer (padded at episode start by repeating the first state).  The
planner and learner only ever talk to this shared surface.
"""

from __future__ import annotations

import numpy as np

from .mlp import MlpArch, init_mlp_params, mlp_backward, mlp_forward
from .optim import AdamState, adam_update, polyak_update
from .transformer import (
    TransformerArch,
    init_transformer_params,
    transformer_backward,
    transformer_forward,
)


def _copy_params(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {k: p.copy() for k, p in params.items()}


class _CriticBase:
    arch_cls: type

    def __init__(self, arch, seed: int, lr: float = 1e-3):
        self.arch = arch
        self.params = self._init(arch, np.random.default_rng(seed))
        self.target = _copy_params(self.params)
        self.adam = AdamState.for_params(self.params, lr)

    # subclasses define _init / _forward / _backward / repr helpers

    @property
    def n_actions(self) -> int:
        return self.arch.n_actions

    def q_values(self, repr_) -> np.ndarray:
        return self._forward(self.params, repr_[None, ...])[0]

    def q_target_values(self, repr_) -> np.ndarray:
        return self._forward(self.target, repr_[None, ...])[0]

    def q_batch(self, reprs: np.ndarray) -> np.ndarray:
        return self._forward(self.params, reprs)

    def q_target_batch(self, reprs: np.ndarray) -> np.ndarray:
        return self._forward(self.target, reprs)

    def forward_with_cache(self, reprs: np.ndarray):
        return self._forward(self.params, reprs, want_cache=True)

    def backward(self, cache, dq: np.ndarray) -> dict[str, np.ndarray]:
        return self._backward(self.params, cache, dq)

    def apply_grads(self, grads: dict[str, np.ndarray]) -> None:
        adam_update(self.params, grads, self.adam)

    def polyak(self, tau: float) -> None:
        polyak_update(self.target, self.params, tau)


class MlpCritic(_CriticBase):
    """Plain feedforward critic over single state vectors."""

    arch_cls = MlpArch

    def _init(self, arch, rng):
        return init_mlp_params(arch, rng)

    def _forward(self, params, reprs, want_cache=False):
        return mlp_forward(params, self.arch, reprs, want_cache)

    def _backward(self, params, cache, dq):
        return mlp_backward(params, self.arch, cache, dq)

    @property
    def repr_shape(self) -> tuple[int, ...]:
        return (self.arch.state_dim,)

    def repr0(self, state: np.ndarray) -> np.ndarray:
        return np.asarray(state, dtype=float)

    def push(self, repr_: np.ndarray, state: np.ndarray) -> np.ndarray:
        return np.asarray(state, dtype=float)


class TransformerCritic(_CriticBase):
    """Sequence critic over rolling windows of recent states."""

    arch_cls = TransformerArch

    def _init(self, arch, rng):
        return init_transformer_params(arch, rng)

    def _forward(self, params, reprs, want_cache=False):
        return transformer_forward(params, self.arch, reprs, want_cache)

    def _backward(self, params, cache, dq):
        return transformer_backward(params, self.arch, cache, dq)

    @property
    def repr_shape(self) -> tuple[int, ...]:
        return (self.arch.history_len, self.arch.state_dim)

    def repr0(self, state: np.ndarray) -> np.ndarray:
        return np.tile(np.asarray(state, dtype=float), (self.arch.history_len, 1))

    def push(self, repr_: np.ndarray, state: np.ndarray) -> np.ndarray:
        out = np.empty_like(repr_)
        out[:-1] = repr_[1:]
        out[-1] = state
        return out
