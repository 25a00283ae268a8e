"""Off-policy double-DQN training loop pieces: ring replay buffer,
exploration schedule, bootstrapped targets, TD loss, and the combined
train step (sample, target, loss, backward, Adam, Polyak)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .valuenet.optim import polyak_update


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.99
    lr: float = 1e-3
    batch_size: int = 64
    capacity: int = 100_000
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay: float = 20_000.0
    warmup_steps: int = 2000
    polyak_tau: float = 0.005
    train_every: int = 1
    clip_grad_norm: float = 10.0  # global norm cap; <= 0 disables
    # optional conservative rescaling of bootstrapped targets into the
    # feasible value range; planner-driven behavior decouples the replay
    # distribution from the critic's argmax, and unclamped targets can
    # spiral upward there
    target_clip: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.eps_end > self.eps_start:
            raise ValueError("eps_end must not exceed eps_start")
        if self.batch_size < 1 or self.capacity < 1:
            raise ValueError("batch size and capacity must be positive")


def epsilon_value(step: int, cfg: TrainConfig) -> float:
    """Exponentially decayed exploration rate."""
    if step < 0:
        raise ValueError("step must be nonnegative")
    return cfg.eps_end + (cfg.eps_start - cfg.eps_end) * np.exp(-step / cfg.eps_decay)


class ReplayBuffer:
    """Fixed-capacity FIFO transition store with its own sampling stream.

    Stores whatever representation the critic consumes (vectors or
    windows); eviction overwrites the oldest slot once full.
    """

    def __init__(self, capacity: int, repr_shape: tuple[int, ...], seed: int):
        self.capacity = capacity
        self._s = np.empty((capacity, *repr_shape))
        self._a = np.empty(capacity, dtype=np.int64)
        self._r = np.empty(capacity)
        self._s2 = np.empty((capacity, *repr_shape))
        self._done = np.empty(capacity)
        self._size = 0
        self._write = 0
        self._rng = np.random.default_rng(seed)

    def __len__(self) -> int:
        return self._size

    def add(self, s, a: int, r: float, s2, done: bool) -> None:
        i = self._write
        self._s[i] = s
        self._a[i] = a
        self._r[i] = r
        self._s2[i] = s2
        self._done[i] = 1.0 if done else 0.0
        self._write = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int):
        if self._size < batch_size:
            raise RuntimeError(
                f"buffer holds {self._size} transitions, need {batch_size} to sample"
            )
        idx = self._rng.integers(0, self._size, size=batch_size)
        return (
            self._s[idx],
            self._a[idx],
            self._r[idx],
            self._s2[idx],
            self._done[idx],
        )


def ddqn_target(r: float, done: bool, q_online_next: np.ndarray,
                q_target_next: np.ndarray, gamma: float) -> float:
    """Double-DQN bootstrap: online argmax, target evaluation."""
    if done:
        return float(r)
    a_star = int(np.argmax(q_online_next))
    return float(r + gamma * q_target_next[a_star])


def ddqn_targets_batch(r: np.ndarray, done: np.ndarray, q_online_next: np.ndarray,
                       q_target_next: np.ndarray, gamma: float) -> np.ndarray:
    a_star = np.argmax(q_online_next, axis=1)
    boot = q_target_next[np.arange(len(a_star)), a_star]
    return r + gamma * (1.0 - done) * boot


def td_loss(critic, s, a, y):
    """Mean squared TD error and its parameter gradients.

    Targets are constants; gradients flow only through the predicted
    Q-values of the taken actions.
    """
    q, cache = critic.forward_with_cache(s)
    n = len(a)
    picked = q[np.arange(n), a]
    residual = picked - y
    loss = float(np.mean(residual**2))
    dq = np.zeros_like(q)
    dq[np.arange(n), a] = 2.0 * residual / n
    grads = critic.backward(cache, dq)
    return loss, grads


def clip_gradients(grads: dict, max_norm: float) -> dict:
    """Scale the whole gradient dict so its global norm stays capped."""
    total = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return grads


def train_step(buffer: ReplayBuffer, critic, cfg: TrainConfig) -> float:
    """One DDQN update: sample, target, loss, backward, Adam, Polyak."""
    s, a, r, s2, done = buffer.sample(cfg.batch_size)
    q_online_next = critic.q_batch(s2)
    q_target_next = critic.q_target_batch(s2)
    y = ddqn_targets_batch(r, done, q_online_next, q_target_next, cfg.gamma)
    if cfg.target_clip is not None:
        y = np.clip(y, cfg.target_clip[0], cfg.target_clip[1])
    loss, grads = td_loss(critic, s, a, y)
    if cfg.clip_grad_norm > 0:
        clip_gradients(grads, cfg.clip_grad_norm)
    critic.apply_grads(grads)
    polyak_update(critic.target, critic.params, cfg.polyak_tau)
    return loss
