"""Shared test utilities: finite-difference oracles and a brute-force
sequence planner used to cross-check the beam search."""

from __future__ import annotations

import itertools

import numpy as np


def fd_gradient(loss_fn, params: dict, key: str, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar loss w.r.t. one parameter array."""
    p = params[key]
    grad = np.zeros_like(p)
    it = np.nditer(p, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = p[idx]
        p[idx] = old + step
        hi = loss_fn()
        p[idx] = old - step
        lo = loss_fn()
        p[idx] = old
        grad[idx] = (hi - lo) / (2.0 * step)
    return grad


def rel_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-6) -> float:
    """Relative disagreement with a floor so analytically-zero gradient
    groups (finite-difference noise on both sides) compare sanely."""
    denom = max(np.linalg.norm(a), np.linalg.norm(b), floor)
    return float(np.linalg.norm(a - b) / denom)


def brute_force_plan(env, repr_, critic, depth: int, gamma: float) -> int:
    """Exhaustive depth-D sequence scoring; ties to the smallest prefix."""
    root = env.snapshot()
    best_score = -np.inf
    best_seq = None
    with env.rollout_mode():
        for seq in itertools.product(range(env.n_actions), repeat=depth):
            env.restore(root)
            rp = repr_
            score = 0.0
            terminal = False
            for level, action in enumerate(seq):
                state, r, done = env.step(action)
                rp = critic.push(rp, state)
                score += gamma**level * r
                if done:
                    terminal = True
                    break
            if not terminal:
                q_on = critic.q_values(rp)
                q_tg = critic.q_target_values(rp)
                score += gamma**depth * float(np.minimum(q_on, q_tg).max())
            if score > best_score:
                best_score = score
                best_seq = seq
    env.restore(root)
    return best_seq[0], best_score
