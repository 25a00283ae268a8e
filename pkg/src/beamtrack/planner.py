"""Decision-time beam search over the discrete action table.

Rollouts run on snapshots of the real simulator, never the live state:
the planner snapshots the environment, expands candidate action prefixes
level by level (keeping the top-B by accumulated discounted reward, ties
broken by lexicographically smaller prefix), scores survivors with a
conservative double-critic leaf value, restores the live snapshot, and
returns the first action of the best sequence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BeamConfig:
    width: int = 2
    depth: int = 3

    def __post_init__(self) -> None:
        if self.width < 1 or self.depth < 1:
            raise ValueError("beam width and depth must be at least 1")


@dataclass(frozen=True)
class _Element:
    score: float
    prefix: tuple[int, ...]
    snap: object
    repr_: object
    done: bool


def leaf_value(q_online: np.ndarray, q_target: np.ndarray) -> float:
    """Conservative state value: max over actions of the per-action min."""
    return float(np.minimum(q_online, q_target).max())


def node_budget(width: int, depth: int, action_count: int) -> int:
    """Upper bound on simulator calls one beam_plan invocation may make."""
    return width * depth * action_count


def search_efficiency(width: int, depth: int, action_count: int) -> float:
    """Percentage of the exhaustive depth-D tree the beam retains."""
    if min(width, depth, action_count) < 1:
        raise ValueError("width, depth, and action count must be at least 1")
    return 100.0 * width / action_count**depth


def beam_plan(env, repr_, critic, width: int, depth: int, gamma: float,
              greedy_shortcut: bool = False, return_score: bool = False):
    """Pick the next action by beam search on snapshot rollouts.

    ``repr_`` is the critic representation of the current state; along each
    rollout the planner extends it with critic.push so window-based critics
    see the history accumulated over the prefix.  With ``greedy_shortcut``
    and a (1, 1) beam this collapses to plain argmax of the online critic,
    which skips the rollout-and-leaf scoring the (1, 1) beam would do.
    With ``return_score`` the winning sequence's total score comes back too.
    """
    if env.done:
        raise RuntimeError("cannot plan from a finished episode")
    if greedy_shortcut and width == 1 and depth == 1:
        q = critic.q_values(repr_)
        action = int(np.argmax(q))
        return (action, float(q[action])) if return_score else action

    root = env.snapshot()
    n_actions = env.n_actions
    beam = [_Element(0.0, (), root, repr_, False)]
    with env.rollout_mode():
        for level in range(depth):
            g = gamma**level
            candidates = []
            for el in beam:
                if el.done:
                    candidates.append(el)
                    continue
                for a in range(n_actions):
                    env.restore(el.snap)
                    state, r, done = env.step(a)
                    candidates.append(
                        _Element(
                            el.score + g * r,
                            el.prefix + (a,),
                            env.snapshot(),
                            critic.push(el.repr_, state),
                            done,
                        )
                    )
            candidates.sort(key=lambda e: (-e.score, e.prefix))
            beam = candidates[:width]
    env.restore(root)

    live = [el for el in beam if not el.done]
    leaves = {}
    if live:
        reprs = np.stack([el.repr_ for el in live])
        q_on = critic.q_batch(reprs)
        q_tg = critic.q_target_batch(reprs)
        mins = np.minimum(q_on, q_tg).max(axis=1)
        leaves = {id(el): float(v) for el, v in zip(live, mins)}

    g_leaf = gamma**depth
    best = min(
        beam,
        key=lambda e: (-(e.score + g_leaf * leaves.get(id(e), 0.0)), e.prefix),
    )
    if return_score:
        return best.prefix[0], best.score + g_leaf * leaves.get(id(best), 0.0)
    return best.prefix[0]
