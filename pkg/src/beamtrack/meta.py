"""Online selection of the beam configuration (width, depth).

Two mechanisms live here: the learned meta-policy (a small categorical
network over the configuration menu, trained by REINFORCE on a shaped
improvement-minus-cost reward with an entropy bonus, a moving baseline,
and a nonnegative dual variable enforcing a compute budget) and the
deterministic heuristic rule used by the frequency ablation (wide/shallow
when the error trend is hot, narrow/deep when it is quiet).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .planner import node_budget

N_FEATURES = 7


@dataclass(frozen=True)
class MetaConfig:
    alpha_err: float = 10.0
    alpha_trend: float = 5.0
    alpha_flop: float = 1e-4
    alpha_switch: float = 0.02
    entropy_weight: float = 0.01
    lr: float = 1e-3
    dual_lr: float = 1e-3
    budget: float | None = None  # defaults to alpha_flop * node_budget(2, 2, |A|)
    gamma_meta: float = 0.95
    temperature: float = 1.0
    mad_floor: float = 1e-3
    lambda_init: float = 0.01
    baseline_decay: float = 0.99
    trend_decay: float = 0.9
    error_scale: float = 1.0
    b_max: int = 6
    d_max: int = 6
    hidden: int = 64
    cadence: str = "step"  # step | episode

    def __post_init__(self) -> None:
        if self.temperature <= 0 or self.mad_floor <= 0:
            raise ValueError("temperature and mad_floor must be positive")
        if self.cadence not in ("step", "episode"):
            raise ValueError(f"unknown meta cadence {self.cadence!r}")
        if min(self.lr, self.dual_lr, self.entropy_weight, self.baseline_decay) < 0:
            raise ValueError("meta rates must be nonnegative")


def beam_menu(b_max: int, d_max: int) -> tuple[tuple[int, int], ...]:
    """All (width, depth) pairs, lexicographic: (1,1), (1,2), ..., (b,d)."""
    return tuple((b, d) for b in range(1, b_max + 1) for d in range(1, d_max + 1))


def normalized_entropy(q_values: np.ndarray, temperature: float) -> float:
    """Entropy of softmax(q / temperature) scaled into [0, 1] by log |A|."""
    q = np.asarray(q_values, dtype=float)
    if q.size < 2:
        raise ValueError("need at least two actions")
    z = q / temperature
    z = z - z.max()
    p = np.exp(z)
    p /= p.sum()
    nz = p > 0.0
    h = -float(np.sum(p[nz] * np.log(p[nz])))
    return h / math.log(q.size)


_BELOW_ONE = math.nextafter(1.0, 0.0)


def disagreement(q_online: np.ndarray, q_target: np.ndarray, mad_floor: float) -> float:
    """Mean absolute critic gap squashed by tanh after MAD normalization.

    tanh saturates to 1.0 in double precision around 19; the result is
    clipped just below one so the open-interval range contract survives.
    """
    q_on = np.asarray(q_online, dtype=float)
    q_tg = np.asarray(q_target, dtype=float)
    if q_on.shape != q_tg.shape:
        raise ValueError("critic outputs must have matching shapes")
    u = float(np.mean(np.abs(q_on - q_tg)))
    mad = float(np.median(np.abs(q_on - np.median(q_on))))
    return min(math.tanh(u / (mad + mad_floor)), _BELOW_ONE)


def build_features(e: float, trend: float, u_hat: float, h: float,
                   prev: tuple[int, int], eta: float, cfg: MetaConfig) -> np.ndarray:
    """Assemble the 7-feature context vector for the meta-policy."""
    if e < 0:
        raise ValueError("tracking error must be nonnegative")
    return np.array(
        [
            math.log1p(e),
            abs(trend) / cfg.error_scale,
            u_hat,
            h,
            prev[0] / cfg.b_max,
            prev[1] / cfg.d_max,
            eta,
        ]
    )


def meta_reward(e_prev: float, e: float, trend_prev: float, trend: float,
                z: tuple[int, int], z_prev: tuple[int, int], lam: float,
                action_count: int, cfg: MetaConfig) -> tuple[float, float]:
    """Shaped reward (improvement minus priced compute) and the raw cost."""
    delta = cfg.alpha_err * (e_prev - e) + cfg.alpha_trend * (abs(trend_prev) - abs(trend))
    cost = cfg.alpha_flop * z[0] * z[1] * action_count + cfg.alpha_switch * (
        abs(z[0] - z_prev[0]) + abs(z[1] - z_prev[1])
    )
    return delta - lam * cost, cost


def dual_update(lam: float, cost: float, cfg: MetaConfig) -> float:
    """Projected ascent on the budget multiplier."""
    if lam < 0:
        raise ValueError("dual variable must be nonnegative")
    budget = cfg.budget if cfg.budget is not None else 0.0
    return max(0.0, lam + cfg.dual_lr * (cost - budget))


# -- categorical meta-policy -------------------------------------------------


def init_policy_params(rng: np.random.Generator, n_out: int, hidden: int = 64) -> dict:
    b1 = 1.0 / math.sqrt(N_FEATURES)
    b2 = 1.0 / math.sqrt(hidden)
    return {
        "w1": rng.uniform(-b1, b1, size=(N_FEATURES, hidden)),
        "b1": np.zeros(hidden),
        "w2": rng.uniform(-b2, b2, size=(hidden, n_out)),
        "b2": np.zeros(n_out),
    }


def policy_logits(params: dict, f: np.ndarray) -> np.ndarray:
    h = np.maximum(f @ params["w1"] + params["b1"], 0.0)
    return h @ params["w2"] + params["b2"]


def policy_probs(params: dict, f: np.ndarray) -> np.ndarray:
    g = policy_logits(params, f)
    g = g - g.max()
    p = np.exp(g)
    return p / p.sum()


def policy_log_prob(params: dict, f: np.ndarray, idx: int) -> float:
    p = policy_probs(params, f)
    return float(np.log(p[idx]))


def policy_entropy(params: dict, f: np.ndarray) -> float:
    p = policy_probs(params, f)
    nz = p > 0.0
    return -float(np.sum(p[nz] * np.log(p[nz])))


def _backprop_logits(params: dict, f: np.ndarray, dlogits: np.ndarray) -> dict:
    h_pre = f @ params["w1"] + params["b1"]
    h = np.maximum(h_pre, 0.0)
    dw2 = np.outer(h, dlogits)
    db2 = dlogits
    dh = params["w2"] @ dlogits
    dpre = dh * (h_pre > 0.0)
    return {"w1": np.outer(f, dpre), "b1": dpre, "w2": dw2, "b2": db2}


def log_prob_grads(params: dict, f: np.ndarray, idx: int) -> dict:
    """Gradient of log pi(idx | f) with respect to the policy parameters."""
    p = policy_probs(params, f)
    dlogits = -p
    dlogits[idx] += 1.0
    return _backprop_logits(params, f, dlogits)


def entropy_grads(params: dict, f: np.ndarray) -> dict:
    """Gradient of the policy entropy with respect to the parameters."""
    p = policy_probs(params, f)
    logp = np.log(np.where(p > 0.0, p, 1.0))
    h = -float(np.sum(p * logp))
    dlogits = -p * (logp + h)
    return _backprop_logits(params, f, dlogits)


class MetaPolicy:
    """Two-layer categorical policy over the beam-configuration menu."""

    def __init__(self, cfg: MetaConfig, seed: int):
        self.cfg = cfg
        self.menu = beam_menu(cfg.b_max, cfg.d_max)
        self.params = init_policy_params(np.random.default_rng(seed), len(self.menu), cfg.hidden)

    def sample(self, f: np.ndarray, rng: np.random.Generator):
        p = policy_probs(self.params, f)
        idx = int(rng.choice(len(p), p=p))
        return idx, self.menu[idx], float(np.log(p[idx]))

    def update(self, f: np.ndarray, idx: int, advantage: float) -> None:
        """Ascent step on advantage-weighted log-likelihood plus entropy."""
        glog = log_prob_grads(self.params, f, idx)
        gent = entropy_grads(self.params, f)
        lr = self.cfg.lr
        beta = self.cfg.entropy_weight
        for key in self.params:
            self.params[key] += lr * (advantage * glog[key] + beta * gent[key])


# -- deterministic heuristic rule ---------------------------------------------


@dataclass(frozen=True)
class HeuristicRuleConfig:
    eps_ref: float
    k_b: float = 1.0
    k_d: float = 1.0
    b_max: int = 6
    d_max: int = 6

    def __post_init__(self) -> None:
        if self.eps_ref <= 0:
            raise ValueError("eps_ref must be positive")


def heuristic_beam_rule(e_smooth: float, eps_trend: float,
                        cfg: HeuristicRuleConfig) -> tuple[int, int]:
    """Width grows and depth shrinks as the error trend heats up.

    ``e_smooth`` is accepted for interface parity with the learned policy's
    inputs; the rule itself keys off the trend magnitude alone.
    """
    x = min(abs(eps_trend) / cfg.eps_ref, 1.0)
    width = round(1.0 + cfg.k_b * x * (cfg.b_max - 1))
    depth = round(cfg.d_max - cfg.k_d * x * (cfg.d_max - 1))
    width = min(max(width, 1), cfg.b_max)
    depth = min(max(depth, 1), cfg.d_max)
    return int(width), int(depth)


class ErrorTrend:
    """Exponentially smoothed one-step error difference."""

    def __init__(self, decay: float):
        self.decay = decay
        self.value = 0.0

    def reset(self) -> None:
        self.value = 0.0

    def update(self, e_new: float, e_prev: float) -> float:
        self.value = self.decay * self.value + (1.0 - self.decay) * (e_new - e_prev)
        return self.value


# -- per-step controller -------------------------------------------------------


class MetaController:
    """Drives the choose-plan-observe loop of the adaptive beam policy."""

    def __init__(self, cfg: MetaConfig, n_actions: int, policy_seed: int, sample_seed: int):
        if cfg.budget is None:
            cfg = dataclasses.replace(cfg, budget=cfg.alpha_flop * node_budget(2, 2, n_actions))
        self.cfg = cfg
        self.n_actions = n_actions
        self.policy = MetaPolicy(cfg, policy_seed)
        self.rng = np.random.default_rng(sample_seed)
        self.lam = cfg.lambda_init
        self.baseline = 0.0
        self.trend = ErrorTrend(cfg.trend_decay)
        self.prev_bd = (1, 1)
        self.e_prev = 0.0

    def begin_episode(self, e0: float) -> None:
        self.prev_bd = (1, 1)
        self.e_prev = e0
        self.trend.reset()

    def track_passive(self, e_new: float) -> None:
        """Keep the error trend warm on steps where the policy is inactive."""
        self.trend.update(e_new, self.e_prev)
        self.e_prev = e_new

    def choose(self, q_online: np.ndarray, q_target: np.ndarray, e: float,
               t: int, horizon: int):
        """Sample a beam configuration from the current context."""
        cfg = self.cfg
        h = normalized_entropy(q_online, cfg.temperature)
        u = disagreement(q_online, q_target, cfg.mad_floor)
        eta = (horizon - t) / horizon
        f = build_features(e, self.trend.value, u, h, self.prev_bd, eta, cfg)
        idx, bd, logp = self.policy.sample(f, self.rng)
        return bd, {"features": f, "idx": idx, "log_prob": logp, "h": h, "u_hat": u}

    def observe(self, bd: tuple[int, int], e_new: float, ctx: dict) -> dict:
        """Credit the sampled configuration and advance all meta state."""
        cfg = self.cfg
        trend_prev = self.trend.value
        trend_new = self.trend.update(e_new, self.e_prev)
        r_meta, cost = meta_reward(
            self.e_prev, e_new, trend_prev, trend_new, bd, self.prev_bd,
            self.lam, self.n_actions, cfg,
        )
        advantage = r_meta - self.baseline
        self.policy.update(ctx["features"], ctx["idx"], advantage)
        self.baseline = cfg.baseline_decay * self.baseline + (1.0 - cfg.baseline_decay) * r_meta
        self.lam = dual_update(self.lam, cost, cfg)
        self.prev_bd = bd
        self.e_prev = e_new
        return {"r_meta": r_meta, "cost": cost, "lambda": self.lam, "baseline": self.baseline}
