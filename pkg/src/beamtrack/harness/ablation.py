"""Frequency ablation and fixed-beam sandbox sweep on the pendulum task.

The ablation trains a DDQN critic per reference frequency while a
deterministic heuristic rule drives the beam configuration from the error
trend, then reports how the mean width/depth chosen during evaluation
correlates with frequency.  The sweep trains critics per reference shape
and evaluates a grid of fixed beams, reporting a threshold-based tracking
percentage next to the retained-tree search efficiency.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..envs.pendulum import PendulumConfig, PendulumTrackingEnv, ReferenceSpec
from ..learner import ReplayBuffer, TrainConfig, epsilon_value, train_step
from ..meta import ErrorTrend, HeuristicRuleConfig, heuristic_beam_rule
from ..planner import beam_plan, search_efficiency
from ..valuenet.critics import MlpCritic
from ..valuenet.mlp import MlpArch
from .config import ConfigError, _Section
from .metrics import pearson

ABLATION_FREQUENCIES = (0.2, 0.5, 0.75, 1.0, 1.5, 2.0)
SWEEP_BEAMS = ((1, 1), (2, 3), (4, 6), (5, 6))


@dataclass(frozen=True)
class AblationConfig:
    out_dir: str
    seeds: tuple[int, ...] = (0, 1, 2)
    episodes: int = 200
    eval_episodes: int = 3
    frequencies: tuple[float, ...] = ABLATION_FREQUENCIES
    amplitude: float = 1.0
    pendulum: PendulumConfig = PendulumConfig()
    train: TrainConfig = TrainConfig(warmup_steps=500, eps_decay=5000.0)
    hidden: tuple[int, ...] = (128, 128)
    dueling: bool = True
    k_b: float = 1.0
    k_d: float = 1.0
    eps_ref: float | None = None  # None -> pooled calibration
    calibration_episodes: int = 2
    # fast EMA: the rule keys on near-instantaneous error changes, which a
    # 0.9 decay would average away at high reference frequencies
    trend_decay: float = 0.5


@dataclass(frozen=True)
class SweepConfig:
    out_dir: str
    seeds: tuple[int, ...] = (0, 1, 2)
    episodes: int = 150
    eval_episodes: int = 3
    threshold: float = 0.1
    beams: tuple[tuple[int, int], ...] = SWEEP_BEAMS
    references: tuple[tuple[str, ReferenceSpec], ...] = (
        ("straight", ReferenceSpec(kind="sinusoid", frequency=0.0, amplitude=0.0)),
        ("single_curve", ReferenceSpec(kind="sinusoid", frequency=0.35, amplitude=0.4)),
        ("nonuniform_wave", ReferenceSpec(kind="two_tone", frequency=0.35, amplitude=0.4, ratio=1.7)),
    )
    pendulum: PendulumConfig = PendulumConfig()
    train: TrainConfig = TrainConfig(warmup_steps=500, eps_decay=5000.0)
    hidden: tuple[int, ...] = (128, 128)
    dueling: bool = True
    gamma: float = 0.99


def _parse_train_section(sec: _Section | None, default: TrainConfig) -> TrainConfig:
    if sec is None:
        return default
    cfg = TrainConfig(
        gamma=sec.get("gamma", float, default.gamma),
        lr=sec.get("lr", float, default.lr),
        batch_size=sec.get("batch_size", int, default.batch_size),
        capacity=sec.get("capacity", int, default.capacity),
        eps_start=sec.get("eps_start", float, default.eps_start),
        eps_end=sec.get("eps_end", float, default.eps_end),
        eps_decay=sec.get("eps_decay", float, default.eps_decay),
        warmup_steps=sec.get("warmup_steps", int, default.warmup_steps),
        polyak_tau=sec.get("polyak_tau", float, default.polyak_tau),
        train_every=sec.get("train_every", int, default.train_every),
        clip_grad_norm=sec.get("clip_grad_norm", float, default.clip_grad_norm),
    )
    sec.finish()
    return cfg


def _parse_pendulum_section(sec: _Section | None) -> PendulumConfig:
    if sec is None:
        return PendulumConfig()
    cfg = PendulumConfig(
        dt=sec.get("dt", float, 0.05),
        horizon=sec.get("horizon", int, 200),
        reset_noise=sec.get("reset_noise", float, 0.05),
    )
    sec.finish()
    return cfg


def parse_ablation_config(raw: dict) -> AblationConfig:
    top = _Section(raw, "")
    defaults = AblationConfig(out_dir="")
    cfg = AblationConfig(
        out_dir=top.get("out_dir", str),
        seeds=tuple(int(s) for s in top.get("seeds", list, list(defaults.seeds))),
        episodes=top.get("episodes", int, defaults.episodes),
        eval_episodes=top.get("eval_episodes", int, defaults.eval_episodes),
        frequencies=tuple(float(f) for f in top.get("frequencies", list, list(defaults.frequencies))),
        amplitude=top.get("amplitude", float, defaults.amplitude),
        pendulum=_parse_pendulum_section(top.section("pendulum", required=False)),
        train=_parse_train_section(top.section("train", required=False), defaults.train),
        hidden=tuple(int(h) for h in top.get("hidden", list, [128, 128])),
        dueling=top.get("dueling", bool, True),
        k_b=top.get("k_b", float, 1.0),
        k_d=top.get("k_d", float, 1.0),
        eps_ref=top.get("eps_ref", float, None),
        calibration_episodes=top.get("calibration_episodes", int, defaults.calibration_episodes),
        trend_decay=top.get("trend_decay", float, defaults.trend_decay),
    )
    top.finish()
    if not cfg.seeds:
        raise ConfigError("config field seeds must be a nonempty list")
    return cfg


def parse_sweep_config(raw: dict) -> SweepConfig:
    top = _Section(raw, "")
    defaults = SweepConfig(out_dir="")
    refs_raw = top.get("references", list, None)
    if refs_raw is None:
        references = defaults.references
    else:
        references = []
        for i, item in enumerate(refs_raw):
            sec = _Section(item, f"references[{i}]")
            label = sec.get("label", str)
            spec = ReferenceSpec(
                kind=sec.get("kind", str, "sinusoid"),
                frequency=sec.get("frequency", float, 0.5),
                amplitude=sec.get("amplitude", float, 1.0),
                ratio=sec.get("ratio", float, 2.718),
            )
            sec.finish()
            references.append((label, spec))
        references = tuple(references)
    beams_raw = top.get("beams", list, None)
    beams = defaults.beams if beams_raw is None else tuple((int(b), int(d)) for b, d in beams_raw)
    cfg = SweepConfig(
        out_dir=top.get("out_dir", str),
        seeds=tuple(int(s) for s in top.get("seeds", list, list(defaults.seeds))),
        episodes=top.get("episodes", int, defaults.episodes),
        eval_episodes=top.get("eval_episodes", int, defaults.eval_episodes),
        threshold=top.get("threshold", float, defaults.threshold),
        beams=beams,
        references=references,
        pendulum=_parse_pendulum_section(top.section("pendulum", required=False)),
        train=_parse_train_section(top.section("train", required=False), defaults.train),
        hidden=tuple(int(h) for h in top.get("hidden", list, [128, 128])),
        dueling=top.get("dueling", bool, True),
        gamma=top.get("gamma", float, defaults.gamma),
    )
    top.finish()
    if not cfg.seeds:
        raise ConfigError("config field seeds must be a nonempty list")
    return cfg


def load_ablation_config(path) -> AblationConfig:
    with open(path) as fh:
        return parse_ablation_config(json.load(fh))


def load_sweep_config(path) -> SweepConfig:
    with open(path) as fh:
        return parse_sweep_config(json.load(fh))


# -- frequency ablation --------------------------------------------------------


def calibrate_eps_ref(cfg: AblationConfig) -> float:
    """Pooled 95th percentile of |error trend| under random actions.

    One pool across every ablation frequency so the rule shares a single
    normalizer; per-frequency normalizers would erase the trend the study
    is after.
    """
    samples = []
    for fi, freq in enumerate(cfg.frequencies):
        ref = ReferenceSpec(kind="sinusoid", frequency=freq, amplitude=cfg.amplitude)
        env = PendulumTrackingEnv(cfg.pendulum, ref, np.random.SeedSequence(90_000 + fi))
        rng = np.random.default_rng(10_000 + fi)
        trend = ErrorTrend(cfg.trend_decay)
        for _ in range(cfg.calibration_episodes):
            env.reset()
            trend.reset()
            e_prev = env.current_error
            done = False
            while not done:
                _, _, done = env.step(int(rng.integers(env.n_actions)))
                samples.append(abs(trend.update(env.current_error, e_prev)))
                e_prev = env.current_error
    return float(np.percentile(samples, 95))


def _train_rule_driven(cfg: AblationConfig, freq: float, seed: int, rule: HeuristicRuleConfig):
    """Train a DDQN critic at one frequency with rule-driven planning."""
    streams = np.random.SeedSequence(seed).spawn(4)
    ref = ReferenceSpec(kind="sinusoid", frequency=freq, amplitude=cfg.amplitude)
    env = PendulumTrackingEnv(cfg.pendulum, ref, streams[0])
    state_dim = len(env.state_vector())
    critic = MlpCritic(
        MlpArch(state_dim, env.n_actions, hidden=cfg.hidden, dueling=cfg.dueling),
        seed=streams[1],
        lr=cfg.train.lr,
    )
    buffer = ReplayBuffer(cfg.train.capacity, critic.repr_shape, streams[2])
    act_rng = np.random.default_rng(streams[3])
    trend = ErrorTrend(cfg.trend_decay)
    global_step = 0
    for _ in range(cfg.episodes):
        state = env.reset()
        repr_ = critic.repr0(state)
        trend.reset()
        e_prev = env.current_error
        done = False
        while not done:
            warm = global_step < cfg.train.warmup_steps
            if warm or act_rng.random() < epsilon_value(global_step, cfg.train):
                action = int(act_rng.integers(env.n_actions))
            else:
                width, depth = heuristic_beam_rule(e_prev, trend.value, rule)
                action = beam_plan(env, repr_, critic, width, depth, cfg.train.gamma)
            state, reward, done = env.step(action)
            next_repr = critic.push(repr_, state)
            buffer.add(repr_, action, reward, next_repr, done)
            repr_ = next_repr
            trend.update(env.current_error, e_prev)
            e_prev = env.current_error
            global_step += 1
            if not warm and len(buffer) >= cfg.train.batch_size:
                train_step(buffer, critic, cfg.train)
    return env, critic


def _evaluate_rule(env, critic, cfg: AblationConfig, rule: HeuristicRuleConfig):
    """Greedy rule-driven rollouts; returns mean width, depth, error."""
    widths = []
    depths = []
    errors = []
    trend = ErrorTrend(cfg.trend_decay)
    for _ in range(cfg.eval_episodes):
        state = env.reset()
        repr_ = critic.repr0(state)
        trend.reset()
        e_prev = env.current_error
        done = False
        while not done:
            width, depth = heuristic_beam_rule(e_prev, trend.value, rule)
            action = beam_plan(env, repr_, critic, width, depth, cfg.train.gamma)
            state, _, done = env.step(action)
            repr_ = critic.push(repr_, state)
            trend.update(env.current_error, e_prev)
            e_prev = env.current_error
            widths.append(width)
            depths.append(depth)
            errors.append(env.current_error)
    return float(np.mean(widths)), float(np.mean(depths)), float(np.mean(errors))


def frequency_ablation(cfg: AblationConfig) -> dict:
    """Sweep reference frequencies; correlate mean beam shape with frequency."""
    eps_ref = cfg.eps_ref if cfg.eps_ref is not None else calibrate_eps_ref(cfg)
    rule = HeuristicRuleConfig(eps_ref=eps_ref, k_b=cfg.k_b, k_d=cfg.k_d)
    rows = []
    for freq in cfg.frequencies:
        widths = []
        depths = []
        errors = []
        for seed in cfg.seeds:
            env, critic = _train_rule_driven(cfg, freq, seed, rule)
            w, d, e = _evaluate_rule(env, critic, cfg, rule)
            widths.append(w)
            depths.append(d)
            errors.append(e)
        rows.append(
            {
                "frequency": freq,
                "mean_width": float(np.mean(widths)),
                "mean_depth": float(np.mean(depths)),
                "mean_error": float(np.mean(errors)),
            }
        )
    freqs = [r["frequency"] for r in rows]
    result = {
        "eps_ref": eps_ref,
        "rows": rows,
        "corr_width_frequency": pearson(freqs, [r["mean_width"] for r in rows]),
        "corr_depth_frequency": pearson(freqs, [r["mean_depth"] for r in rows]),
    }
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["frequency,mean_B,mean_D,mean_error"]
    for r in rows:
        lines.append(
            f"{r['frequency']:.10g},{r['mean_width']:.10g},{r['mean_depth']:.10g},{r['mean_error']:.10g}"
        )
    (out / "frequency_ablation.csv").write_text("\n".join(lines) + "\n")
    (out / "frequency_ablation.json").write_text(json.dumps(result, indent=2) + "\n")
    return result


# -- fixed-beam sandbox sweep ----------------------------------------------------


def _train_plain_ddqn(cfg: SweepConfig, ref: ReferenceSpec, seed: int):
    """Epsilon-greedy DDQN training with no planner in the loop."""
    streams = np.random.SeedSequence(seed).spawn(4)
    env = PendulumTrackingEnv(cfg.pendulum, ref, streams[0])
    state_dim = len(env.state_vector())
    critic = MlpCritic(
        MlpArch(state_dim, env.n_actions, hidden=cfg.hidden, dueling=cfg.dueling),
        seed=streams[1],
        lr=cfg.train.lr,
    )
    buffer = ReplayBuffer(cfg.train.capacity, critic.repr_shape, streams[2])
    act_rng = np.random.default_rng(streams[3])
    global_step = 0
    for _ in range(cfg.episodes):
        state = env.reset()
        repr_ = critic.repr0(state)
        done = False
        while not done:
            warm = global_step < cfg.train.warmup_steps
            if warm or act_rng.random() < epsilon_value(global_step, cfg.train):
                action = int(act_rng.integers(env.n_actions))
            else:
                action = int(np.argmax(critic.q_values(repr_)))
            state, reward, done = env.step(action)
            next_repr = critic.push(repr_, state)
            buffer.add(repr_, action, reward, next_repr, done)
            repr_ = next_repr
            global_step += 1
            if not warm and len(buffer) >= cfg.train.batch_size:
                train_step(buffer, critic, cfg.train)
    return env, critic


def _evaluate_beam(env, critic, cfg: SweepConfig, width: int, depth: int) -> float:
    """Tracking percentage: share of steps with wrapped error below threshold."""
    hits = 0
    total = 0
    for _ in range(cfg.eval_episodes):
        state = env.reset()
        repr_ = critic.repr0(state)
        done = False
        while not done:
            action = beam_plan(env, repr_, critic, width, depth, cfg.gamma)
            state, _, done = env.step(action)
            repr_ = critic.push(repr_, state)
            if env.current_error < cfg.threshold:
                hits += 1
            total += 1
    return 100.0 * hits / total


def sandbox_sweep(cfg: SweepConfig) -> dict:
    """Tracking% for each reference shape and fixed beam, plus efficiency."""
    rows = []
    for label, ref in cfg.references:
        trained = [_train_plain_ddqn(cfg, ref, seed) for seed in cfg.seeds]
        for width, depth in cfg.beams:
            scores = [
                _evaluate_beam(env, critic, cfg, width, depth) for env, critic in trained
            ]
            rows.append(
                {
                    "curve": label,
                    "width": width,
                    "depth": depth,
                    "tracking_pct": float(np.mean(scores)),
                    "tracking_pct_per_seed": [float(s) for s in scores],
                    "search_efficiency": search_efficiency(width, depth, 5),
                }
            )
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["curve,B,D,tracking_pct,search_eff_pct"]
    for r in rows:
        lines.append(
            f"{r['curve']},{r['width']},{r['depth']},{r['tracking_pct']:.10g},{r['search_efficiency']:.10g}"
        )
    (out / "sandbox_sweep.csv").write_text("\n".join(lines) + "\n")
    (out / "sandbox_sweep.json").write_text(json.dumps({"rows": rows}, indent=2) + "\n")
    return {"rows": rows}
