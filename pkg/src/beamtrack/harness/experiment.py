"""Experiment orchestration: build env/critic/buffer per seed, drive the
variant's action-selection loop, train off-policy, and emit CSV/JSON.

The episodes.csv files are byte-stable across reruns of the same
config+seed; to keep that true the wall_ms column is a deterministic
compute estimate (simulator calls times a nominal per-call cost), while
measured wall time goes to summary.json.
"""

from __future__ import annotations

import dataclasses
import json
import time
from pathlib import Path

import numpy as np

from ..envs.manipulator import ManipulatorEnv
from ..envs.pendulum import PendulumTrackingEnv
from ..learner import ReplayBuffer, epsilon_value, train_step
from ..meta import MetaController
from ..planner import beam_plan
from ..valuenet.checkpoint import save_checkpoint
from ..valuenet.critics import MlpCritic, TransformerCritic
from ..valuenet.mlp import MlpArch
from ..valuenet.transformer import TransformerArch
from .config import ExperimentConfig
from .metrics import convergence_episode, tracking_efficiency

NOMINAL_STEP_MS = 0.05  # fixed per-simulator-call cost used for the wall_ms column

EPISODE_HEADER = "episode,return,mean_err,mean_err_norm,mean_B,mean_D,violations,wall_ms"
STEP_HEADER = (
    "episode,step,action,reward,error,B,D,r_meta,lambda,cost,"
    "f_log_err,f_trend,f_disagree,f_entropy,f_prev_b,f_prev_d,f_time_left"
)


def _fmt(x: float) -> str:
    return f"{float(x):.10g}"


def make_env(cfg: ExperimentConfig, seed):
    if cfg.env_kind == "manipulator":
        return ManipulatorEnv(cfg.env, cfg.curve, seed)
    return PendulumTrackingEnv(cfg.env, cfg.reference, seed)


def make_critic(cfg: ExperimentConfig, state_dim: int, n_actions: int, seed):
    if cfg.critic == "transformer":
        arch = TransformerArch(
            state_dim=state_dim,
            n_actions=n_actions,
            history_len=cfg.net.history_len,
            embed_dim=cfg.net.embed_dim,
            heads=cfg.net.heads,
            layers=cfg.net.layers,
            pooling=cfg.net.pooling,
            dueling=cfg.net.dueling,
        )
        return TransformerCritic(arch, seed=seed, lr=cfg.train.lr)
    arch = MlpArch(
        state_dim=state_dim,
        n_actions=n_actions,
        hidden=cfg.net.hidden,
        dueling=cfg.net.dueling,
    )
    return MlpCritic(arch, seed=seed, lr=cfg.train.lr)


def run_single_seed(cfg: ExperimentConfig, seed: int, checkpoint_dir: Path | None = None):
    """Train one seed; returns (episode rows, step telemetry, critic)."""
    streams = np.random.SeedSequence(seed).spawn(6)
    env = make_env(cfg, streams[0])
    state_dim = len(env.state_vector())
    critic = make_critic(cfg, state_dim, env.n_actions, streams[1])
    buffer = ReplayBuffer(cfg.train.capacity, critic.repr_shape, streams[2])
    act_rng = np.random.default_rng(streams[3])
    controller = None
    if cfg.variant == "meta":
        controller = MetaController(cfg.meta, env.n_actions, streams[4], streams[5])

    horizon = cfg.env.horizon
    gamma = cfg.train.gamma
    train_cfg = cfg.train
    rows = []
    step_rows = []
    global_step = 0

    episode_cadence = cfg.variant == "meta" and cfg.meta.cadence == "episode"
    prev_ep_error = None

    for ep in range(cfg.episodes):
        state = env.reset()
        repr_ = critic.repr0(state)
        if controller is not None and not episode_cadence:
            controller.begin_episode(env.current_error)
        ep_bd = None
        ep_ctx = None
        calls_before = env.step_calls
        ep_return = 0.0
        err_sum = 0.0
        errn_sum = 0.0
        b_sum = 0.0
        d_sum = 0.0
        violations = 0
        steps = 0
        done = False
        while not done:
            # every variant shares one exploration schedule; planning variants
            # fall back to a random action on exploration steps
            warm = global_step < train_cfg.warmup_steps
            explore = warm or act_rng.random() < epsilon_value(global_step, train_cfg)
            width = depth = 1
            meta_ctx = None
            if cfg.variant == "meta" and episode_cadence and not warm and ep_bd is None:
                # one configuration per episode, sampled from episode-start context
                q_on = critic.q_values(repr_)
                q_tg = critic.q_target_values(repr_)
                ep_bd, ep_ctx = controller.choose(
                    q_on, q_tg, env.current_error, env.time_index, horizon
                )
            if explore:
                action = int(act_rng.integers(env.n_actions))
                if episode_cadence and ep_bd is not None:
                    width, depth = ep_bd
            elif cfg.variant in ("ddqn", "transformer"):
                action = int(np.argmax(critic.q_values(repr_)))
            elif cfg.variant == "beam_fixed":
                width, depth = cfg.beam.width, cfg.beam.depth
                action = beam_plan(env, repr_, critic, width, depth, gamma, cfg.greedy_shortcut)
            elif episode_cadence:
                width, depth = ep_bd
                action = beam_plan(env, repr_, critic, width, depth, gamma, cfg.greedy_shortcut)
            else:
                q_on = critic.q_values(repr_)
                q_tg = critic.q_target_values(repr_)
                (width, depth), meta_ctx = controller.choose(
                    q_on, q_tg, env.current_error, env.time_index, horizon
                )
                action = beam_plan(env, repr_, critic, width, depth, gamma, cfg.greedy_shortcut)

            state, reward, done = env.step(action)
            next_repr = critic.push(repr_, state)
            buffer.add(repr_, action, reward, next_repr, done)
            repr_ = next_repr

            meta_rec = None
            if controller is not None and not episode_cadence:
                if meta_ctx is not None:
                    meta_rec = controller.observe((width, depth), env.current_error, meta_ctx)
                else:
                    controller.track_passive(env.current_error)

            global_step += 1
            if (
                not warm
                and global_step % train_cfg.train_every == 0
                and len(buffer) >= train_cfg.batch_size
            ):
                train_step(buffer, critic, train_cfg)

            ep_return += reward
            err_sum += env.current_error
            errn_sum += min(env.current_error / getattr(cfg.env, "e_max", 1.0), 1.0)
            b_sum += width
            d_sum += depth
            if getattr(env, "last_violation", False):
                violations += 1
            steps += 1
            if cfg.log_steps:
                features = meta_ctx["features"] if meta_ctx is not None else np.zeros(7)
                step_rows.append(
                    (
                        ep,
                        steps - 1,
                        action,
                        reward,
                        env.current_error,
                        width,
                        depth,
                        meta_rec["r_meta"] if meta_rec else 0.0,
                        meta_rec["lambda"] if meta_rec else 0.0,
                        meta_rec["cost"] if meta_rec else 0.0,
                        features,
                    )
                )

        mean_error = err_sum / steps
        if episode_cadence and ep_ctx is not None and prev_ep_error is not None:
            # credit the episode's configuration with the episode-level change
            controller.e_prev = prev_ep_error
            controller.observe(ep_bd, mean_error, ep_ctx)
        if episode_cadence:
            prev_ep_error = mean_error

        if (
            checkpoint_dir is not None
            and cfg.checkpoint_every > 0
            and (ep + 1) % cfg.checkpoint_every == 0
        ):
            save_checkpoint(checkpoint_dir / f"checkpoint_ep{ep + 1:05d}.npz", critic)

        wall_ms = (env.step_calls - calls_before) * NOMINAL_STEP_MS
        rows.append(
            (
                ep,
                ep_return,
                mean_error,
                errn_sum / steps,
                b_sum / steps,
                d_sum / steps,
                violations,
                wall_ms,
            )
        )
    return rows, step_rows, critic


def write_episodes_csv(path: Path, rows) -> None:
    lines = [EPISODE_HEADER]
    for ep, ret, me, men, mb, md, viol, wall in rows:
        lines.append(
            f"{ep},{_fmt(ret)},{_fmt(me)},{_fmt(men)},{_fmt(mb)},{_fmt(md)},{viol},{_fmt(wall)}"
        )
    path.write_text("\n".join(lines) + "\n")


def write_steps_csv(path: Path, rows) -> None:
    lines = [STEP_HEADER]
    for ep, st, a, r, e, b, d, rm, lam, cost, feats in rows:
        feat_cols = ",".join(_fmt(v) for v in feats)
        lines.append(
            f"{ep},{st},{a},{_fmt(r)},{_fmt(e)},{b},{d},{_fmt(rm)},{_fmt(lam)},{_fmt(cost)},{feat_cols}"
        )
    path.write_text("\n".join(lines) + "\n")


def _seed_summary(rows, e_max: float, tail: int = 50) -> dict:
    returns = np.array([r[1] for r in rows])
    errors = np.array([r[2] for r in rows])
    final_returns = returns[-tail:]
    final_errors = errors[-tail:]
    return {
        "episodes": len(rows),
        "final_return_mean": float(final_returns.mean()),
        "final_error_mean": float(final_errors.mean()),
        "tracking_efficiency": tracking_efficiency(float(final_errors.mean()), e_max),
        "convergence_95": convergence_episode(returns, 0.95),
        "mean_beam_width": float(np.mean([r[4] for r in rows])),
        "mean_beam_depth": float(np.mean([r[5] for r in rows])),
    }


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run every seed, write per-seed CSVs and an experiment summary."""
    t_start = time.monotonic()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    e_max = getattr(cfg.env, "e_max", 1.0)
    per_seed = {}
    for seed in cfg.seeds:
        seed_dir = out / f"seed_{seed}"
        seed_dir.mkdir(parents=True, exist_ok=True)
        rows, step_rows, critic = run_single_seed(cfg, seed, checkpoint_dir=seed_dir)
        write_episodes_csv(seed_dir / "episodes.csv", rows)
        if cfg.log_steps:
            write_steps_csv(seed_dir / "steps.csv", step_rows)
        save_checkpoint(seed_dir / "checkpoint_final.npz", critic)
        per_seed[str(seed)] = _seed_summary(rows, e_max)

    finals = [s["final_return_mean"] for s in per_seed.values()]
    errors = [s["final_error_mean"] for s in per_seed.values()]
    summary = {
        "variant": cfg.variant,
        "seeds": list(cfg.seeds),
        "config": dataclasses.asdict(cfg),
        "per_seed": per_seed,
        "aggregate": {
            "final_return_mean": float(np.mean(finals)),
            "final_return_std": float(np.std(finals, ddof=1)) if len(finals) > 1 else 0.0,
            "final_error_mean": float(np.mean(errors)),
            "tracking_efficiency": tracking_efficiency(float(np.mean(errors)), e_max),
        },
        "wall_seconds": time.monotonic() - t_start,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def recompute_summary(run_dir) -> dict:
    """Rebuild aggregate metrics from the episode CSVs in a run directory."""
    run = Path(run_dir)
    seed_dirs = sorted(run.glob("seed_*"))
    if not seed_dirs:
        raise FileNotFoundError(f"no seed_* directories under {run}")
    per_seed = {}
    for sd in seed_dirs:
        csv_path = sd / "episodes.csv"
        lines = csv_path.read_text().strip().split("\n")
        if lines[0] != EPISODE_HEADER:
            raise ValueError(f"{csv_path} has an unexpected header")
        rows = []
        for line in lines[1:]:
            parts = line.split(",")
            rows.append(
                (
                    int(parts[0]),
                    float(parts[1]),
                    float(parts[2]),
                    float(parts[3]),
                    float(parts[4]),
                    float(parts[5]),
                    int(parts[6]),
                    float(parts[7]),
                )
            )
        per_seed[sd.name.removeprefix("seed_")] = _seed_summary(rows, 1.0)
    finals = [s["final_return_mean"] for s in per_seed.values()]
    errors = [s["final_error_mean"] for s in per_seed.values()]
    return {
        "per_seed": per_seed,
        "aggregate": {
            "final_return_mean": float(np.mean(finals)),
            "final_return_std": float(np.std(finals, ddof=1)) if len(finals) > 1 else 0.0,
            "final_error_mean": float(np.mean(errors)),
        },
    }
