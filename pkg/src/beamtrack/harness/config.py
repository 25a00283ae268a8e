"""JSON experiment configuration: schema, defaults, and strict validation.

Unknown keys are rejected and every diagnostic names the offending field,
so a typo in a config file fails loudly instead of silently using a
default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..envs.curves import CurveSpec
from ..envs.manipulator import DisturbanceSpec, EnvConfig, RewardWeights
from ..envs.pendulum import PendulumConfig, ReferenceSpec
from ..learner import TrainConfig
from ..meta import MetaConfig
from ..planner import BeamConfig

VARIANTS = ("ddqn", "transformer", "beam_fixed", "meta")
CRITICS = ("mlp", "transformer")


class ConfigError(ValueError):
    pass


class _Section:
    """Dict wrapper that tracks consumed keys and reports dotted paths."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{path or 'config'} must be a JSON object")
        self.data = data
        self.path = path
        self.seen: set[str] = set()

    def _label(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def get(self, key: str, kind, default=...):
        self.seen.add(key)
        if key not in self.data:
            if default is ...:
                raise ConfigError(f"missing required config field: {self._label(key)}")
            return default
        value = self.data[key]
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if kind is not None and not isinstance(value, kind):
            raise ConfigError(
                f"config field {self._label(key)} has wrong type "
                f"{type(value).__name__}"
            )
        if kind is int and isinstance(value, bool):
            raise ConfigError(f"config field {self._label(key)} has wrong type bool")
        return value

    def section(self, key: str, required: bool = True) -> "_Section | None":
        self.seen.add(key)
        if key not in self.data:
            if required:
                raise ConfigError(f"missing required config section: {self._label(key)}")
            return None
        return _Section(self.data[key], self._label(key))

    def finish(self) -> None:
        unknown = sorted(set(self.data) - self.seen)
        if unknown:
            raise ConfigError(f"unknown config key: {self._label(unknown[0])}")


def _pair_or_none(value, label: str):
    if value is None:
        return None
    if len(value) != 2 or value[0] >= value[1]:
        raise ConfigError(f"config field {label} must be [low, high] with low < high")
    return (float(value[0]), float(value[1]))


@dataclass(frozen=True)
class NetConfig:
    dueling: bool = True
    hidden: tuple[int, ...] = (128, 128)
    history_len: int = 8
    embed_dim: int = 64
    heads: int = 4
    layers: int = 2
    pooling: str = "last_token"


@dataclass(frozen=True)
class ExperimentConfig:
    variant: str
    episodes: int
    seeds: tuple[int, ...]
    out_dir: str
    log_steps: bool
    env_kind: str
    env: EnvConfig | PendulumConfig
    curve: CurveSpec | None
    reference: ReferenceSpec | None
    train: TrainConfig
    critic: str
    net: NetConfig
    beam: BeamConfig | None
    greedy_shortcut: bool
    meta: MetaConfig | None
    checkpoint_every: int = 0  # episodes between checkpoints; 0 disables


def _parse_weights(sec: _Section | None) -> RewardWeights:
    if sec is None:
        return RewardWeights()
    w = RewardWeights(
        position=sec.get("position", float, 1.0),
        torque=sec.get("torque", float, 0.01),
        smoothness=sec.get("smoothness", float, 0.001),
        violation=sec.get("violation", float, 1.0),
    )
    sec.finish()
    return w


def _parse_disturbance(sec: _Section | None) -> DisturbanceSpec:
    if sec is None:
        return DisturbanceSpec()
    d = DisturbanceSpec(
        kind=sec.get("kind", str, "none"),
        magnitude=sec.get("magnitude", float, 0.5),
        probability=sec.get("probability", float, 0.02),
    )
    sec.finish()
    return d


def _parse_curve(sec: _Section | None) -> CurveSpec:
    if sec is None:
        return CurveSpec(kind="single_curve", amplitude=0.3)
    c = CurveSpec(
        kind=sec.get("kind", str),
        amplitude=sec.get("amplitude", float, 0.0),
        frequency=sec.get("frequency", float, 1.0),
        length=sec.get("length", float, 2.0),
        sample_count=sec.get("sample_count", int, 400),
        wall_y=sec.get("wall_y", float, 0.0),
    )
    sec.finish()
    return c


def _parse_reference(sec: _Section | None) -> ReferenceSpec:
    if sec is None:
        return ReferenceSpec()
    r = ReferenceSpec(
        kind=sec.get("kind", str, "sinusoid"),
        frequency=sec.get("frequency", float, 0.5),
        amplitude=sec.get("amplitude", float, 1.0),
        ratio=sec.get("ratio", float, 2.718),
    )
    sec.finish()
    return r


def _parse_env(sec: _Section):
    kind = sec.get("kind", str, "manipulator")
    if kind == "manipulator":
        env = EnvConfig(
            dt=sec.get("dt", float, 0.02),
            horizon=sec.get("horizon", int, 1000),
            e_max=sec.get("e_max", float, 1.0),
            weights=_parse_weights(sec.section("weights", required=False)),
            torque_bins=sec.get("torque_bins", int, 3),
            standoff=sec.get("standoff", float, 0.6),
            disturbance=_parse_disturbance(sec.section("disturbance", required=False)),
            reset_noise=sec.get("reset_noise", float, 0.05),
        )
        curve = _parse_curve(sec.section("curve", required=False))
        sec.finish()
        return kind, env, curve, None
    if kind == "pendulum":
        env = PendulumConfig(
            dt=sec.get("dt", float, 0.05),
            horizon=sec.get("horizon", int, 200),
            reset_noise=sec.get("reset_noise", float, 0.05),
        )
        reference = _parse_reference(sec.section("reference", required=False))
        sec.finish()
        return kind, env, None, reference
    raise ConfigError(f"config field {sec._label('kind')} must be manipulator or pendulum")


def _parse_train(sec: _Section | None) -> tuple[TrainConfig, str, NetConfig]:
    if sec is None:
        return TrainConfig(), "mlp", NetConfig()
    critic = sec.get("critic", str, "mlp")
    if critic not in CRITICS:
        raise ConfigError(f"config field {sec._label('critic')} must be one of {CRITICS}")
    train = TrainConfig(
        gamma=sec.get("gamma", float, 0.99),
        lr=sec.get("lr", float, 1e-3),
        batch_size=sec.get("batch_size", int, 64),
        capacity=sec.get("capacity", int, 100_000),
        eps_start=sec.get("eps_start", float, 1.0),
        eps_end=sec.get("eps_end", float, 0.05),
        eps_decay=sec.get("eps_decay", float, 20_000.0),
        warmup_steps=sec.get("warmup_steps", int, 2000),
        polyak_tau=sec.get("polyak_tau", float, 0.005),
        train_every=sec.get("train_every", int, 1),
        clip_grad_norm=sec.get("clip_grad_norm", float, 10.0),
        target_clip=_pair_or_none(sec.get("target_clip", list, None), sec._label("target_clip")),
    )
    hidden = sec.get("hidden", list, [128, 128])
    net = NetConfig(
        dueling=sec.get("dueling", bool, True),
        hidden=tuple(int(h) for h in hidden),
        history_len=sec.get("history_len", int, 8),
        embed_dim=sec.get("embed_dim", int, 64),
        heads=sec.get("heads", int, 4),
        layers=sec.get("layers", int, 2),
        pooling=sec.get("pooling", str, "last_token"),
    )
    sec.finish()
    return train, critic, net


def _parse_planner(sec: _Section | None) -> tuple[BeamConfig | None, bool]:
    if sec is None:
        return None, False
    beam = BeamConfig(width=sec.get("width", int, 2), depth=sec.get("depth", int, 3))
    shortcut = sec.get("greedy_shortcut", bool, False)
    sec.finish()
    return beam, shortcut


def _parse_meta(sec: _Section | None) -> MetaConfig | None:
    if sec is None:
        return None
    budget = sec.get("budget", float, None)
    meta = MetaConfig(
        alpha_err=sec.get("alpha_err", float, 10.0),
        alpha_trend=sec.get("alpha_trend", float, 5.0),
        alpha_flop=sec.get("alpha_flop", float, 1e-4),
        alpha_switch=sec.get("alpha_switch", float, 0.02),
        entropy_weight=sec.get("entropy_weight", float, 0.01),
        lr=sec.get("lr", float, 1e-3),
        dual_lr=sec.get("dual_lr", float, 1e-3),
        budget=budget,
        gamma_meta=sec.get("gamma_meta", float, 0.95),
        temperature=sec.get("temperature", float, 1.0),
        mad_floor=sec.get("mad_floor", float, 1e-3),
        lambda_init=sec.get("lambda_init", float, 0.01),
        baseline_decay=sec.get("baseline_decay", float, 0.99),
        trend_decay=sec.get("trend_decay", float, 0.9),
        error_scale=sec.get("error_scale", float, 1.0),
        b_max=sec.get("b_max", int, 6),
        d_max=sec.get("d_max", int, 6),
        hidden=sec.get("hidden", int, 64),
        cadence=sec.get("cadence", str, "step"),
    )
    sec.finish()
    return meta


def parse_experiment_config(raw: dict) -> ExperimentConfig:
    top = _Section(raw, "")
    variant = top.get("variant", str)
    if variant not in VARIANTS:
        raise ConfigError(f"config field variant must be one of {VARIANTS}")
    episodes = top.get("episodes", int)
    if episodes < 1:
        raise ConfigError("config field episodes must be at least 1")
    seeds_raw = top.get("seeds", list)
    if not seeds_raw:
        raise ConfigError("config field seeds must be a nonempty list")
    seeds = tuple(int(s) for s in seeds_raw)
    out_dir = top.get("out_dir", str)
    log_steps = top.get("log_steps", bool, False)
    checkpoint_every = top.get("checkpoint_every", int, 0)

    env_kind, env, curve, reference = _parse_env(top.section("env"))
    train, critic, net = _parse_train(top.section("train", required=False))
    beam, shortcut = _parse_planner(top.section("planner", required=variant == "beam_fixed"))
    meta = _parse_meta(top.section("meta", required=variant == "meta"))
    top.finish()

    if variant == "beam_fixed" and beam is None:
        raise ConfigError("variant beam_fixed requires a planner section")
    if variant == "meta" and meta is None:
        raise ConfigError("variant meta requires a meta section")
    if meta is not None and env_kind == "manipulator":
        if meta.error_scale == 1.0 and env.e_max != 1.0:
            meta = _replace_meta(meta, error_scale=env.e_max)

    return ExperimentConfig(
        variant=variant,
        episodes=episodes,
        seeds=seeds,
        out_dir=out_dir,
        log_steps=log_steps,
        env_kind=env_kind,
        env=env,
        curve=curve,
        reference=reference,
        train=train,
        critic=critic,
        net=net,
        beam=beam,
        greedy_shortcut=shortcut,
        meta=meta,
        checkpoint_every=checkpoint_every,
    )


def _replace_meta(meta: MetaConfig, **changes) -> MetaConfig:
    import dataclasses

    return dataclasses.replace(meta, **changes)


def load_experiment_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError(f"config file {path} is not valid JSON: {err}") from err
    return parse_experiment_config(raw)
