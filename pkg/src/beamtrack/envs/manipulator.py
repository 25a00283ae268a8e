"""Wall-tracking environment for the aerial manipulator.

The UAV base glides along a prescribed offset path; the agent torques the
3-DoF arm so the end-effector stays on the target curve while the arm's
own weight rocks the (PID-held) pitch channel.  Episodes are fully
deterministic given (seed, config, action sequence), and the whole state
can be snapshotted and restored bit-for-bit, which is what the beam
planner leans on for its rollouts.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from itertools import product
from typing import NamedTuple

import numpy as np

from .. import dynamics as dyn
from ..geometry import LinkGeometry, body_fk, rot_y
from .curves import Curve, CurveSpec, generate_base_path, generate_curve, normalize_error, tracking_error

STATE_DIM = 10


@dataclass(frozen=True)
class RewardWeights:
    position: float = 1.0
    torque: float = 0.01
    smoothness: float = 0.001
    violation: float = 1.0

    def __post_init__(self) -> None:
        if min(self.position, self.torque, self.smoothness, self.violation) < 0:
            raise ValueError("reward weights must be nonnegative")


@dataclass(frozen=True)
class DisturbanceSpec:
    kind: str = "none"  # none | gust
    magnitude: float = 0.5
    probability: float = 0.02

    def __post_init__(self) -> None:
        if self.kind not in ("none", "gust"):
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("gust probability must lie in [0, 1]")


@dataclass(frozen=True)
class EnvConfig:
    dt: float = 0.02
    horizon: int = 1000
    e_max: float = 1.0
    weights: RewardWeights = field(default_factory=RewardWeights)
    torque_bins: int = 3
    standoff: float = 0.6
    disturbance: DisturbanceSpec = field(default_factory=DisturbanceSpec)
    reset_noise: float = 0.05

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be at least one step")
        if self.e_max <= 0:
            raise ValueError("e_max must be positive")
        if self.torque_bins < 2:
            raise ValueError("need at least two torque bins per joint")


def reward(e_norm: float, tau, qdot, violated: bool, weights: RewardWeights) -> float:
    """Per-step reward: tracking term minus effort, smoothness, violation."""
    effort = abs(tau[0]) + abs(tau[1]) + abs(tau[2])
    speed2 = qdot[0] * qdot[0] + qdot[1] * qdot[1] + qdot[2] * qdot[2]
    return (
        weights.position * (1.0 - e_norm)
        - weights.torque * effort
        - weights.smoothness * speed2
        - weights.violation * (1.0 if violated else 0.0)
    )


class EnvSnapshot(NamedTuple):
    token: tuple
    joints: dyn.JointState
    pitch: dyn.PitchState
    pid: dyn.PidState
    time_index: int
    done: bool
    ee: tuple[float, float, float]
    error: float
    rng_state: dict


def _init_joint_angles(standoff: float, links: LinkGeometry) -> tuple[float, float, float]:
    """Arm configuration that places the end-effector at (0, standoff, 0)."""
    L1, L2 = links.L1, links.L2
    c2 = (standoff * standoff - L1 * L1 - L2 * L2) / (2.0 * L1 * L2)
    if not -1.0 <= c2 <= 1.0:
        raise ValueError("standoff unreachable by the arm")
    q2 = math.acos(c2)
    q1 = -math.atan2(L2 * math.sin(q2), L1 + L2 * math.cos(q2))
    return (math.pi / 2.0, q1, q2)


class ManipulatorEnv:
    """Single-owner mutable simulator; see EnvSnapshot for value semantics."""

    def __init__(
        self,
        config: EnvConfig,
        curve_spec: CurveSpec,
        seed: int,
        params: dyn.ManipulatorParams | None = None,
        pitch_params: dyn.PitchParams | None = None,
        pid_gains: dyn.PidGains | None = None,
    ):
        self.config = config
        self.params = params or dyn.default_manipulator_params()
        self.pitch_params = pitch_params or dyn.default_pitch_params()
        self.pid_gains = pid_gains or dyn.default_pid_gains()
        self.curve_spec = curve_spec
        self.curve: Curve = generate_curve(curve_spec)
        reach = self.params.links.L1 + self.params.links.L2
        self.base_path = generate_base_path(self.curve, config.standoff, config.horizon, reach)
        bins = np.linspace(*self.params.torque_limits, config.torque_bins)
        self.action_table: tuple[tuple[float, float, float], ...] = tuple(
            (float(a), float(b), float(c)) for a, b, c in product(bins, bins, bins)
        )
        self._q_init = _init_joint_angles(config.standoff, self.params.links)
        self._rng = np.random.default_rng(seed)
        self._token = (
            config.dt, config.horizon, config.e_max, config.torque_bins,
            config.standoff, config.disturbance, curve_spec,
        )
        self._rollout = False
        self.step_calls = 0
        self.last_violation = False
        self.reset()

    # -- core API ----------------------------------------------------------

    @property
    def n_actions(self) -> int:
        return len(self.action_table)

    @property
    def current_error(self) -> float:
        return self._e

    @property
    def time_index(self) -> int:
        return self._t

    @property
    def done(self) -> bool:
        return self._done

    def reset(self) -> np.ndarray:
        noise = self.config.reset_noise
        q = self._q_init
        if noise > 0.0:
            q = tuple(q[i] + self._rng.uniform(-noise, noise) for i in range(3))
        self._joints = dyn.JointState(q, (0.0, 0.0, 0.0))
        self._pitch = dyn.PitchState(0.0, 0.0)
        self._pid = dyn.PidState(0.0, 0.0)
        self._t = 0
        self._done = False
        self.last_violation = False
        self._refresh_pose()
        return self.state_vector()

    def step(self, action: int) -> tuple[np.ndarray, float, bool]:
        if self._done:
            raise RuntimeError("step() called on a finished episode; reset() first")
        self.step_calls += 1
        cfg = self.config
        tau = self.action_table[action]
        base_rot = rot_y(self._pitch.alpha)

        qdd = dyn.forward_dynamics(self._joints, tau, base_rot, self.params)
        self._joints, violated = dyn.integrate_joints(self._joints, qdd, cfg.dt, self.params)
        self.last_violation = violated

        m_pitch = dyn.pitch_moment(self._joints.q, self.params, self.pitch_params)
        dist = cfg.disturbance
        if dist.kind == "gust" and not self._rollout:
            if self._rng.random() < dist.probability:
                m_pitch += self._rng.uniform(-dist.magnitude, dist.magnitude)
        err = self.pitch_params.alpha_ref - self._pitch.alpha
        m_pid, self._pid = dyn.pid_update(err, self._pid, self.pid_gains, cfg.dt)
        self._pitch = dyn.pitch_step(self._pitch, m_pitch, m_pid, self.pitch_params, cfg.dt)

        self._t += 1
        self._refresh_pose()
        r = reward(self._e_norm, tau, self._joints.qdot, violated, cfg.weights)
        self._done = self._t >= cfg.horizon
        return self.state_vector(), r, self._done

    def state_vector(self) -> np.ndarray:
        q = self._joints.q
        qd = self._joints.qdot
        ee = self._ee
        return np.array([q[0], q[1], q[2], qd[0], qd[1], qd[2], ee[0], ee[1], ee[2], self._e])

    # -- snapshot / restore --------------------------------------------------

    def snapshot(self) -> EnvSnapshot:
        return EnvSnapshot(
            token=self._token,
            joints=self._joints,
            pitch=self._pitch,
            pid=self._pid,
            time_index=self._t,
            done=self._done,
            ee=self._ee,
            error=self._e,
            rng_state=self._rng.bit_generator.state,
        )

    def restore(self, snap: EnvSnapshot) -> None:
        if snap.token != self._token:
            raise ValueError("snapshot comes from a differently-configured environment")
        self._joints = snap.joints
        self._pitch = snap.pitch
        self._pid = snap.pid
        self._t = snap.time_index
        self._done = snap.done
        self._ee = snap.ee
        self._e = snap.error
        self._e_norm = normalize_error(snap.error, self.config.e_max)
        self._rng.bit_generator.state = snap.rng_state

    @contextmanager
    def rollout_mode(self):
        """Disable live-only stochastic effects (gusts) for planning rollouts."""
        prev = self._rollout
        self._rollout = True
        try:
            yield self
        finally:
            self._rollout = prev

    # -- internals -----------------------------------------------------------

    def _refresh_pose(self) -> None:
        base = self.base_path[self._t]
        p_be = body_fk(self._joints.q, self.params.links)
        ca = math.cos(self._pitch.alpha)
        sa = math.sin(self._pitch.alpha)
        ee = (
            base[0] + ca * p_be[0] + sa * p_be[2],
            base[1] + p_be[1],
            base[2] - sa * p_be[0] + ca * p_be[2],
        )
        self._ee = ee
        self._e = tracking_error(ee, self.curve)
        self._e_norm = normalize_error(self._e, self.config.e_max)
