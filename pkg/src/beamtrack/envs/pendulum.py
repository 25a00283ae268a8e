"""One-joint tracking sandbox: a torque-limited pendulum chasing a moving
angular reference.  Five discrete torques, 200-step episodes, dense reward
equal to minus the wrapped angular tracking error.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

STATE_DIM = 5
TORQUES = (-2.0, -1.0, 0.0, 1.0, 2.0)

TWO_PI = 2.0 * math.pi


def wrap_angle(x: float) -> float:
    """Wrap into the principal interval around zero."""
    return (x + math.pi) % TWO_PI - math.pi


@dataclass(frozen=True)
class ReferenceSpec:
    """Angular reference theta*(t).

    sinusoid: amplitude * sin(2 pi f t); frequency 0 degenerates to a
    constant (the "straight" sandbox shape).  two_tone: the average of two
    sinusoids at f and ratio*f, for the nonuniform-wave shape.
    """

    kind: str = "sinusoid"  # sinusoid | two_tone
    frequency: float = 0.5
    amplitude: float = 1.0
    ratio: float = 2.718

    def __post_init__(self) -> None:
        if self.kind not in ("sinusoid", "two_tone"):
            raise ValueError(f"unknown reference kind {self.kind!r}")
        if self.frequency < 0:
            raise ValueError("reference frequency must be nonnegative")

    def angle(self, t: float) -> float:
        if self.kind == "sinusoid":
            return self.amplitude * math.sin(TWO_PI * self.frequency * t)
        w1 = TWO_PI * self.frequency
        w2 = TWO_PI * self.frequency * self.ratio
        return 0.5 * self.amplitude * (math.sin(w1 * t) + math.sin(w2 * t))

    def rate(self, t: float) -> float:
        if self.kind == "sinusoid":
            w = TWO_PI * self.frequency
            return self.amplitude * w * math.cos(w * t)
        w1 = TWO_PI * self.frequency
        w2 = TWO_PI * self.frequency * self.ratio
        return 0.5 * self.amplitude * (w1 * math.cos(w1 * t) + w2 * math.cos(w2 * t))


@dataclass(frozen=True)
class PendulumConfig:
    dt: float = 0.05
    horizon: int = 200
    mass: float = 1.0
    length: float = 1.0
    gravity: float = 9.81
    reset_noise: float = 0.05

    def __post_init__(self) -> None:
        if self.dt <= 0 or self.horizon < 1:
            raise ValueError("need dt > 0 and horizon >= 1")
        if self.mass <= 0 or self.length <= 0:
            raise ValueError("mass and length must be positive")


class PendulumSnapshot(NamedTuple):
    token: tuple
    theta: float
    theta_dot: float
    time_index: int
    done: bool
    rng_state: dict


class PendulumTrackingEnv:
    def __init__(self, config: PendulumConfig, reference: ReferenceSpec, seed: int):
        self.config = config
        self.reference = reference
        self._rng = np.random.default_rng(seed)
        self._token = (config, reference)
        n = config.horizon + 1
        self.ref_angle = tuple(reference.angle(t * config.dt) for t in range(n))
        self.ref_rate = tuple(reference.rate(t * config.dt) for t in range(n))
        self._rollout = False
        self.step_calls = 0
        self.reset()

    @property
    def n_actions(self) -> int:
        return len(TORQUES)

    @property
    def done(self) -> bool:
        return self._done

    @property
    def time_index(self) -> int:
        return self._t

    @property
    def current_error(self) -> float:
        """Wrapped |theta - theta*| at the current time index."""
        return abs(wrap_angle(self._theta - self.ref_angle[self._t]))

    def reset(self) -> np.ndarray:
        noise = self.config.reset_noise
        self._theta = self.ref_angle[0]
        self._theta_dot = 0.0
        if noise > 0.0:
            self._theta += self._rng.uniform(-noise, noise)
            self._theta_dot += self._rng.uniform(-noise, noise)
        self._t = 0
        self._done = False
        return self.state_vector()

    def set_state(self, theta: float, theta_dot: float, time_index: int = 0) -> np.ndarray:
        """Place the pendulum at an arbitrary mid-episode state (test hook)."""
        if not 0 <= time_index < self.config.horizon:
            raise ValueError("time index outside the episode")
        self._theta = theta
        self._theta_dot = theta_dot
        self._t = time_index
        self._done = False
        return self.state_vector()

    def step(self, action: int) -> tuple[np.ndarray, float, bool]:
        if self._done:
            raise RuntimeError("step() called on a finished episode; reset() first")
        self.step_calls += 1
        cfg = self.config
        u = TORQUES[action]
        accel = -(cfg.gravity / cfg.length) * math.sin(self._theta) + u / (
            cfg.mass * cfg.length * cfg.length
        )
        self._theta_dot += cfg.dt * accel
        self._theta += cfg.dt * self._theta_dot
        self._t += 1
        r = -abs(wrap_angle(self._theta - self.ref_angle[self._t]))
        self._done = self._t >= cfg.horizon
        return self.state_vector(), r, self._done

    def state_vector(self) -> np.ndarray:
        t = self._t
        return np.array(
            [
                math.sin(self._theta),
                math.cos(self._theta),
                self._theta_dot,
                self.ref_angle[t],
                self.ref_rate[t],
            ]
        )

    def snapshot(self) -> PendulumSnapshot:
        return PendulumSnapshot(
            token=self._token,
            theta=self._theta,
            theta_dot=self._theta_dot,
            time_index=self._t,
            done=self._done,
            rng_state=self._rng.bit_generator.state,
        )

    def restore(self, snap: PendulumSnapshot) -> None:
        if snap.token != self._token:
            raise ValueError("snapshot comes from a differently-configured environment")
        self._theta = snap.theta
        self._theta_dot = snap.theta_dot
        self._t = snap.time_index
        self._done = snap.done
        self._rng.bit_generator.state = snap.rng_state

    @contextmanager
    def rollout_mode(self):
        prev = self._rollout
        self._rollout = True
        try:
            yield self
        finally:
            self._rollout = prev
