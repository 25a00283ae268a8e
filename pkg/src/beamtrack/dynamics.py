"""Manipulator rigid-body dynamics, pitch coupling, PID attitude hold, and
time integration.

Inertia model: each link is a point mass at its midpoint, plus a scalar
rotor inertia on the base yaw axis.  The Coriolis matrix comes from
Christoffel symbols with the mass-matrix partials taken by central finite
differences, which guarantees the skew-symmetry of (Mdot - 2C).

Hot-path note: the mass-matrix entries are computed in plain float
arithmetic because the simulator and the beam planner evaluate them tens of
millions of times per experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geometry import LinkGeometry

MASS_EPS = 1e-6  # regularization floor added to the mass-matrix diagonal
_FD_STEP = 1e-6  # central-difference step for the Christoffel symbols


@dataclass(frozen=True)
class ManipulatorParams:
    m1: float
    m2: float
    base_yaw_inertia: float
    links: LinkGeometry
    joint_damping: tuple[float, float, float]
    joint_limits: tuple[tuple[float, float], ...]
    torque_limits: tuple[float, float]
    gravity: float = 9.81

    def __post_init__(self) -> None:
        if self.m1 <= 0 or self.m2 <= 0:
            raise ValueError("link masses must be positive")
        if self.base_yaw_inertia <= 0:
            raise ValueError("base yaw inertia must be positive")
        if self.torque_limits[0] >= self.torque_limits[1]:
            raise ValueError("torque limits must satisfy min < max")
        for lo, hi in self.joint_limits:
            if lo >= hi:
                raise ValueError("joint limit interval is empty")


@dataclass(frozen=True)
class PitchParams:
    m_arm: float
    inertia_y: float
    damping: float
    alpha_ref: float = 0.0

    def __post_init__(self) -> None:
        if self.inertia_y <= 0:
            raise ValueError("pitch inertia must be positive")
        if self.damping < 0:
            raise ValueError("pitch damping must be nonnegative")


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float
    kd: float
    integral_clamp: float = 1.0

    def __post_init__(self) -> None:
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValueError("PID gains must be nonnegative")


class JointState(NamedTuple):
    q: tuple[float, float, float]
    qdot: tuple[float, float, float]


class PitchState(NamedTuple):
    alpha: float
    omega_y: float


class PidState(NamedTuple):
    integral: float
    prev_err: float


def default_manipulator_params() -> ManipulatorParams:
    return ManipulatorParams(
        m1=0.5,
        m2=0.5,
        base_yaw_inertia=0.05,
        links=LinkGeometry(0.5, 0.5),
        joint_damping=(0.5, 0.5, 0.5),
        joint_limits=((-math.pi, math.pi), (-math.pi / 2, math.pi / 2), (-2.6, 2.6)),
        torque_limits=(-5.0, 5.0),
        gravity=9.81,
    )


def default_pitch_params() -> PitchParams:
    return PitchParams(m_arm=1.0, inertia_y=0.3, damping=0.2, alpha_ref=0.0)


def default_pid_gains() -> PidGains:
    return PidGains(kp=12.0, ki=4.0, kd=3.0, integral_clamp=2.0)


def _com_jacobians(q, params: ManipulatorParams):
    """Midpoint center-of-mass Jacobian columns for both links.

    Straight-line float math: this sits under every mass-matrix partial the
    Christoffel differencing takes, so trig is computed once and shared.
    """
    q0, q1, q2 = q
    L1 = params.links.L1
    L2 = params.links.L2
    cx = math.cos(q0)
    sx = math.sin(q0)
    c1 = math.cos(q1)
    s1 = math.sin(q1)
    c12 = math.cos(q1 + q2)
    s12 = math.sin(q1 + q2)
    # link 1 mass at L1/2 along the first link
    h1 = 0.5 * L1
    rx_a = h1 * c1
    d1_a = -h1 * s1
    jc1 = (
        (-sx * rx_a, cx * rx_a, 0.0),
        (cx * d1_a, sx * d1_a, rx_a),
        (0.0, 0.0, 0.0),
    )
    # link 2 mass at L1 + L2/2 along the chain
    h2 = 0.5 * L2
    rx_b = L1 * c1 + h2 * c12
    d1_b = -L1 * s1 - h2 * s12
    d2_b = -h2 * s12
    z2_b = h2 * c12
    jc2 = (
        (-sx * rx_b, cx * rx_b, 0.0),
        (cx * d1_b, sx * d1_b, rx_b),
        (cx * d2_b, sx * d2_b, z2_b),
    )
    return jc1, jc2


def _mass_entries(q, params: ManipulatorParams):
    """Unique entries (m00, m01, m02, m11, m12, m22) of the symmetric M.

    Sum of m_i J_ci^T J_ci over both point masses, written out after the
    exact yaw simplification: the q0 column of each J_ci has squared norm
    r_x^2 and is orthogonal to the pitch columns, so M is yaw-invariant
    with zero yaw/pitch coupling.
    """
    q1 = q[1]
    q2 = q[2]
    L1 = params.links.L1
    L2 = params.links.L2
    c1 = math.cos(q1)
    s1 = math.sin(q1)
    c12 = math.cos(q1 + q2)
    s12 = math.sin(q1 + q2)
    h1 = 0.5 * L1
    h2 = 0.5 * L2
    rx_a = h1 * c1
    d1_a = -h1 * s1
    rx_b = L1 * c1 + h2 * c12
    d1_b = -L1 * s1 - h2 * s12
    d2_b = -h2 * s12
    z2_b = h2 * c12
    m1 = params.m1
    m2 = params.m2
    m00 = m1 * rx_a * rx_a + m2 * rx_b * rx_b + params.base_yaw_inertia + MASS_EPS
    m11 = (
        m1 * (d1_a * d1_a + rx_a * rx_a)
        + m2 * (d1_b * d1_b + rx_b * rx_b)
        + MASS_EPS
    )
    m12 = m2 * (d1_b * d2_b + rx_b * z2_b)
    m22 = m2 * (d2_b * d2_b + z2_b * z2_b) + MASS_EPS
    return (m00, 0.0, 0.0, m11, m12, m22)


def mass_matrix(q, params: ManipulatorParams) -> np.ndarray:
    """Configuration-dependent inertia matrix; symmetric positive-definite."""
    m00, m01, m02, m11, m12, m22 = _mass_entries(q, params)
    return np.array([[m00, m01, m02], [m01, m11, m12], [m02, m12, m22]])


def _mass_partials(q, params: ManipulatorParams, h: float):
    """Central-difference partials of the 6 mass entries along each joint."""
    q0, q1, q2 = q
    inv = 0.5 / h
    out = []
    for k in range(3):
        dq = [q0, q1, q2]
        dq[k] += h
        a0, a1, a2, a3, a4, a5 = _mass_entries(dq, params)
        dq[k] -= 2.0 * h
        b0, b1, b2, b3, b4, b5 = _mass_entries(dq, params)
        out.append(
            (
                (a0 - b0) * inv,
                (a1 - b1) * inv,
                (a2 - b2) * inv,
                (a3 - b3) * inv,
                (a4 - b4) * inv,
                (a5 - b5) * inv,
            )
        )
    return out


_SYM_INDEX = ((0, 1, 2), (1, 3, 4), (2, 4, 5))  # (i, j) -> packed entry


def _coriolis_rows(q, qdot, params: ManipulatorParams, h: float):
    """Row-major Coriolis entries from Christoffel symbols.

    c_ijk = (dM_ij/dq_k + dM_ik/dq_j - dM_jk/dq_i) / 2,  C_ij = sum_k c_ijk qdot_k
    """
    d0, d1, d2 = _mass_partials(q, params, h)
    v0, v1, v2 = qdot[0], qdot[1], qdot[2]
    dM = (d0, d1, d2)
    rows = []
    for i in range(3):
        si = _SYM_INDEX[i]
        dMi = dM[i]
        for j in range(3):
            sj = _SYM_INDEX[j]
            dMj = dM[j]
            ij = si[j]
            rows.append(
                0.5
                * (
                    (d0[ij] + dMj[si[0]] - dMi[sj[0]]) * v0
                    + (d1[ij] + dMj[si[1]] - dMi[sj[1]]) * v1
                    + (d2[ij] + dMj[si[2]] - dMi[sj[2]]) * v2
                )
            )
    return rows


def coriolis_matrix(q, qdot, params: ManipulatorParams, fd_step: float = _FD_STEP) -> np.ndarray:
    """Coriolis/centrifugal matrix via Christoffel symbols; see _coriolis_rows."""
    return np.array(_coriolis_rows(q, qdot, params, fd_step)).reshape(3, 3)


def _gravity_terms(q, gb, params: ManipulatorParams):
    """Gravity torques as floats, with gb the body-frame gravity vector."""
    jc1, jc2 = _com_jacobians(q, params)
    m1 = params.m1
    m2 = params.m2
    out = []
    for i in range(3):
        c1 = jc1[i]
        c2 = jc2[i]
        out.append(
            -(
                m1 * (c1[0] * gb[0] + c1[1] * gb[1] + c1[2] * gb[2])
                + m2 * (c2[0] * gb[0] + c2[1] * gb[1] + c2[2] * gb[2])
            )
        )
    return out


def _body_gravity(base_rotation, g: float):
    # base_rotation^T (0, 0, -g) is -g times the third row of the rotation
    row = base_rotation[2]
    return (-g * row[0], -g * row[1], -g * row[2])


def gravity_vector(q, base_rotation: np.ndarray, params: ManipulatorParams) -> np.ndarray:
    """Gravity joint torques with gravity mapped into the body frame."""
    return np.array(_gravity_terms(q, _body_gravity(base_rotation, params.gravity), params))


def clamp_torque(tau, params: ManipulatorParams) -> tuple[float, float, float]:
    lo, hi = params.torque_limits
    return (
        min(max(tau[0], lo), hi),
        min(max(tau[1], lo), hi),
        min(max(tau[2], lo), hi),
    )


def forward_dynamics(state: JointState, tau, base_rotation: np.ndarray,
                     params: ManipulatorParams) -> np.ndarray:
    """Joint accelerations from M qdd + C qd + G + D qd = tau."""
    q = state.q
    qd = state.qdot
    tau = clamp_torque(tau, params)
    m00, m01, m02, m11, m12, m22 = _mass_entries(q, params)
    c00, c01, c02, c10, c11, c12, c20, c21, c22 = _coriolis_rows(q, qd, params, _FD_STEP)
    G = _gravity_terms(q, _body_gravity(base_rotation, params.gravity), params)
    d = params.joint_damping
    b0 = tau[0] - (c00 * qd[0] + c01 * qd[1] + c02 * qd[2]) - G[0] - d[0] * qd[0]
    b1 = tau[1] - (c10 * qd[0] + c11 * qd[1] + c12 * qd[2]) - G[1] - d[1] * qd[1]
    b2 = tau[2] - (c20 * qd[0] + c21 * qd[1] + c22 * qd[2]) - G[2] - d[2] * qd[2]
    # Cramer solve of the symmetric 3x3 system
    a00 = m11 * m22 - m12 * m12
    a01 = m02 * m12 - m01 * m22
    a02 = m01 * m12 - m02 * m11
    det = m00 * a00 + m01 * a01 + m02 * a02
    if abs(det) < 1e-14:
        raise ArithmeticError(f"mass matrix numerically singular (det={det:g})")
    a11 = m00 * m22 - m02 * m02
    a12 = m02 * m01 - m00 * m12
    a22 = m00 * m11 - m01 * m01
    inv = 1.0 / det
    return np.array(
        [
            (a00 * b0 + a01 * b1 + a02 * b2) * inv,
            (a01 * b0 + a11 * b1 + a12 * b2) * inv,
            (a02 * b0 + a12 * b1 + a22 * b2) * inv,
        ]
    )


def arm_com_x(q, params: ManipulatorParams) -> float:
    """Body-frame x of the combined arm center of mass (midpoint masses)."""
    q0, q1, q2 = q
    L1 = params.links.L1
    L2 = params.links.L2
    c1 = math.cos(q1)
    c12 = math.cos(q1 + q2)
    x1 = 0.5 * L1 * c1
    x2 = L1 * c1 + 0.5 * L2 * c12
    return math.cos(q0) * (params.m1 * x1 + params.m2 * x2) / (params.m1 + params.m2)


def pitch_moment(q, params: ManipulatorParams, pitch_params: PitchParams) -> float:
    """Gravitational pitch moment induced by the arm's center-of-mass offset."""
    return pitch_params.m_arm * params.gravity * arm_com_x(q, params)


def pitch_step(ps: PitchState, m_pitch: float, m_pid: float,
               pp: PitchParams, dt: float) -> PitchState:
    """Explicit-Euler pitch update; the PID moment adds to the disturbance."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    alpha = ps.alpha + dt * ps.omega_y
    omega = ps.omega_y + dt * (m_pitch + m_pid - pp.damping * ps.omega_y) / pp.inertia_y
    return PitchState(alpha, omega)


def pid_update(err: float, state: PidState, gains: PidGains, dt: float) -> tuple[float, PidState]:
    """Positional PID with clamped integral; returns (moment, new state)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    integral = state.integral + err * dt
    clamp = gains.integral_clamp
    integral = min(max(integral, -clamp), clamp)
    moment = gains.kp * err + gains.ki * integral + gains.kd * (err - state.prev_err) / dt
    return moment, PidState(integral, err)


def integrate_joints(state: JointState, qddot, dt: float,
                     params: ManipulatorParams) -> tuple[JointState, bool]:
    """Semi-implicit Euler step with hard joint limits.

    Returns the new state and whether the pre-clamp position left the
    feasible box (the reward's violation indicator fires on that excursion).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    q_new = []
    qd_new = []
    violated = False
    for i in range(3):
        v = state.qdot[i] + dt * qddot[i]
        x = state.q[i] + dt * v
        lo, hi = params.joint_limits[i]
        if x < lo:
            violated = True
            x = lo
            v = 0.0
        elif x > hi:
            violated = True
            x = hi
            v = 0.0
        q_new.append(x)
        qd_new.append(v)
    return JointState(tuple(q_new), tuple(qd_new)), violated
