import math

import numpy as np
import pytest

from beamtrack.dynamics import (
    MASS_EPS,
    JointState,
    ManipulatorParams,
    PidGains,
    PidState,
    PitchParams,
    PitchState,
    coriolis_matrix,
    default_manipulator_params,
    default_pid_gains,
    default_pitch_params,
    forward_dynamics,
    gravity_vector,
    integrate_joints,
    mass_matrix,
    pid_update,
    pitch_moment,
    pitch_step,
)
from beamtrack.geometry import LinkGeometry

LEVEL = np.eye(3)


def unit_params(**overrides) -> ManipulatorParams:
    base = dict(
        m1=1.0,
        m2=1.0,
        base_yaw_inertia=0.1,
        links=LinkGeometry(1.0, 1.0),
        joint_damping=(0.0, 0.0, 0.0),
        joint_limits=((-10, 10), (-10, 10), (-10, 10)),
        torque_limits=(-50.0, 50.0),
        gravity=9.81,
    )
    base.update(overrides)
    return ManipulatorParams(**base)


class TestMassMatrix:
    def test_symmetric_by_construction(self):
        rng = np.random.default_rng(0)
        p = default_manipulator_params()
        for _ in range(100):
            M = mass_matrix(rng.uniform(-3, 3, 3), p)
            assert np.abs(M - M.T).max() == 0.0

    def test_elbow_entry_home(self):
        """Point mass at the elbow link midpoint: M[2,2] = m2 L2^2/4 + eps."""
        M = mass_matrix((0, 0, 0), unit_params())
        np.testing.assert_allclose(M[2, 2], 0.25 + MASS_EPS, rtol=0, atol=1e-15)

    def test_positive_definite(self):
        rng = np.random.default_rng(1)
        p = default_manipulator_params()
        for _ in range(1000):
            M = mass_matrix(rng.uniform(-math.pi, math.pi, 3), p)
            assert np.linalg.eigvalsh(M).min() >= MASS_EPS * 0.99


class TestCoriolis:
    def test_zero_velocity(self):
        p = default_manipulator_params()
        C = coriolis_matrix((0.4, -0.2, 0.9), np.zeros(3), p)
        np.testing.assert_allclose(C @ np.zeros(3), np.zeros(3))

    def test_skew_symmetry(self):
        """x^T (Mdot - 2C) x vanishes, with Mdot finite-differenced along qdot."""
        rng = np.random.default_rng(2)
        p = default_manipulator_params()
        h = 1e-6
        for _ in range(200):
            q = rng.uniform(-1.5, 1.5, 3)
            qd = rng.uniform(-2, 2, 3)
            x = rng.uniform(-1, 1, 3)
            C = coriolis_matrix(q, qd, p)
            Mdot = (mass_matrix(q + h * qd, p) - mass_matrix(q - h * qd, p)) / (2 * h)
            residual = abs(x @ ((Mdot - 2 * C) @ x))
            assert residual < 1e-6 * max(x @ x * np.linalg.norm(qd), 1e-9)

    def test_frozen_configuration(self):
        """Yaw-only motion at frozen pitch sees no configuration change."""
        p = default_manipulator_params()
        C = coriolis_matrix((0.7, 0.0, 0.0), np.array([2.0, 0.0, 0.0]), p)
        # M is yaw-invariant, so pure yaw rates produce no C qdot on the yaw row
        np.testing.assert_allclose((C @ np.array([2.0, 0.0, 0.0]))[0], 0.0, atol=1e-9)


class TestGravity:
    def test_yaw_axis_sees_nothing_level(self):
        G = gravity_vector((0, 0, 0), LEVEL, unit_params())
        np.testing.assert_allclose(G[0], 0.0, atol=1e-12)

    def test_vertical_arm_shoulder_balance(self):
        G = gravity_vector((0, math.pi / 2, 0), LEVEL, unit_params())
        np.testing.assert_allclose(G[1], 0.0, atol=1e-12)

    def test_zero_gravity(self):
        G = gravity_vector((0.3, 0.5, -0.2), LEVEL, unit_params(gravity=0.0))
        np.testing.assert_array_equal(G, np.zeros(3))


class TestForwardDynamics:
    def test_static_equilibrium(self):
        p = default_manipulator_params()
        q = (0.2, -0.3, 0.7)
        state = JointState(q, (0.0, 0.0, 0.0))
        tau = gravity_vector(q, LEVEL, p)
        qdd = forward_dynamics(state, tau, LEVEL, p)
        np.testing.assert_allclose(qdd, np.zeros(3), atol=1e-10)

    def test_free_float_at_rest(self):
        p = unit_params(gravity=0.0)
        qdd = forward_dynamics(JointState((0.1, 0.2, 0.3), (0, 0, 0)), (0, 0, 0), LEVEL, p)
        np.testing.assert_allclose(qdd, np.zeros(3), atol=1e-12)

    def test_torque_round_trip(self):
        rng = np.random.default_rng(3)
        p = default_manipulator_params()
        for _ in range(100):
            q = tuple(rng.uniform(-1.5, 1.5, 3))
            qd = tuple(rng.uniform(-2, 2, 3))
            tau = np.array(rng.uniform(-5, 5, 3))
            qdd = forward_dynamics(JointState(q, qd), tau, LEVEL, p)
            lhs = (
                mass_matrix(q, p) @ qdd
                + coriolis_matrix(q, np.array(qd), p) @ np.array(qd)
                + gravity_vector(q, LEVEL, p)
                + np.diag(p.joint_damping) @ np.array(qd)
            )
            np.testing.assert_allclose(lhs, tau, atol=1e-8)

    def test_torque_clamped_to_limits(self):
        p = unit_params(gravity=0.0, torque_limits=(-1.0, 1.0))
        state = JointState((0, 0, 0), (0, 0, 0))
        big = forward_dynamics(state, (100.0, 0, 0), LEVEL, p)
        capped = forward_dynamics(state, (1.0, 0, 0), LEVEL, p)
        np.testing.assert_array_equal(big, capped)


class TestEnergyConservation:
    def test_drift_below_one_percent(self):
        """Free-floating arm (no gravity/damping/torque) keeps kinetic energy."""
        p = unit_params(
            m1=0.5, m2=0.5, base_yaw_inertia=0.05, links=LinkGeometry(0.5, 0.5),
            gravity=0.0, joint_limits=((-100, 100),) * 3,
        )
        state = JointState((0.3, -0.4, 0.8), (0.5, 1.0, -0.7))

        def kinetic(s):
            v = np.array(s.qdot)
            return 0.5 * v @ mass_matrix(s.q, p) @ v

        e0 = kinetic(state)
        for _ in range(20_000):
            qdd = forward_dynamics(state, (0, 0, 0), LEVEL, p)
            state, _ = integrate_joints(state, qdd, 1e-4, p)
        assert abs(kinetic(state) - e0) / e0 < 0.01


class TestPitchChannel:
    def test_moment_vertical_arm(self):
        p = unit_params()
        pp = PitchParams(m_arm=2.0, inertia_y=0.3, damping=0.2)
        # arm held straight up puts the combined CoM on the yaw axis
        assert abs(pitch_moment((0, math.pi / 2, 0), p, pp)) < 1e-12

    def test_moment_stretched_arm(self):
        p = unit_params()
        pp = PitchParams(m_arm=2.0, inertia_y=0.3, damping=0.2)
        np.testing.assert_allclose(pitch_moment((0, 0, 0), p, pp), 19.62, atol=1e-12)

    def test_moment_vanishes_sideways(self):
        p = unit_params()
        pp = PitchParams(m_arm=2.0, inertia_y=0.3, damping=0.2)
        assert abs(pitch_moment((math.pi / 2, 0, 0), p, pp)) < 1e-12

    def test_step_at_rest(self):
        pp = default_pitch_params()
        ps = PitchState(0.1, 0.0)
        assert pitch_step(ps, 0.0, 0.0, pp, 0.01) == PitchState(0.1, 0.0)

    def test_step_euler_arithmetic(self):
        pp = PitchParams(m_arm=1.0, inertia_y=1.0, damping=0.0)
        out = pitch_step(PitchState(0.0, 1.0), 0.0, 0.0, pp, 0.01)
        np.testing.assert_allclose((out.alpha, out.omega_y), (0.01, 1.0))
        out = pitch_step(PitchState(0.0, 0.0), 2.0, 0.0, pp, 0.5)
        np.testing.assert_allclose((out.alpha, out.omega_y), (0.0, 1.0))


class TestPid:
    def test_quiescent(self):
        moment, _ = pid_update(0.0, PidState(0.0, 0.0), default_pid_gains(), 0.01)
        assert moment == 0.0

    def test_pure_proportional(self):
        gains = PidGains(kp=2.0, ki=0.0, kd=0.0)
        moment, _ = pid_update(0.1, PidState(0.0, 0.1), gains, 0.01)
        np.testing.assert_allclose(moment, 0.2)

    def test_integral_saturates(self):
        gains = PidGains(kp=0.0, ki=1.0, kd=0.0, integral_clamp=0.5)
        state = PidState(0.0, 1.0)
        for _ in range(1000):
            _, state = pid_update(1.0, state, gains, 0.05)
        assert state.integral == 0.5

    def test_closed_loop_holds_attitude(self):
        """Constant arm-induced moment: PID pulls pitch back near the setpoint."""
        pp = default_pitch_params()
        gains = default_pid_gains()
        ps = PitchState(0.0, 0.0)
        pid = PidState(0.0, 0.0)
        dt = 0.02
        for _ in range(int(5.0 / dt)):
            moment, pid = pid_update(pp.alpha_ref - ps.alpha, pid, gains, dt)
            ps = pitch_step(ps, 1.0, moment, pp, dt)
        assert abs(ps.alpha - pp.alpha_ref) < 0.05


class TestIntegrateJoints:
    def test_at_rest(self):
        p = default_manipulator_params()
        state = JointState((0.1, 0.2, 0.3), (0, 0, 0))
        out, violated = integrate_joints(state, (0, 0, 0), 0.02, p)
        assert out == state and not violated

    def test_drift(self):
        p = default_manipulator_params()
        out, _ = integrate_joints(JointState((0, 0, 0), (1, 0, 0)), (0, 0, 0), 0.1, p)
        np.testing.assert_allclose(out.q[0], 0.1)

    def test_limit_clamp_zeroes_velocity(self):
        p = unit_params(joint_limits=((-0.5, 0.5), (-10, 10), (-10, 10)))
        state = JointState((0.49, 0.0, 0.0), (2.0, 0.0, 0.0))
        out, violated = integrate_joints(state, (0, 0, 0), 0.1, p)
        assert violated
        assert out.q[0] == 0.5 and out.qdot[0] == 0.0


def test_param_validation():
    with pytest.raises(ValueError):
        unit_params(m1=-1.0)
    with pytest.raises(ValueError):
        unit_params(torque_limits=(1.0, -1.0))
    with pytest.raises(ValueError):
        PitchParams(m_arm=1.0, inertia_y=0.0, damping=0.1)
    with pytest.raises(ValueError):
        PidGains(kp=-1.0, ki=0.0, kd=0.0)
