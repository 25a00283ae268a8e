import numpy as np
import pytest

from beamtrack.envs import PendulumConfig, PendulumTrackingEnv, ReferenceSpec
from beamtrack.planner import BeamConfig, beam_plan, leaf_value, node_budget, search_efficiency
from beamtrack.valuenet import MlpArch, MlpCritic
from helpers import brute_force_plan


def pendulum(seed=0, freq=0.5):
    return PendulumTrackingEnv(PendulumConfig(), ReferenceSpec(frequency=freq), seed=seed)


def critic_for(env, seed=0):
    return MlpCritic(MlpArch(len(env.state_vector()), env.n_actions, hidden=(24, 24)), seed=seed)


class TestLeafValue:
    def test_two_action_hand_case(self):
        assert leaf_value(np.array([1.0, 3.0]), np.array([2.0, 2.0])) == 2.0

    def test_identical_critics_reduce_to_max(self):
        q = np.array([0.4, -1.0, 2.5])
        assert leaf_value(q, q) == 2.5

    def test_bounded_by_both_maxima(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            qo = rng.normal(size=5)
            qt = rng.normal(size=5)
            v = leaf_value(qo, qt)
            assert v <= qo.max() + 1e-12 and v <= qt.max() + 1e-12


class TestSearchCosts:
    def test_efficiency_examples(self):
        np.testing.assert_allclose(search_efficiency(1, 1, 5), 20.0)
        np.testing.assert_allclose(search_efficiency(2, 3, 5), 1.6)
        for n in (2, 5, 27):
            np.testing.assert_allclose(search_efficiency(1, 1, n), 100.0 / n)

    def test_node_budget_examples(self):
        assert node_budget(1, 1, 27) == 27
        assert node_budget(6, 6, 27) == 972

    def test_beam_config_validation(self):
        with pytest.raises(ValueError):
            BeamConfig(0, 3)


class TestBeamPlan:
    def test_depth_one_single_beam_reduction(self):
        """B=D=1 selects argmax_a [r(s,a) + gamma * leaf(s')]."""
        env = pendulum(seed=1)
        critic = critic_for(env, seed=2)
        env.set_state(0.4, -0.5, 20)
        repr_ = critic.repr0(env.state_vector())
        gamma = 0.9
        scores = []
        root = env.snapshot()
        with env.rollout_mode():
            for a in range(env.n_actions):
                env.restore(root)
                s, r, done = env.step(a)
                rp = critic.push(repr_, s)
                v = 0.0 if done else leaf_value(critic.q_values(rp), critic.q_target_values(rp))
                scores.append(r + gamma * v)
        env.restore(root)
        expected = int(np.argmax(scores))
        assert beam_plan(env, repr_, critic, 1, 1, gamma) == expected

    def test_exhaustive_equivalence_when_beam_covers_tree(self):
        env = pendulum(seed=3)
        critic = critic_for(env, seed=4)
        rng = np.random.default_rng(5)
        for _ in range(25):
            theta = rng.uniform(-2.5, 2.5)
            theta_dot = rng.uniform(-5, 5)
            t = int(rng.integers(0, 150))
            for depth in (1, 2):
                env.set_state(theta, theta_dot, t)
                repr_ = critic.repr0(env.state_vector())
                chosen = beam_plan(env, repr_, critic, env.n_actions**depth, depth, 0.99)
                env.set_state(theta, theta_dot, t)
                expected, _ = brute_force_plan(env, critic.repr0(env.state_vector()), critic, depth, 0.99)
                assert chosen == expected

    def test_score_monotone_in_width(self):
        env = pendulum(seed=6)
        critic = critic_for(env, seed=7)
        rng = np.random.default_rng(8)
        for _ in range(10):
            env.set_state(rng.uniform(-2, 2), rng.uniform(-4, 4), int(rng.integers(0, 100)))
            repr_ = critic.repr0(env.state_vector())
            prev = -np.inf
            for width in range(1, 7):
                _, score = beam_plan(env, repr_, critic, width, 3, 0.99, return_score=True)
                assert score >= prev - 1e-12
                prev = score

    def test_rollout_calls_within_budget(self):
        env = pendulum(seed=9)
        critic = critic_for(env, seed=10)
        env.set_state(0.2, 0.3, 5)
        repr_ = critic.repr0(env.state_vector())
        for width, depth in ((1, 1), (2, 3), (4, 6), (6, 6)):
            before = env.step_calls
            beam_plan(env, repr_, critic, width, depth, 0.99)
            assert env.step_calls - before <= node_budget(width, depth, env.n_actions)

    def test_live_environment_untouched(self):
        env = pendulum(seed=11)
        critic = critic_for(env, seed=12)
        env.reset()
        for _ in range(4):
            env.step(3)
        before = env.snapshot()
        state_before = env.state_vector().tobytes()
        beam_plan(env, critic.repr0(env.state_vector()), critic, 3, 3, 0.99)
        after = env.snapshot()
        assert env.state_vector().tobytes() == state_before
        assert before.theta == after.theta
        assert before.theta_dot == after.theta_dot
        assert before.time_index == after.time_index
        assert before.rng_state == after.rng_state

    def test_deterministic_choice(self):
        env = pendulum(seed=13)
        critic = critic_for(env, seed=14)
        env.set_state(-0.7, 1.2, 42)
        repr_ = critic.repr0(env.state_vector())
        picks = {beam_plan(env, repr_, critic, 3, 3, 0.99) for _ in range(5)}
        assert len(picks) == 1

    def test_greedy_shortcut_matches_argmax(self):
        env = pendulum(seed=15)
        critic = critic_for(env, seed=16)
        env.set_state(0.1, -0.2, 7)
        repr_ = critic.repr0(env.state_vector())
        a = beam_plan(env, repr_, critic, 1, 1, 0.99, greedy_shortcut=True)
        assert a == int(np.argmax(critic.q_values(repr_)))
        before = env.step_calls
        beam_plan(env, repr_, critic, 1, 1, 0.99, greedy_shortcut=True)
        assert env.step_calls == before  # no rollouts taken

    def test_planning_done_episode_raises(self):
        env = pendulum(seed=17)
        critic = critic_for(env, seed=18)
        env.reset()
        done = False
        while not done:
            _, _, done = env.step(2)
        with pytest.raises(RuntimeError):
            beam_plan(env, critic.repr0(env.state_vector()), critic, 1, 1, 0.99)

    def test_plans_through_horizon_boundary(self):
        """Depth runs past the episode end: done rollouts carry leaf 0."""
        env = pendulum(seed=19)
        critic = critic_for(env, seed=20)
        env.set_state(0.3, 0.0, env.config.horizon - 2)
        repr_ = critic.repr0(env.state_vector())
        action = beam_plan(env, repr_, critic, 2, 5, 0.99)
        assert 0 <= action < env.n_actions
