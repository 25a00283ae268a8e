import math

import numpy as np
import pytest

from beamtrack.meta import (
    ErrorTrend,
    HeuristicRuleConfig,
    MetaConfig,
    MetaController,
    MetaPolicy,
    beam_menu,
    build_features,
    disagreement,
    dual_update,
    entropy_grads,
    heuristic_beam_rule,
    init_policy_params,
    log_prob_grads,
    meta_reward,
    normalized_entropy,
    policy_entropy,
    policy_log_prob,
    policy_probs,
)
from helpers import fd_gradient, rel_error


class TestNormalizedEntropy:
    def test_uniform_is_one(self):
        np.testing.assert_allclose(normalized_entropy(np.zeros(27), 1.0), 1.0)

    def test_point_mass_is_zero(self):
        q = np.zeros(8)
        q[0] = 1e6
        assert normalized_entropy(q, 1.0) < 1e-6

    def test_two_action_hand_value(self):
        # p = (sigma(1), 1 - sigma(1)): entropy 0.58220 nat over log 2
        p1 = 1.0 / (1.0 + math.exp(-1.0))
        expected = -(p1 * math.log(p1) + (1 - p1) * math.log(1 - p1)) / math.log(2)
        h = normalized_entropy(np.array([1.0, 0.0]), 1.0)
        np.testing.assert_allclose(h, expected, atol=1e-12)
        np.testing.assert_allclose(h, 0.8399, atol=5e-4)

    def test_range_invariant(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            q = rng.normal(scale=rng.uniform(0.1, 50), size=int(rng.integers(2, 30)))
            h = normalized_entropy(q, rng.uniform(0.1, 5))
            assert 0.0 <= h <= 1.0 + 1e-12


class TestDisagreement:
    def test_identical_critics(self):
        q = np.array([1.0, 2.0, 3.0])
        assert disagreement(q, q, 1e-3) == 0.0

    def test_flat_online_hand_value(self):
        u = disagreement(np.zeros(3), np.ones(3), 1.0)
        np.testing.assert_allclose(u, math.tanh(1.0), atol=1e-12)

    def test_open_unit_interval(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            qo = rng.normal(scale=rng.uniform(0.1, 100), size=7)
            qt = rng.normal(scale=rng.uniform(0.1, 100), size=7)
            u = disagreement(qo, qt, 1e-3)
            assert 0.0 <= u < 1.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            disagreement(np.zeros(3), np.zeros(4), 1e-3)


class TestFeatures:
    def test_component_assembly(self):
        cfg = MetaConfig(error_scale=1.0)
        f = build_features(0.0, 0.0, 0.0, 1.0, (1, 1), 1.0, cfg)
        np.testing.assert_allclose(f, [0, 0, 0, 1, 1 / 6, 1 / 6, 1])

    def test_log1p_error_channel(self):
        cfg = MetaConfig()
        f = build_features(math.e - 1.0, 0.0, 0.5, 0.5, (3, 2), 0.25, cfg)
        np.testing.assert_allclose(f[0], 1.0)
        np.testing.assert_allclose(f[4:6], [0.5, 2 / 6])

    def test_finite_for_finite_inputs(self):
        cfg = MetaConfig()
        rng = np.random.default_rng(2)
        for _ in range(200):
            f = build_features(
                rng.uniform(0, 10), rng.normal(), rng.uniform(0, 1), rng.uniform(0, 1),
                (int(rng.integers(1, 7)), int(rng.integers(1, 7))), rng.uniform(0, 1), cfg,
            )
            assert np.isfinite(f).all()

    def test_negative_error_rejected(self):
        with pytest.raises(ValueError):
            build_features(-0.1, 0, 0, 0, (1, 1), 0.5, MetaConfig())


class TestMenuAndSampling:
    def test_menu_is_full_grid(self):
        menu = beam_menu(6, 6)
        assert len(menu) == 36
        assert menu[0] == (1, 1) and menu[1] == (1, 2) and menu[-1] == (6, 6)

    def test_probabilities_sum_to_one(self):
        params = init_policy_params(np.random.default_rng(3), 36)
        p = policy_probs(params, np.random.default_rng(4).uniform(0, 1, 7))
        np.testing.assert_allclose(p.sum(), 1.0, atol=1e-12)
        assert np.all(p >= 0)

    def test_uniform_logits_hit_every_config(self):
        """Zeroed network gives the uniform categorical (chi-square, df=35)."""
        cfg = MetaConfig()
        policy = MetaPolicy(cfg, seed=5)
        for key in policy.params:
            policy.params[key][:] = 0.0
        rng = np.random.default_rng(6)
        f = np.full(7, 0.3)
        counts = np.zeros(36)
        draws = 100_000
        for _ in range(draws):
            idx, bd, logp = policy.sample(f, rng)
            counts[idx] += 1
        np.testing.assert_allclose(logp, math.log(1 / 36), atol=1e-12)
        expected = draws / 36
        chi2 = ((counts - expected) ** 2 / expected).sum()
        assert chi2 < 66.6  # 0.999 quantile of chi2(35)

    def test_dominant_logit_takes_over(self):
        cfg = MetaConfig()
        policy = MetaPolicy(cfg, seed=7)
        for key in policy.params:
            policy.params[key][:] = 0.0
        policy.params["b2"][11] = 20.0
        rng = np.random.default_rng(8)
        f = np.zeros(7)
        hits = sum(policy.sample(f, rng)[0] == 11 for _ in range(2000))
        assert hits >= 1998

    def test_sampled_config_in_menu(self):
        cfg = MetaConfig()
        policy = MetaPolicy(cfg, seed=9)
        rng = np.random.default_rng(10)
        for _ in range(100):
            _, bd, _ = policy.sample(rng.uniform(0, 1, 7), rng)
            assert bd in policy.menu


class TestMetaReward:
    def test_neutral_step(self):
        cfg = MetaConfig(alpha_flop=0.0)
        r, cost = meta_reward(0.1, 0.1, 0.0, 0.0, (2, 2), (2, 2), 0.5, 27, cfg)
        assert r == 0.0 and cost == 0.0

    def test_hand_example(self):
        cfg = MetaConfig(alpha_err=1.0, alpha_trend=0.0, alpha_flop=0.0, alpha_switch=1.0)
        r, cost = meta_reward(0.2, 0.1, 0.0, 0.0, (3, 2), (1, 1), 0.01, 27, cfg)
        np.testing.assert_allclose(cost, 3.0)
        np.testing.assert_allclose(r, 0.07)

    def test_cost_monotone_in_beam_size(self):
        cfg = MetaConfig(alpha_flop=1e-3, alpha_switch=0.0)
        costs = [
            meta_reward(0, 0, 0, 0, bd, (1, 1), 0.0, 27, cfg)[1]
            for bd in ((1, 1), (2, 1), (2, 2), (3, 2), (3, 3))
        ]
        assert all(b > a for a, b in zip(costs, costs[1:]))


class TestReinforce:
    def test_zero_advantage_zero_entropy_is_noop(self):
        cfg = MetaConfig(entropy_weight=0.0)
        policy = MetaPolicy(cfg, seed=11)
        before = {k: v.copy() for k, v in policy.params.items()}
        policy.update(np.full(7, 0.2), 5, advantage=0.0)
        for k in before:
            np.testing.assert_array_equal(policy.params[k], before[k])

    def test_log_prob_gradient_matches_fd(self):
        params = init_policy_params(np.random.default_rng(12), 12)
        f = np.random.default_rng(13).uniform(-1, 1, 7)
        grads = log_prob_grads(params, f, 4)
        for key, g in grads.items():
            fd = fd_gradient(lambda: policy_log_prob(params, f, 4), params, key)
            assert rel_error(g, fd) < 1e-4, key

    def test_entropy_gradient_matches_fd(self):
        params = init_policy_params(np.random.default_rng(14), 12)
        f = np.random.default_rng(15).uniform(-1, 1, 7)
        grads = entropy_grads(params, f)
        for key, g in grads.items():
            fd = fd_gradient(lambda: policy_entropy(params, f), params, key)
            assert rel_error(g, fd) < 1e-4, key

    def test_entropy_bonus_raises_entropy(self):
        cfg = MetaConfig(entropy_weight=1.0, lr=0.05)
        policy = MetaPolicy(cfg, seed=16)
        policy.params["b2"][3] = 4.0  # start peaked
        f = np.full(7, 0.5)
        h0 = policy_entropy(policy.params, f)
        for _ in range(200):
            policy.update(f, 3, advantage=0.0)
        assert policy_entropy(policy.params, f) > h0


class TestDualUpdate:
    def test_on_budget_is_fixed_point(self):
        cfg = MetaConfig(dual_lr=0.01, budget=30.0)
        assert dual_update(0.2, 30.0, cfg) == 0.2

    def test_projection_at_zero(self):
        cfg = MetaConfig(dual_lr=0.01, budget=30.0)
        assert dual_update(0.0, 10.0, cfg) == 0.0

    def test_arithmetic(self):
        cfg = MetaConfig(dual_lr=0.01, budget=30.0)
        np.testing.assert_allclose(dual_update(0.1, 50.0, cfg), 0.3)

    def test_nonnegative_under_random_updates(self):
        rng = np.random.default_rng(17)
        cfg = MetaConfig(dual_lr=0.05, budget=1.0)
        lam = 0.0
        for _ in range(10_000):
            lam = dual_update(lam, rng.uniform(0, 5), cfg)
            assert lam >= 0.0


class TestHeuristicRule:
    RULE = HeuristicRuleConfig(eps_ref=0.1)

    def test_quiet_trend_goes_narrow_deep(self):
        assert heuristic_beam_rule(0.0, 0.0, self.RULE) == (1, 6)

    def test_hot_trend_goes_wide_shallow(self):
        assert heuristic_beam_rule(0.5, 0.2, self.RULE) == (6, 1)

    def test_monotone_over_trend_scan(self):
        widths, depths = [], []
        for trend in np.linspace(0, 0.2, 41):
            b, d = heuristic_beam_rule(0.0, trend, self.RULE)
            widths.append(b)
            depths.append(d)
        assert all(b2 >= b1 for b1, b2 in zip(widths, widths[1:]))
        assert all(d2 <= d1 for d1, d2 in zip(depths, depths[1:]))

    def test_outputs_always_valid(self):
        rng = np.random.default_rng(18)
        for _ in range(200):
            b, d = heuristic_beam_rule(rng.uniform(0, 1), rng.normal(), self.RULE)
            assert 1 <= b <= 6 and 1 <= d <= 6


class TestController:
    def test_budget_defaults_to_two_by_two_cost(self):
        cfg = MetaConfig(alpha_flop=1e-4)
        mc = MetaController(cfg, n_actions=27, policy_seed=0, sample_seed=1)
        np.testing.assert_allclose(mc.cfg.budget, 1e-4 * 2 * 2 * 27)

    def test_full_loop_keeps_invariants(self):
        cfg = MetaConfig()
        mc = MetaController(cfg, n_actions=5, policy_seed=2, sample_seed=3)
        rng = np.random.default_rng(4)
        mc.begin_episode(0.3)
        for t in range(100):
            q_on = rng.normal(size=5)
            q_tg = rng.normal(size=5)
            bd, ctx = mc.choose(q_on, q_tg, mc.e_prev, t, 100)
            assert bd in mc.policy.menu
            rec = mc.observe(bd, max(0.0, mc.e_prev + rng.normal(scale=0.02)), ctx)
            assert rec["lambda"] >= 0.0
            assert np.isfinite(rec["r_meta"])

    def test_trend_tracker_ema(self):
        trend = ErrorTrend(0.9)
        v = trend.update(1.0, 0.0)  # diff 1.0
        np.testing.assert_allclose(v, 0.1)
        v = trend.update(1.0, 1.0)
        np.testing.assert_allclose(v, 0.09)
