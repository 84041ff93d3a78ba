"""Tests for circsim.trainers."""

import numpy as np
import pytest

from circsim.abc import PolicyAction
from circsim.config import RunConfig
from circsim.envs import EnvConfig, make_env
from circsim.exceptions import ConfigurationError
from circsim.trainers import (
    TRAINERS, ArsConfig, CemConfig, LinearPolicy, MalformedPolicyRecord, Normalizer, PolicyDivergence,
    RandomSearchConfig, RolloutSession, TrainerConfig, ars_train, ars_update, cem_refit, cem_train, evaluate,
    load_policy, random_search_train, read_policy, save_policy, write_policy, zeta
)
from circsim.trainers import api
from circsim.trainers._internal_utils import Stream, derive_rng, derive_seed

# 20 steps parked 995 m short of the incinerator: -(995 ** 2) per step
UNCONTROLLED_RETURN = -19800500.0


class TestNormalizer:
    def test_merge_equals_sequential(self) -> None:
        rng = np.random.default_rng(0)
        data = rng.normal(size=(30, 3)) * [1.0, 10.0, 0.1]

        whole = Normalizer(3)
        for x in data:
            whole.observe(x)

        left, right = Normalizer(3), Normalizer(3)
        for x in data[:12]:
            left.observe(x)
        for x in data[12:]:
            right.observe(x)
        left.merge(right)

        assert left.count == 30
        np.testing.assert_allclose(left.mean, data.mean(axis=0), rtol=1e-12)
        np.testing.assert_allclose(left.var, data.var(axis=0), rtol=1e-12)
        np.testing.assert_allclose(whole.var, left.var, rtol=1e-12)

    def test_constant_feature_is_not_scaled(self) -> None:
        n = Normalizer(1)
        for _ in range(5):
            n.observe([3.0])
        assert n.normalize([4.0])[0] == 1.0


class TestLinearPolicy:
    def test_params_layout(self) -> None:
        policy = LinearPolicy([[1.0, 2.0]], [3.0])
        np.testing.assert_array_equal(policy.params, [[1.0, 2.0, 3.0]])
        again = LinearPolicy.from_params(policy.params)
        np.testing.assert_array_equal(again.weights, policy.weights)
        np.testing.assert_array_equal(again.bias, policy.bias)

    def test_action_is_clipped(self) -> None:
        policy = LinearPolicy([[10.0, 0.0]])
        np.testing.assert_array_equal(policy.act([1.0, 0.0]), [1.0])
        np.testing.assert_array_equal(policy.act([-1.0, 0.0]), [-1.0])

    def test_zero_policy_acts_zero(self) -> None:
        np.testing.assert_array_equal(LinearPolicy.zeros(1, 2).act([123.0, -4.0]), [0.0])


class TestPolicyAction:
    def test_one_sided_box(self) -> None:
        env = PolicyAction(make_env("incinerator"))
        for y, q_ext in [(0.0, 0.0), (0.5, 2.5e7), (1.0, 5e7), (-1.0, 0.0), (3.0, 5e7)]:
            np.testing.assert_array_equal(env.action(np.array([y])), [q_ext])

    def test_symmetric_box(self) -> None:
        env = PolicyAction(make_env("transport-truck"))
        np.testing.assert_array_equal(env.action(np.array([0.5])), [2.5e4])
        np.testing.assert_array_equal(env.action(np.array([-1.0])), [-5e4])

    def test_policy_space(self) -> None:
        env = PolicyAction(make_env("co2-microalgae-droop"))
        np.testing.assert_array_equal(env.action_space.low, [-1.0])
        np.testing.assert_array_equal(env.action_space.high, [1.0])
        assert env.unwrapped.action_space.high[0] == env.unwrapped.params.i_max


class TestZeta:
    @pytest.mark.parametrize("r_s, r_e, expected", [(-50.25, -12.67, 37.58), (-63.4, -16.6, 46.8)])
    def test_improvements(self, r_s, r_e, expected) -> None:
        assert zeta(r_s, r_e) == pytest.approx(expected)

    def test_no_change(self) -> None:
        assert zeta(-3.5, -3.5) == 0


class TestArsUpdate:
    def test_equal_returns_leave_parameters_unchanged(self) -> None:
        params = np.arange(6.0).reshape(2, 3)
        deltas = np.random.default_rng(1).normal(size=(4, 2, 3))
        returns = [-7.0] * 4
        np.testing.assert_array_equal(ars_update(params, deltas, returns, returns, 0.02, 2), params)

    def test_single_direction(self) -> None:
        params = np.zeros((1, 3))
        delta = np.array([[[1.0, -2.0, 0.5]]])
        updated = ars_update(params, delta, [3.0], [1.0], 0.02, 1)
        # sigma_R = std([3, 1]) = 1
        np.testing.assert_allclose(updated, 0.02 * 2.0 * delta[0])

    def test_keeps_best_directions(self) -> None:
        params = np.zeros((1, 1))
        deltas = np.array([[[1.0]], [[100.0]]])
        updated = ars_update(params, deltas, [5.0, 0.0], [1.0, -1.0], 1.0, 1)
        assert updated[0, 0] == pytest.approx(4.0 / 2.0)


class TestCemRefit:
    def test_whole_population_is_elite(self) -> None:
        samples = np.random.default_rng(2).normal(size=(8, 1, 3))
        mean, std = cem_refit(samples, np.arange(8.0), 8)
        np.testing.assert_allclose(mean, samples.mean(axis=0))
        np.testing.assert_allclose(std, samples.std(axis=0))

    def test_selects_best(self) -> None:
        samples = np.array([[[0.0]], [[10.0]], [[20.0]]])
        mean, std = cem_refit(samples, [1.0, 3.0, 2.0], 2)
        assert mean[0, 0] == 15.0
        assert std[0, 0] == 5.0


class TestConfigs:
    def test_top_directions_bound(self) -> None:
        with pytest.raises(ConfigurationError, match="exceeds n_directions"):
            ArsConfig(n_directions=2, top_directions=3)

    def test_no_elite(self) -> None:
        with pytest.raises(ConfigurationError, match="selects no elite"):
            CemConfig(population=3, elite_frac=0.25)

    def test_negative_iterations(self) -> None:
        with pytest.raises(ConfigurationError, match="iterations"):
            TrainerConfig(iterations=-1)

    def test_from_mapping(self) -> None:
        cfg = ArsConfig.from_mapping({"iterations": 3, "noise_std": 0.1})
        assert (cfg.iterations, cfg.noise_std, cfg.n_directions) == (3, 0.1, 8)


class TestSeeds:
    def test_streams_are_independent(self) -> None:
        assert derive_seed(0, Stream.ROLLOUT, 1, 0) != derive_seed(0, Stream.EVALUATION, 1, 0)
        assert derive_seed(0, Stream.ROLLOUT, 1, 0) != derive_seed(1, Stream.ROLLOUT, 1, 0)

    def test_reproducible(self) -> None:
        a = derive_rng(7, Stream.DIRECTIONS, 3).standard_normal(4)
        b = derive_rng(7, Stream.DIRECTIONS, 3).standard_normal(4)
        np.testing.assert_array_equal(a, b)
        assert 0 <= derive_seed(7, Stream.ROLLOUT, 3) < 2 ** 63


class TestEvaluate:
    def test_uncontrolled_truck(self, short_truck) -> None:
        assert evaluate(LinearPolicy.zeros(1, 2), short_truck, 3, seed=0) == UNCONTROLLED_RETURN

    def test_zero_policy_extracts_no_heat(self) -> None:
        cfg = EnvConfig("incinerator", {"horizon": 20})
        env = cfg.make()
        env.reset(seed=derive_seed(3, Stream.EVALUATION, 0))

        total, done = 0.0, False
        while not done:
            _, reward, terminated, truncated, info = env.step([0.0])
            assert info["action"][0] == 0
            total += reward
            done = terminated or truncated

        assert evaluate(LinearPolicy.zeros(1, 6), cfg, 1, seed=3) == total

    def test_zero_policy_applies_no_light(self) -> None:
        with RolloutSession(EnvConfig("co2-microalgae-monod", {"horizon": 5})) as session:
            env = session.get_env()
            obs, _ = env.reset(seed=0)
            _, _, _, _, info = env.step(LinearPolicy.zeros(1, 2).act(obs))
        assert info["action"][0] == 0

    def test_single_episode(self, short_truck) -> None:
        policy = LinearPolicy([[0.001, 0.0]])
        with RolloutSession(short_truck) as session:
            rollout = session.rollout(policy, derive_seed(5, Stream.EVALUATION, 0))
        assert evaluate(policy, short_truck, 1, seed=5) == rollout.episode_return
        assert rollout.steps == 20
        assert rollout.termination == "horizon"

    def test_same_seed_same_mean(self) -> None:
        env = EnvConfig("transport-truck", {"horizon": 30})
        policy = LinearPolicy([[0.5, -0.2]], [0.1])
        assert evaluate(policy, env, 4, seed=9) == evaluate(policy, env, 4, seed=9, workers=2)

    def test_rejects_no_episodes(self, short_truck) -> None:
        with pytest.raises(ValueError, match="n_episodes"):
            evaluate(LinearPolicy.zeros(1, 2), short_truck, 0, seed=0)

    def test_session_rejects_bad_workers(self, short_truck) -> None:
        with pytest.raises(ConfigurationError, match="workers"):
            RolloutSession(short_truck, workers=0)


class TestArsTrain:
    def test_no_iterations(self, short_truck) -> None:
        run = ars_train(short_truck, ArsConfig(iterations=0, n_eval_episodes=2))
        assert run.history == ()
        assert run.report.r_s == run.report.r_e == UNCONTROLLED_RETURN
        assert run.report.zeta == 0

    def test_history_and_evaluations(self, short_truck) -> None:
        run = ars_train(short_truck, ArsConfig(iterations=4, eval_every=2, n_eval_episodes=2, n_directions=3,
                                               top_directions=2))
        assert [h.iteration for h in run.history] == [1, 2, 3, 4]
        assert np.isnan(run.history[0].eval_return) and np.isfinite(run.history[1].eval_return)
        assert [h.env_steps for h in run.history] == [120, 240, 360, 480]
        assert run.policy.normalizer.count == 480
        assert run.report.zeta == run.report.r_e - run.report.r_s

    def test_independent_of_workers(self, short_truck) -> None:
        cfg = ArsConfig(iterations=3, eval_every=1, n_eval_episodes=3, n_directions=4, top_directions=2, seed=11)
        serial = ars_train(short_truck, cfg, workers=1)
        parallel = ars_train(short_truck, cfg, workers=3)
        assert serial.history_rows() == parallel.history_rows()
        np.testing.assert_array_equal(serial.policy.params, parallel.policy.params)
        assert serial.policy.normalizer == parallel.policy.normalizer
        assert save_policy(serial.policy) == save_policy(parallel.policy)

    def test_seed_changes_the_run(self, short_truck) -> None:
        a = ars_train(short_truck, ArsConfig(iterations=2, n_eval_episodes=1, seed=1))
        b = ars_train(short_truck, ArsConfig(iterations=2, n_eval_episodes=1, seed=2))
        assert not np.array_equal(a.policy.params, b.policy.params)

    def test_divergence_keeps_history(self, short_truck, monkeypatch) -> None:
        calls = []

        def diverge(params, *args):
            calls.append(1)
            return params + (np.nan if len(calls) == 2 else 0.0)

        monkeypatch.setattr(api, "ars_update", diverge)
        with pytest.raises(PolicyDivergence) as exc:
            ars_train(short_truck, ArsConfig(iterations=5, n_eval_episodes=1, n_directions=2, top_directions=1))
        assert exc.value.iteration == 2
        assert [h.iteration for h in exc.value.history] == [1]


class TestPopulationTrainers:
    def test_zero_spread_is_flat(self, short_truck) -> None:
        run = cem_train(short_truck, CemConfig(iterations=3, population=4, elite_frac=0.5, init_std=0.0,
                                               n_eval_episodes=1))
        assert set(run.mean_returns) == {UNCONTROLLED_RETURN}
        np.testing.assert_array_equal(run.policy.params, np.zeros((1, 3)))

    def test_cem_keeps_best_sample(self, short_truck) -> None:
        run = cem_train(short_truck, CemConfig(iterations=2, population=6, elite_frac=0.5, n_eval_episodes=1,
                                               eval_every=1))
        assert len(run.history) == 2
        assert all(np.isfinite(h.eval_return) for h in run.history)
        assert run.report.r_e == run.history[-1].eval_return

    def test_random_search(self, short_truck) -> None:
        run = random_search_train(short_truck, RandomSearchConfig(iterations=2, population=5, n_eval_episodes=1))
        assert run.trainer == "random"
        assert [h.env_steps for h in run.history] == [100, 200]


class TestPolicyRecords:
    def test_save_load_save(self) -> None:
        norm = Normalizer(2, 3, [0.1, -2.0 / 3.0], [1e-3, 5.0])
        record = save_policy(LinearPolicy([[0.1, 1.0 / 3.0]], [-0.7], norm))
        assert save_policy(load_policy(record)) == record

    def test_file_round_trip(self, tmp_path) -> None:
        policy = LinearPolicy([[1.5, -2.25]], [0.125])
        write_policy(tmp_path / "policy.json", policy)
        loaded = read_policy(tmp_path / "policy.json")
        np.testing.assert_array_equal(loaded.params, policy.params)

    def test_nan_weight_rejected(self) -> None:
        record = save_policy(LinearPolicy([[1.0, 2.0]])).replace('"1"', '"NaN"')
        with pytest.raises(MalformedPolicyRecord, match="not finite"):
            load_policy(record)

    def test_missing_keys(self) -> None:
        with pytest.raises(MalformedPolicyRecord, match="Keys missing from policy record: bias"):
            load_policy('{"format": "circsim-linear-policy", "version": 1, "action_dim": 1, "obs_dim": 1, '
                        '"weights": [["1"]], "normalizer": {}}')

    def test_shape_mismatch(self) -> None:
        record = save_policy(LinearPolicy([[1.0, 2.0]])).replace('"obs_dim": 2', '"obs_dim": 3')
        with pytest.raises(MalformedPolicyRecord, match="shapes"):
            load_policy(record)

    def test_not_json(self) -> None:
        with pytest.raises(MalformedPolicyRecord, match="not JSON"):
            load_policy("weights: 1")


def train_preset(name):
    cfg = RunConfig.from_preset(name)
    return cfg, TRAINERS[cfg.trainer.name].train(cfg.env, cfg.trainer.config, workers=4)


def mean_temperature_error(policy, env_config, seed):
    """Time-averaged ``|T_gd - x6|`` over one episode of ``policy``."""
    env = env_config.make()
    runner = PolicyAction(env)
    obs, _ = runner.reset(seed=seed)

    errors, done = [], False
    while not done:
        errors.append(abs(env.params.t_gd - env.state[5]))
        obs, _, terminated, truncated, _ = runner.step(policy.act(obs))
        done = terminated or truncated
    return float(np.mean(errors))


@pytest.mark.slow
class TestTrainingImproves:
    def test_ars_truck(self) -> None:
        _, run = train_preset("transport-truck-ars")
        assert run.report.zeta > 0
        # both returns are negative
        assert abs(run.report.r_e) <= abs(run.report.r_s) / 10

    def test_cem_truck(self) -> None:
        _, run = train_preset("transport-truck-cem")
        assert run.report.zeta > 0

    @pytest.mark.parametrize("name", ["co2-microalgae-monod-ars", "co2-microalgae-droop-ars"])
    def test_ars_microalgae(self, name) -> None:
        _, run = train_preset(name)
        assert run.report.zeta > 0

    def test_ars_incinerator(self) -> None:
        cfg, run = train_preset("incinerator-ars")
        untrained = mean_temperature_error(LinearPolicy.zeros(1, 6), cfg.env, cfg.seed)
        trained = mean_temperature_error(run.policy, cfg.env, cfg.seed)
        assert run.report.zeta > 0 or trained <= 0.7 * untrained
