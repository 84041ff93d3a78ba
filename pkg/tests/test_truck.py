"""Tests for the transport truck environment and the environment contract."""

import numpy as np
import pytest

from circsim.envs import TransportTruckEnv, TruckParams, make_env
from circsim.envs.truck import truck_dynamics, truck_reward
from circsim.exceptions import ConfigurationError, EpisodeError


class TestTruckDynamics:
    def test_rest(self) -> None:
        np.testing.assert_array_equal(truck_dynamics(np.zeros(2), 0.0, TruckParams()), [0.0, 0.0])

    def test_substitution(self) -> None:
        p = TruckParams(m_truck=3.0, m_u=2.0)
        np.testing.assert_array_equal(truck_dynamics(np.array([3.0, 2.0]), 10.0, p), [2.0, 2.0])


class TestTruckReward:
    def test_parked_at_incinerator(self) -> None:
        p = TruckParams()
        assert truck_reward(np.array([p.x_inc, 0.0]), 0.0, p) == 0

    def test_one_metre_away(self) -> None:
        assert truck_reward(np.zeros(2), 0.0, TruckParams(x_inc=1.0)) == -1.0

    def test_speed_penalty(self) -> None:
        p = TruckParams()
        assert truck_reward(np.array([p.x_inc, 1.0]), 0.0, p) == pytest.approx(-0.1)

    def test_effort_penalty(self) -> None:
        p = TruckParams()
        assert truck_reward(np.array([p.x_inc, 0.0]), 100.0, p) == pytest.approx(-10.0)


class TestTruckParams:
    def test_mapping(self) -> None:
        env = make_env("transport-truck", {"horizon": 10, "method": "euler"})
        assert env.params.horizon == 10
        assert env.ode_spec.method.value == "euler"

    def test_unknown_key(self) -> None:
        with pytest.raises(ConfigurationError, match="Unknown key"):
            make_env("transport-truck", {"mass": 1.0})

    def test_non_positive_mass(self) -> None:
        with pytest.raises(ConfigurationError, match="m_truck \\+ m_u"):
            TruckParams(m_truck=-2000.0)

    def test_initial_range(self) -> None:
        with pytest.raises(ConfigurationError, match="x0_min"):
            TruckParams(x0_min=5.0, x0_max=-5.0)


class TestEnvironmentContract:
    def test_spaces(self) -> None:
        env = TransportTruckEnv()
        assert env.observation_space.shape == (2,)
        np.testing.assert_array_equal(env.action_space.high, [5e4])

    def test_seeded_reset_is_deterministic(self) -> None:
        env = TransportTruckEnv()
        first, _ = env.reset(seed=7)
        second, _ = env.reset(seed=7)
        np.testing.assert_array_equal(first, second)
        assert -10.0 <= first[0] <= 10.0
        assert first[1] == 0

    def test_reset_with_state(self) -> None:
        obs, info = TransportTruckEnv().reset(options={"state": [1.0, 2.0]})
        np.testing.assert_array_equal(obs, [1.0, 2.0])
        assert info["step"] == 0

    def test_unknown_reset_option(self) -> None:
        with pytest.raises(ConfigurationError, match="Unknown reset option"):
            TransportTruckEnv().reset(options={"mode": 1})

    def test_episode_truncates_at_horizon(self) -> None:
        env = TransportTruckEnv({"horizon": 5})
        env.reset(seed=0)
        results = [env.step([0.0]) for _ in range(5)]
        assert [r.truncated for r in results] == [False] * 4 + [True]
        assert not any(r.terminated for r in results)
        assert results[-1].info["termination"] == "horizon"
        assert results[-1].info["t"] == pytest.approx(2.5)

    def test_step_after_end(self) -> None:
        env = TransportTruckEnv({"horizon": 1})
        env.reset(seed=0)
        env.step([0.0])
        with pytest.raises(EpisodeError, match="ended"):
            env.step([0.0])

    def test_step_before_reset(self) -> None:
        with pytest.raises(EpisodeError, match="before reset"):
            TransportTruckEnv().step([0.0])

    def test_out_of_box_action_is_clipped(self) -> None:
        env = TransportTruckEnv()
        env.reset(options={"state": [0.0, 0.0]})
        result = env.step([1e9])
        assert result.info["action_clipped"]
        np.testing.assert_array_equal(result.info["action"], [5e4])

    def test_in_box_action_is_not_flagged(self) -> None:
        env = TransportTruckEnv()
        env.reset(seed=1)
        assert not env.step([10.0]).info["action_clipped"]

    def test_non_finite_action(self) -> None:
        env = TransportTruckEnv()
        env.reset(seed=1)
        with pytest.raises(ValueError, match="finite"):
            env.step([np.nan])

    def test_reward_uses_pre_step_state(self) -> None:
        env = TransportTruckEnv()
        env.reset(options={"state": [0.0, 0.0]})
        result = env.step([1000.0])
        assert result.reward == truck_reward(np.zeros(2), 1000.0, env.params)
        assert result.info["state"][1] == pytest.approx(1000.0 / 12000.0 * 0.5)

    def test_csv_row(self) -> None:
        env = TransportTruckEnv()
        assert env.csv_columns == ("t", "x1", "x2", "F", "r")
        env.reset(options={"state": [0.0, 0.0]})
        result = env.step([0.0])
        assert env.trajectory_row(0.0, [0.0, 0.0], result.info["action"], result.reward, result.info) == \
            (0.0, 0.0, 0.0, 0.0, -1e6)

    def test_uncontrolled_return(self) -> None:
        env = TransportTruckEnv({"x0_min": 5.0, "x0_max": 5.0})
        env.reset(seed=3)
        total = sum(env.step([0.0]).reward for _ in range(env.max_episode_steps))
        assert total == -396010000.0
