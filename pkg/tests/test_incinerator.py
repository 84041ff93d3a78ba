"""Tests for circsim.envs.incinerator."""

import dataclasses

import numpy as np
import pytest

from circsim.envs import IncineratorEnv, IncineratorParams
from circsim.envs.incinerator import (
    THERMAL_MASS_GUARD, incinerator_constitutive, incinerator_dynamics, incinerator_reward
)
from circsim.exceptions import ConfigurationError, ThermalMassUnderflow
from circsim.integrate import Method, constant_schedule, verify_step_size


def quiet_plant(**overrides):
    """No feed, no air, no reactions."""
    params = dict(f_in=0.0, f_ai=0.0, f_aii=0.0, k_w=0.0, k_char=0.0, k_ash=0.0, k_charout=0.0,
                  k_gout_w=0.0, k_gout_f=0.0)
    params.update(overrides)
    return IncineratorParams(**params)


class TestConstitutive:
    def test_zero_masses(self) -> None:
        c = incinerator_constitutive(np.array([0.0, 0.0, 900.0, 0.0, 0.0, 1100.0]), IncineratorParams())
        assert all(v == 0 for v in c)

    def test_substitution(self) -> None:
        p = IncineratorParams(k_w=0.01, y_char=0.2)
        c = incinerator_constitutive(np.array([100.0, 0.0, 900.0, 0.0, 0.0, 1100.0]), p)
        assert c.R_w == pytest.approx(1.0)
        assert c.P_char == pytest.approx(0.2)


class TestDynamics:
    def test_quiet_plant_is_at_rest(self) -> None:
        x = np.array([2000.0, 100.0, 900.0, 50.0, 100.0, 1100.0])
        dx = incinerator_dynamics(x, 0.0, quiet_plant())
        np.testing.assert_array_equal(dx[[0, 1, 3, 4]], 0.0)
        assert dx[5] == 0

    def test_freeboard_balance_vanishes(self) -> None:
        p = IncineratorParams()
        x = np.array([2000.0, 100.0, p.t_aii, 50.0, 100.0, p.t_aii])
        q_g = incinerator_constitutive(x, p).Q_g
        assert incinerator_dynamics(x, q_g, p)[5] == pytest.approx(0.0, abs=1e-9)

    def test_bed_mass_settles_where_feed_balances_loss(self) -> None:
        p = IncineratorParams()
        m_star = p.f_in / (p.k_ash + p.k_w)
        x = np.array([m_star, 100.0, 900.0, 50.0, 100.0, 1100.0])
        assert incinerator_dynamics(x, 0.0, p)[0] == pytest.approx(0.0, abs=1e-12)

    def test_heat_extraction_cools_the_freeboard(self) -> None:
        p = IncineratorParams()
        x = p.nominal_state
        assert incinerator_dynamics(x, p.q_ext_max, p)[5] < incinerator_dynamics(x, 0.0, p)[5]

    def test_thermal_mass_guard(self) -> None:
        p = quiet_plant(c_pm=0.0)
        x = np.array([0.0, 0.0, 900.0, 0.0, 1.0, 1100.0])
        with pytest.raises(ThermalMassUnderflow) as exc:
            incinerator_dynamics(x, 0.0, p)
        assert exc.value.which == "wastebed"
        assert exc.value.guard == THERMAL_MASS_GUARD

    def test_freeboard_guard(self) -> None:
        p = quiet_plant(c_pm=0.0)
        x = np.array([10.0, 0.0, 900.0, 0.0, 0.0, 1100.0])
        with pytest.raises(ThermalMassUnderflow, match="freeboard"):
            incinerator_dynamics(x, 0.0, p)


class TestReward:
    def test_setpoint(self) -> None:
        p = IncineratorParams()
        assert incinerator_reward(np.array([0, 0, 0, 0, 0, p.t_gd]), p) == 0

    def test_substitution(self) -> None:
        p = IncineratorParams(t_gd=1200.0)
        assert incinerator_reward(np.array([0, 0, 0, 0, 0, 1100.0]), p) == -10000.0


class TestIncineratorParams:
    def test_yields_cannot_exceed_one(self) -> None:
        with pytest.raises(ConfigurationError, match="y_char \\+ y_gas"):
            IncineratorParams(y_char=0.5, y_gas=0.6)

    def test_action_bounds_ordered(self) -> None:
        with pytest.raises(ConfigurationError, match="q_ext_max"):
            IncineratorParams(q_ext_min=10.0, q_ext_max=1.0)


class TestIncineratorEnv:
    def test_columns(self) -> None:
        assert IncineratorEnv().csv_columns == ("t", "x1", "x2", "x3", "x4", "x5", "x6", "Q_ext", "r_i")

    def test_reset_to_nominal_state(self) -> None:
        env = IncineratorEnv()
        obs, _ = env.reset(seed=0)
        np.testing.assert_array_equal(obs, env.params.nominal_state)

    def test_noisy_reset(self) -> None:
        env = IncineratorEnv({"init_noise": 0.1})
        first, _ = env.reset(seed=4)
        again, _ = env.reset(seed=4)
        np.testing.assert_array_equal(first, again)
        assert not np.array_equal(first, env.params.nominal_state)

    def test_underflow_terminates_the_episode(self) -> None:
        env = IncineratorEnv(quiet_plant(c_pm=0.0, m0=0.0, m_char0=0.0))
        env.reset(seed=0)
        result = env.step([0.0])
        assert result.terminated and not result.truncated
        assert result.info["termination"] == "numerical-failure"
        assert "wastebed" in result.info["error"]

    def test_default_step_size_verifies(self) -> None:
        env = IncineratorEnv()
        spec = env.ode_spec
        report = verify_step_size(spec, env.params.nominal_state, constant_schedule([0.0]), 120.0, 1e-6)
        assert report.passed

    def test_coarse_euler_fails_verification(self) -> None:
        params = dataclasses.replace(IncineratorParams(), dt=60.0, method=Method.EULER)
        spec = IncineratorEnv(params).ode_spec
        report = verify_step_size(spec, params.nominal_state, constant_schedule([0.0]), 3600.0, 1e-6)
        assert not report.passed
