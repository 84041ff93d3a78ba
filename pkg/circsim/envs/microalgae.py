"""
Microalgae photobioreactors removing CO2 from the atmosphere.

Two chemostat models driven by light intensity ``I``:

- Monod: state ``[s_n, x_b]`` (substrate and biomass, g/L); growth saturates
  multiplicatively in substrate and light.
- Droop: state ``[s_n, q, x_b]`` with the internal cell quota ``q`` (g/g); uptake
  depends on the substrate, growth on the quota and the light.

Time is measured in days. The reward of a step is the CO2 mass (g) taken up during
it, ``k_co2 * rho_total * dt``, minus an optional light cost. ``m_dot_23`` reports
the same uptake as a mass flow in kg/s, the removal flow of the net-zero network.
"""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..abc import OdeEnv, OdeParams
from ..exceptions import ConfigurationError
from ..integrate import Method
from ..typing import Info, Vector

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400.0

#: the quota is kept at or above k_q * QUOTA_FLOOR
QUOTA_FLOOR = 1.0 + 1e-12


@dataclass(frozen=True)
class AlgaeParams(OdeParams):
    """
    :param mu_max: maximal growth rate of the Monod model (1/day)
    :param mu_bar: theoretical maximal growth rate of the Droop model (1/day)
    :param k_s: substrate half-saturation (g/L)
    :param k_i: light half-saturation (umol m^-2 s^-1)
    :param rho_max: maximal uptake rate of the Droop model (g/(g day))
    :param k_q: subsistence quota (g/g)
    :param y: biomass yield on substrate of the Monod model (g/g)
    :param d: dilution rate (1/day)
    :param s_in: substrate concentration of the inflow (g/L)
    :param k_co2: fraction of the uptake that is CO2, in (0, 1)
    :param i_max: light bound (umol m^-2 s^-1)
    :param v: culture volume (L)
    :param light_cost: reward penalty per unit of light and day
    """

    mu_max: float = 2.0
    mu_bar: float = 2.0
    k_s: float = 0.1
    k_i: float = 100.0
    rho_max: float = 0.073
    k_q: float = 0.018
    y: float = 0.5
    d: float = 0.5
    s_in: float = 0.5
    k_co2: float = 0.5
    i_max: float = 1000.0
    v: float = 1000.0
    light_cost: float = 0.0
    s_n0: float = 0.2
    x_b0: float = 0.05
    q0: float = 0.03
    init_noise: float = 0.0
    dt: float = 0.01
    substeps: int = 5
    method: Method = Method.RK4
    horizon: int = 1000

    def __post_init__(self):
        super().__post_init__()
        self._check_positive(
            "mu_max", "mu_bar", "k_s", "k_i", "rho_max", "k_q", "y", "d", "s_in", "i_max", "v", "s_n0", "x_b0", "q0"
        )
        self._check_nonnegative("light_cost", "init_noise")

        if not 0 < self._check_real("k_co2") < 1:
            raise ConfigurationError(f"k_co2 must lie in (0, 1), got {self.k_co2!r}")
        if self.q0 < self.k_q:
            raise ConfigurationError(f"q0 ({self.q0!r}) is below the subsistence quota k_q ({self.k_q!r})")
        if self.init_noise >= 1:
            raise ConfigurationError(f"init_noise must be < 1, got {self.init_noise!r}")

        if self.d >= self.mu_max:
            logger.warning(f"Dilution rate d={self.d!r} is not below mu_max={self.mu_max!r}: the Monod culture washes out")


def light_factor(I: float, p: AlgaeParams) -> float:
    return I / (p.k_i + I)


def monod_uptake(s_n: float, x_b: float, I: float, p: AlgaeParams) -> Tuple[float, float]:
    """
    Growth rate and volumetric substrate uptake of the Monod model.

    :return: ``(mu, rho)`` in 1/day and g/(L day)
    """
    mu = p.mu_max * s_n / (p.k_s + s_n) * light_factor(I, p)
    return mu, mu * x_b / p.y


def droop_uptake(s_n: float, q: float, I: float, p: AlgaeParams) -> Tuple[float, float]:
    """
    Per-biomass uptake and growth rate of the Droop model.

    :return: ``(rho, mu)`` in g/(g day) and 1/day
    """
    rho = p.rho_max * s_n / (p.k_s + s_n)
    mu = p.mu_bar * (1.0 - p.k_q / q) * light_factor(I, p)
    return rho, mu


def monod_dynamics(x: Vector, I: float, p: AlgaeParams) -> Vector:
    s_n, x_b = x
    mu, rho = monod_uptake(s_n, x_b, I, p)
    return np.array([p.d * (p.s_in - s_n) - rho, (mu - p.d) * x_b])


def droop_dynamics(x: Vector, I: float, p: AlgaeParams) -> Vector:
    s_n, q, x_b = x
    rho, mu = droop_uptake(s_n, q, I, p)
    return np.array([p.d * (p.s_in - s_n) - rho * x_b, rho - mu * q, (mu - p.d) * x_b])


def algae_reward(rho_total: float, p: AlgaeParams, I: float = 0.0) -> Tuple[float, float]:
    """
    Reward of one control step and the CO2 removal flow.

    :param rho_total: total substrate uptake of the culture (g/day)
    :param I: applied light, charged at ``light_cost``
    :return: ``(r, m_dot_23)``: CO2 grams removed during the step net of the light
        cost, and the removal rate in kg/s
    """
    rho_co2 = p.k_co2 * rho_total
    r = rho_co2 * p.dt - p.light_cost * I * p.dt
    return r, rho_co2 / 1000.0 / SECONDS_PER_DAY


class _AlgaeEnv(OdeEnv):
    params_class = AlgaeParams
    action_names = ("I",)
    info_columns = ("m_dot_23",)
    time_unit_seconds = SECONDS_PER_DAY
    compartment = "c^3_{3,3}"
    compartment_role = "process"

    def action_bounds(self):
        return np.array([0.0]), np.array([self.params.i_max])

    def observation_bounds(self):
        n = len(self.state_names)
        return np.zeros(n), np.full(n, np.inf)

    def nominal_state(self) -> Vector:
        raise NotImplementedError

    def initial_state(self, rng: np.random.Generator) -> Vector:
        x0 = self.nominal_state()
        if self.params.init_noise:
            x0 = x0 * (1.0 + self.params.init_noise * rng.uniform(-1.0, 1.0, size=x0.shape))
        return x0

    def total_uptake(self, x: Vector, I: float) -> float:
        raise NotImplementedError

    def reward(self, x: Vector, u: Vector) -> Tuple[float, Info]:
        r, m_dot_23 = algae_reward(self.total_uptake(x, u[0]), self.params, u[0])
        return r, {"m_dot_23": m_dot_23}


class MonodEnv(_AlgaeEnv):
    name = "co2-microalgae-monod"
    state_names = ("s_n", "x_b")

    def derivative(self, x: Vector, u: Vector, t: float) -> Vector:
        return monod_dynamics(x, u[0], self.params)

    def nominal_state(self) -> Vector:
        return np.array([self.params.s_n0, self.params.x_b0])

    def total_uptake(self, x: Vector, I: float) -> float:
        _, rho = monod_uptake(x[0], x[1], I, self.params)
        return rho * self.params.v


class DroopEnv(_AlgaeEnv):
    name = "co2-microalgae-droop"
    state_names = ("s_n", "q", "x_b")

    def __init__(self, params=None):
        super().__init__(params)
        self._quota_clamps = 0

    def derivative(self, x: Vector, u: Vector, t: float) -> Vector:
        return droop_dynamics(x, u[0], self.params)

    def nominal_state(self) -> Vector:
        return np.array([self.params.s_n0, self.params.q0, self.params.x_b0])

    def initial_state(self, rng: np.random.Generator) -> Vector:
        x0 = super().initial_state(rng)
        x0[1] = max(x0[1], self.params.k_q * QUOTA_FLOOR)
        return x0

    def reset(self, *, seed=None, options=None):
        self._quota_clamps = 0
        return super().reset(seed=seed, options=options)

    def total_uptake(self, x: Vector, I: float) -> float:
        rho, _ = droop_uptake(x[0], x[1], I, self.params)
        return rho * x[2] * self.params.v

    def project(self, x: Vector, info: Info) -> Vector:
        floor = self.params.k_q * QUOTA_FLOOR
        clamped = bool(x[1] < floor)
        if clamped:
            x = x.copy()
            x[1] = floor
            self._quota_clamps += 1
        info.update(quota_clamped=clamped, quota_clamps=self._quota_clamps)
        return x


__all__ = [
    "SECONDS_PER_DAY", "QUOTA_FLOOR", "AlgaeParams", "light_factor", "monod_uptake", "droop_uptake",
    "monod_dynamics", "droop_dynamics", "algae_reward", "MonodEnv", "DroopEnv"
]
