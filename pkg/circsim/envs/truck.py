"""
Transport truck carrying unsorted waste to the incinerator.

The truck is a particle of mass ``m_tot = m_truck + m_u`` on a line, pushed by a
traction force ``F``. State ``[x1, x2]`` is position (m) and speed (m/s); the goal
is to park at the incinerator ``x_inc`` with zero speed and little effort.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..abc import OdeEnv, OdeParams
from ..exceptions import ConfigurationError
from ..integrate import Method
from ..typing import Info, Vector


@dataclass(frozen=True)
class TruckParams(OdeParams):
    """
    :param m_truck: empty truck mass (kg)
    :param m_u: payload of unsorted waste (kg)
    :param x_inc: incinerator position (m)
    :param f_max: traction force bound (N); the action is ``F`` in ``[-f_max, f_max]``
    :param x0_min: lower bound of the uniform initial position (m)
    :param x0_max: upper bound of the uniform initial position (m)
    :param v0_min: lower bound of the uniform initial speed (m/s)
    :param v0_max: upper bound of the uniform initial speed (m/s)
    """

    m_truck: float = 10000.0
    m_u: float = 2000.0
    x_inc: float = 1000.0
    f_max: float = 5e4
    x0_min: float = -10.0
    x0_max: float = 10.0
    v0_min: float = 0.0
    v0_max: float = 0.0
    dt: float = 0.5
    substeps: int = 1
    method: Method = Method.RK4
    horizon: int = 400

    def __post_init__(self):
        super().__post_init__()
        for name in ("m_truck", "m_u", "x_inc", "x0_min", "x0_max", "v0_min", "v0_max"):
            self._check_real(name)
        self._check_positive("f_max")

        if not self.m_tot > 0:
            raise ConfigurationError(f"m_truck + m_u must be > 0, got {self.m_tot!r}")
        if self.x0_min > self.x0_max:
            raise ConfigurationError(f"x0_min ({self.x0_min!r}) exceeds x0_max ({self.x0_max!r})")
        if self.v0_min > self.v0_max:
            raise ConfigurationError(f"v0_min ({self.v0_min!r}) exceeds v0_max ({self.v0_max!r})")

    @property
    def m_tot(self) -> float:
        return self.m_truck + self.m_u


def truck_dynamics(x: Vector, F: float, p: TruckParams) -> Vector:
    """``[x2, F / m_tot]``"""
    return np.array([x[1], F / p.m_tot])


def truck_reward(x: Vector, F: float, p: TruckParams) -> float:
    """``-[(x_inc - x1)^2 + 0.1 x2^2 + 0.001 F^2]``, zero only at rest on the incinerator."""
    return -((p.x_inc - x[0]) ** 2 + 0.1 * x[1] ** 2 + 0.001 * F ** 2)


class TransportTruckEnv(OdeEnv):
    name = "transport-truck"
    params_class = TruckParams
    state_names = ("x1", "x2")
    action_names = ("F",)
    compartment = "c^6_{2,3}"
    compartment_role = "transport"

    def derivative(self, x: Vector, u: Vector, t: float) -> Vector:
        return truck_dynamics(x, u[0], self.params)

    def reward(self, x: Vector, u: Vector) -> Tuple[float, Info]:
        return truck_reward(x, u[0], self.params), {}

    def initial_state(self, rng: np.random.Generator) -> Vector:
        p = self.params
        return np.array([rng.uniform(p.x0_min, p.x0_max), rng.uniform(p.v0_min, p.v0_max)])

    def action_bounds(self):
        return np.array([-self.params.f_max]), np.array([self.params.f_max])


__all__ = ["TruckParams", "truck_dynamics", "truck_reward", "TransportTruckEnv"]
