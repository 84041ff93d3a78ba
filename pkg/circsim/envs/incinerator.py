"""
Waste incinerator: a wastebed below a freeboard.

State ``x = [M, M_char, T_w, M_gw, M_gf, T_g]``: waste and char mass in the bed (kg),
bed temperature (K), gas mass in the bed and in the freeboard (kg), freeboard gas
temperature (K). The action is the heat ``Q_ext`` (W) extracted from the freeboard;
the reward penalises the squared distance of ``T_g`` from the setpoint ``t_gd``.

Conversion, combustion and discharge rates are first order in the mass they act on,
with yield fractions splitting converted waste into char and gas. Every coefficient
is a parameter.
"""
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np

from ..abc import OdeEnv, OdeParams
from ..exceptions import ConfigurationError, ThermalMassUnderflow
from ..integrate import Method
from ..typing import Info, Vector


#: smallest accepted thermal mass (J/K) in the two temperature equations
THERMAL_MASS_GUARD = 1e-6


@dataclass(frozen=True)
class IncineratorParams(OdeParams):
    """
    Plant parameters, SI units. Defaults give a stable plant whose bed settles at
    ``M* = f_in / (k_ash + k_w)``.
    """

    f_in: float = 5.0
    c_pw: float = 1500.0
    c_pg: float = 1100.0
    c_pchar: float = 1000.0
    c_pm: float = 500.0
    m_grate: float = 10000.0
    m_fb: float = 5000.0
    f_ai: float = 8.0
    t_ai: float = 400.0
    f_aii: float = 4.0
    t_aii: float = 300.0
    t_gd: float = 1273.0
    q_ext_min: float = 0.0
    q_ext_max: float = 5e7
    k_w: float = 0.004
    y_char: float = 0.15
    k_char: float = 0.002
    y_gas: float = 0.7
    k_ash: float = 0.001
    k_charout: float = 0.001
    k_gout_w: float = 0.05
    k_gout_f: float = 0.05
    h_w: float = 3e6
    h_g: float = 2e6
    m0: float = 2000.0
    m_char0: float = 100.0
    t_w0: float = 900.0
    m_gw0: float = 50.0
    m_gf0: float = 100.0
    t_g0: float = 1100.0
    init_noise: float = 0.0
    dt: float = 1.0
    substeps: int = 10
    method: Method = Method.RK4
    horizon: int = 600

    def __post_init__(self):
        super().__post_init__()
        self._check_nonnegative(
            "f_in", "c_pw", "c_pg", "c_pchar", "c_pm", "m_grate", "m_fb", "f_ai", "f_aii", "k_w", "k_char",
            "k_ash", "k_charout", "k_gout_w", "k_gout_f", "h_w", "h_g", "m0", "m_char0", "m_gw0", "m_gf0",
            "init_noise", "q_ext_min",
        )
        self._check_positive("t_ai", "t_aii", "t_gd", "t_w0", "t_g0")

        for name in ("y_char", "y_gas"):
            if not 0 <= self._check_real(name) <= 1:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {getattr(self, name)!r}")
        if self.y_char + self.y_gas > 1:
            raise ConfigurationError(f"y_char + y_gas must not exceed 1, got {self.y_char + self.y_gas!r}")
        if not self._check_real("q_ext_max") >= self.q_ext_min:
            raise ConfigurationError(f"q_ext_max ({self.q_ext_max!r}) is below q_ext_min ({self.q_ext_min!r})")
        if self.init_noise >= 1:
            raise ConfigurationError(f"init_noise must be < 1, got {self.init_noise!r}")

    @property
    def nominal_state(self) -> Vector:
        return np.array([self.m0, self.m_char0, self.t_w0, self.m_gw0, self.m_gf0, self.t_g0])


class Constitutive(NamedTuple):
    R_w: float
    P_char: float
    R_char: float
    R_g: float
    F_out: float
    F_char_out: float
    F_gw_out: float
    F_g_out: float
    Q: float
    Q_g: float


def incinerator_constitutive(x: Vector, p: IncineratorParams) -> Constitutive:
    """
    Rates, outflows and heat releases at state ``x``.

    - waste conversion ``R_w = k_w M``, char production ``P_char = y_char R_w``
    - char combustion ``R_char = k_char M_char``, gas production ``R_g = y_gas R_w + R_char``
    - ash and char discharge ``F_out = k_ash M``, ``F_char_out = k_charout M_char``
    - gas discharge ``F_gw_out = k_gout_w M_gw``, ``F_g_out = k_gout_f M_gf``
    - heat of conversion ``Q = h_w R_w`` and of freeboard combustion ``Q_g = h_g R_g``
    """
    M, M_char, _, M_gw, M_gf, _ = x

    R_w = p.k_w * M
    R_char = p.k_char * M_char
    R_g = p.y_gas * R_w + R_char

    return Constitutive(
        R_w=R_w,
        P_char=p.y_char * R_w,
        R_char=R_char,
        R_g=R_g,
        F_out=p.k_ash * M,
        F_char_out=p.k_charout * M_char,
        F_gw_out=p.k_gout_w * M_gw,
        F_g_out=p.k_gout_f * M_gf,
        Q=p.h_w * R_w,
        Q_g=p.h_g * R_g,
    )


def incinerator_dynamics(x: Vector, q_ext: float, p: IncineratorParams) -> Vector:
    """
    The six mass and energy balances of the wastebed and the freeboard.

    :raises ThermalMassUnderflow: if a thermal mass falls below :data:`THERMAL_MASS_GUARD`
    """
    M, M_char, T_w, M_gw, M_gf, T_g = x
    c = incinerator_constitutive(x, p)

    bed_heat_capacity = p.c_pw * M + p.c_pchar * M_char + p.c_pm * p.m_grate
    if not bed_heat_capacity >= THERMAL_MASS_GUARD:
        raise ThermalMassUnderflow("wastebed", bed_heat_capacity, THERMAL_MASS_GUARD)

    freeboard_heat_capacity = p.c_pg * M_gf + p.c_pm * p.m_fb
    if not freeboard_heat_capacity >= THERMAL_MASS_GUARD:
        raise ThermalMassUnderflow("freeboard", freeboard_heat_capacity, THERMAL_MASS_GUARD)

    return np.array([
        p.f_in - c.F_out - c.R_w,
        -c.F_char_out + c.P_char - c.R_char,
        (p.f_in * p.c_pw * T_w + p.f_ai * p.c_pg * (p.t_ai - T_w) + c.Q) / bed_heat_capacity,
        p.f_ai - c.F_gw_out + c.R_g,
        c.F_gw_out - c.F_g_out + p.f_aii,
        (c.F_gw_out * p.c_pg * (T_w - T_g) + p.f_aii * p.c_pg * (p.t_aii - T_g) + c.Q_g - q_ext)
        / freeboard_heat_capacity,
    ])


def incinerator_reward(x: Vector, p: IncineratorParams) -> float:
    return -(p.t_gd - x[5]) ** 2


class IncineratorEnv(OdeEnv):
    name = "incinerator"
    params_class = IncineratorParams
    state_names = ("x1", "x2", "x3", "x4", "x5", "x6")
    action_names = ("Q_ext",)
    reward_column = "r_i"
    compartment = "c^3_{3,3}"
    compartment_role = "incinerator"

    def derivative(self, x: Vector, u: Vector, t: float) -> Vector:
        return incinerator_dynamics(x, u[0], self.params)

    def reward(self, x: Vector, u: Vector) -> Tuple[float, Info]:
        return incinerator_reward(x, self.params), {}

    def initial_state(self, rng: np.random.Generator) -> Vector:
        x0 = self.params.nominal_state
        if self.params.init_noise:
            x0 = x0 * (1.0 + self.params.init_noise * rng.uniform(-1.0, 1.0, size=x0.shape))
        return x0

    def action_bounds(self):
        return np.array([self.params.q_ext_min]), np.array([self.params.q_ext_max])

    def observation_bounds(self):
        return np.zeros(6), np.full(6, np.inf)


__all__ = [
    "THERMAL_MASS_GUARD", "IncineratorParams", "Constitutive", "incinerator_constitutive", "incinerator_dynamics",
    "incinerator_reward", "IncineratorEnv"
]
