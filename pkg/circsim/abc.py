"""
Abstract and low level classes shared by the compartment environments.
"""
import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Any, Mapping, NamedTuple, Optional, Tuple

import gymnasium as gym
import numpy as np
from gymnasium import spaces

from .exceptions import ConfigurationError, EpisodeError, NumericalError
from .integrate import Method, OdeSpec, integrate_step
from .typing import Info, Vector
from .utils import dataclass_from_mapping

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OdeParams:
    """
    Integration and episode settings common to every environment.

    :param dt: control step, in the environment's time unit
    :param substeps: integration substeps per control step
    :param method: ``euler`` or ``rk4``
    :param horizon: control steps per episode
    """

    dt: float = 1.0
    substeps: int = 1
    method: Method = Method.RK4
    horizon: int = 100

    def __post_init__(self):
        self._check_positive("dt")
        for name in ("substeps", "horizon"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigurationError(f"{name} must be an integer >= 1, got {value!r}")
        try:
            object.__setattr__(self, "method", Method(self.method))
        except ValueError:
            raise ConfigurationError(
                f"Unknown integration method {self.method!r}; choose from: {', '.join(m.value for m in Method)}"
            ) from None

    def _check_real(self, name):
        value = getattr(self, name)
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigurationError(f"{name} must be a finite number, got {value!r}")
        return value

    def _check_positive(self, *names):
        for name in names:
            if not self._check_real(name) > 0:
                raise ConfigurationError(f"{name} must be > 0, got {getattr(self, name)!r}")

    def _check_nonnegative(self, *names):
        for name in names:
            if not self._check_real(name) >= 0:
                raise ConfigurationError(f"{name} must be >= 0, got {getattr(self, name)!r}")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], where: str = None):
        return dataclass_from_mapping(cls, mapping, where or cls.__name__)

    def as_dict(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["method"] = self.method.value
        return doc


class StepResult(NamedTuple):
    observation: np.ndarray
    reward: float
    terminated: bool
    truncated: bool
    info: Info


class OdeEnv(gym.Env):
    """
    A compartment environment whose state evolves by a system of ODEs.

    Subclasses provide :meth:`derivative`, :meth:`reward`, :meth:`initial_state` and
    :meth:`action_bounds`. The reward of a step is computed from the pre-step state
    and the applied action. Episodes end by truncation after ``horizon`` steps, or
    terminate early when the integration fails, in which case
    ``info["termination"] == "numerical-failure"`` and ``info["error"]`` explains why.
    """

    metadata = {"render_modes": []}

    name: str = None
    params_class = OdeParams
    state_names: Tuple[str, ...] = ()
    action_names: Tuple[str, ...] = ()
    reward_column = "r"
    info_columns: Tuple[str, ...] = ()
    time_unit_seconds = 1.0
    compartment = ""
    compartment_role = ""

    def __init__(self, params: Optional[Any] = None):
        if params is None:
            params = self.params_class()
        elif isinstance(params, Mapping):
            params = self.params_class.from_mapping(params, where=f"{self.name} parameters")
        elif not isinstance(params, self.params_class):
            raise ConfigurationError(f"{self.name} expects {self.params_class.__name__}, got {type(params).__name__}")

        self.params = params
        self.ode_spec = OdeSpec(len(self.state_names), self.derivative, params.dt, params.substeps, params.method)

        low, high = self.action_bounds()
        self.action_space = spaces.Box(np.asarray(low, dtype=np.float64), np.asarray(high, dtype=np.float64),
                                       dtype=np.float64)
        low, high = self.observation_bounds()
        self.observation_space = spaces.Box(np.asarray(low, dtype=np.float64), np.asarray(high, dtype=np.float64),
                                            dtype=np.float64)

        self._state: Optional[Vector] = None
        self._t = 0.0
        self._steps = 0
        self._done = False

    def __repr__(self):
        return '<%s %s>' % (self.__class__.__name__, self.name)

    def derivative(self, x: Vector, u: Vector, t: float) -> Vector:
        raise NotImplementedError

    def reward(self, x: Vector, u: Vector) -> Tuple[float, Info]:
        """
        Reward of applying ``u`` in state ``x``, and extra info entries.
        """
        raise NotImplementedError

    def initial_state(self, rng: np.random.Generator) -> Vector:
        raise NotImplementedError

    def action_bounds(self) -> Tuple[Vector, Vector]:
        raise NotImplementedError

    def observation_bounds(self) -> Tuple[Vector, Vector]:
        n = len(self.state_names)
        return np.full(n, -np.inf), np.full(n, np.inf)

    def project(self, x: Vector, info: Info) -> Vector:
        """
        Post-integration correction of the state; may record what it did in ``info``.
        """
        return x

    @property
    def max_episode_steps(self) -> int:
        return self.params.horizon

    @property
    def state(self) -> Optional[Vector]:
        return None if self._state is None else self._state.copy()

    @property
    def t(self) -> float:
        return self._t

    @property
    def csv_columns(self) -> Tuple[str, ...]:
        return ("t",) + tuple(self.state_names) + tuple(self.action_names) + (self.reward_column,) + \
            tuple(self.info_columns)

    def trajectory_row(self, t: float, x: Vector, u: Vector, reward: float, info: Info) -> tuple:
        return (t, *x, *u, reward, *(info[c] for c in self.info_columns))

    def reset(self, *, seed: Optional[int] = None, options: Optional[dict] = None):
        super().reset(seed=seed)

        options = dict(options or {})
        unknown = sorted(set(options) - {"state"})
        if unknown:
            raise ConfigurationError("Unknown reset option(s): " + ", ".join(unknown))

        if "state" in options:
            x = np.array(options["state"], dtype=float)
            if x.shape != (self.ode_spec.state_dim,) or not np.all(np.isfinite(x)):
                raise ConfigurationError(f"Initial state must be {self.ode_spec.state_dim} finite values, got {x!r}")
        else:
            x = np.asarray(self.initial_state(self.np_random), dtype=float)

        self._state = x
        self._t = 0.0
        self._steps = 0
        self._done = False

        logger.debug(f"{self.name} reset (seed={seed!r}): {x!r}")

        return self._observe(x), {"state": x.copy(), "t": 0.0, "step": 0}

    def step(self, action) -> StepResult:
        if self._state is None:
            raise EpisodeError("step() called before reset()")
        if self._done:
            raise EpisodeError("step() called after the episode ended; call reset() first")

        requested = np.asarray(action, dtype=float).reshape(self.action_space.shape)
        if not np.all(np.isfinite(requested)):
            raise ValueError(f"Action must be finite, got {requested!r}")

        u = np.clip(requested, self.action_space.low, self.action_space.high)
        clipped = bool(np.any(u != requested))

        x = self._state
        reward, info = self.reward(x, u)
        info.update(action=u, action_clipped=clipped)

        terminated = False
        try:
            x_next = self.project(integrate_step(self.ode_spec, x, u, self._t), info)
        except NumericalError as err:
            logger.warning(f"{self.name} episode terminated at step {self._steps}: {err}")
            x_next = x
            terminated = True
            info.update(termination="numerical-failure", error=str(err))

        self._steps += 1
        self._t = self._steps * self.ode_spec.dt
        self._state = x_next

        truncated = not terminated and self._steps >= self.max_episode_steps
        if truncated:
            info["termination"] = "horizon"
        self._done = terminated or truncated

        info.update(state=x_next.copy(), t=self._t, step=self._steps)

        return StepResult(self._observe(x_next), float(reward), terminated, truncated, info)

    def _observe(self, x: Vector) -> np.ndarray:
        return np.clip(x, self.observation_space.low, self.observation_space.high).astype(np.float64)


class PolicyAction(gym.ActionWrapper):
    """
    Maps policy outputs in ``[-1, 1]`` onto an environment's action box.

    Each component is multiplied by the larger magnitude of its bounds and then
    clipped to ``[low, high]``, with no offset: a zero output applies a zero
    action (clipped into the box), and ``±1`` reaches both ends of the box.

        >>> env = PolicyAction(make_env('incinerator'))
        >>> env.action(np.array([0.0])), env.action(np.array([1.0]))
        (array([0.]), array([50000000.]))
    """

    def __init__(self, env: OdeEnv):
        super().__init__(env)
        low, high = env.action_space.low, env.action_space.high
        if not (np.all(np.isfinite(low)) and np.all(np.isfinite(high))):
            raise ConfigurationError(f"{env.name} has an unbounded action box")

        self.low, self.high = low, high
        self.scale = np.maximum(np.abs(low), np.abs(high))
        self.action_space = spaces.Box(-1.0, 1.0, shape=env.action_space.shape, dtype=np.float64)

    def action(self, action) -> np.ndarray:
        a = np.asarray(action, dtype=float).reshape(self.scale.shape)
        return np.clip(a * self.scale, self.low, self.high)


__all__ = ["OdeParams", "StepResult", "OdeEnv", "PolicyAction"]
