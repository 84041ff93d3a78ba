"""
circsim.trainers.models
~~~~~~~~~~~~~~~~~~~~~~~

This module contains the policies, trainer settings and run records of the
circsim.trainers package.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..exceptions import ConfigurationError
from ..utils import dataclass_from_mapping

#: variances below this are treated as zero when normalizing
VARIANCE_FLOOR = 1e-16


class Normalizer:
    """
    Running mean and variance of observations (Welford), mergeable (Chan et al.).

    ``m2`` is the sum of squared deviations from the mean; the variance is ``m2 / count``.
    """

    def __init__(self, dim: int, count: int = 0, mean=None, m2=None):
        self.dim = int(dim)
        self.count = int(count)
        self.mean = np.zeros(self.dim) if mean is None else np.array(mean, dtype=float)
        self.m2 = np.zeros(self.dim) if m2 is None else np.array(m2, dtype=float)

        if self.mean.shape != (self.dim,) or self.m2.shape != (self.dim,):
            raise ValueError(f"Normalizer moments must have shape ({self.dim},)")
        if self.count < 0 or np.any(self.m2 < 0):
            raise ValueError("Normalizer count and m2 must be non-negative")

    def __repr__(self):
        return '<%s dim=%d count=%d>' % (self.__class__.__name__, self.dim, self.count)

    def __eq__(self, other):
        if not isinstance(other, Normalizer):
            return NotImplemented
        return self.count == other.count and np.array_equal(self.mean, other.mean) and \
            np.array_equal(self.m2, other.m2)

    def observe(self, x) -> None:
        x = np.asarray(x, dtype=float)
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (x - self.mean)

    def merge(self, other: "Normalizer") -> None:
        if other.count == 0:
            return
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean.copy(), other.m2.copy()
            return

        n = self.count + other.count
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (other.count / n)
        self.m2 = self.m2 + other.m2 + delta ** 2 * (self.count * other.count / n)
        self.count = n

    @property
    def var(self) -> np.ndarray:
        if self.count == 0:
            return np.zeros(self.dim)
        return self.m2 / self.count

    @property
    def std(self) -> np.ndarray:
        var = self.var
        return np.where(var < VARIANCE_FLOOR, 1.0, np.sqrt(np.maximum(var, VARIANCE_FLOOR)))

    def normalize(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.std

    def copy(self) -> "Normalizer":
        return Normalizer(self.dim, self.count, self.mean, self.m2)


class LinearPolicy:
    """
    ``a = clip(W normalize(obs) + b, -1, 1)`` in the normalized action box.

    :class:`~circsim.abc.PolicyAction` scales the output by the larger magnitude of
    each action bound and clips it to the box, so the zero policy applies a zero action.
    """

    def __init__(self, weights, bias=None, normalizer: Optional[Normalizer] = None):
        self.weights = np.array(weights, dtype=float, ndmin=2)
        action_dim, obs_dim = self.weights.shape
        self.bias = np.zeros(action_dim) if bias is None else np.array(bias, dtype=float).reshape(action_dim)
        self.normalizer = Normalizer(obs_dim) if normalizer is None else normalizer

        if self.normalizer.dim != obs_dim:
            raise ValueError(f"Normalizer dimension {self.normalizer.dim} does not match {obs_dim} observations")

    def __repr__(self):
        return '<%s %dx%d>' % (self.__class__.__name__, self.action_dim, self.obs_dim)

    @classmethod
    def zeros(cls, action_dim: int, obs_dim: int) -> "LinearPolicy":
        return cls(np.zeros((action_dim, obs_dim)))

    @classmethod
    def from_params(cls, params, normalizer: Optional[Normalizer] = None) -> "LinearPolicy":
        """
        Inverse of :attr:`params`: the last column is the bias.
        """
        params = np.asarray(params, dtype=float)
        return cls(params[:, :-1], params[:, -1], normalizer)

    @property
    def action_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def params(self) -> np.ndarray:
        return np.hstack([self.weights, self.bias[:, None]])

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias)))

    def act(self, obs) -> np.ndarray:
        return np.clip(self.weights @ self.normalizer.normalize(obs) + self.bias, -1.0, 1.0)

    def copy(self) -> "LinearPolicy":
        return LinearPolicy(self.weights.copy(), self.bias.copy(), self.normalizer.copy())


def _check_int(cfg, name, minimum):
    value = getattr(cfg, name)
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigurationError(f"{name} must be an integer >= {minimum}, got {value!r}")


def _check_real(cfg, name, low=None, strict=True):
    value = getattr(cfg, name)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigurationError(f"{name} must be a finite number, got {value!r}")
    if low is not None and (value <= low if strict else value < low):
        raise ConfigurationError(f"{name} must be {'>' if strict else '>='} {low}, got {value!r}")


@dataclass(frozen=True)
class TrainerConfig:
    """
    :param iterations: training iterations (0 only evaluates the initial policy)
    :param eval_every: evaluate the current policy every so many iterations
    :param n_eval_episodes: episodes averaged by each evaluation
    :param seed: master seed of every random draw of the run
    """

    iterations: int = 100
    eval_every: int = 10
    n_eval_episodes: int = 100
    seed: int = 0

    def __post_init__(self):
        _check_int(self, "iterations", 0)
        _check_int(self, "eval_every", 1)
        _check_int(self, "n_eval_episodes", 1)
        _check_int(self, "seed", 0)

    @classmethod
    def from_mapping(cls, mapping, where: str = None):
        return dataclass_from_mapping(cls, mapping, where or cls.__name__)

    def as_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


@dataclass(frozen=True)
class ArsConfig(TrainerConfig):
    """
    Augmented random search.

    :param step_size: learning rate ``alpha``
    :param n_directions: random directions ``N`` per iteration
    :param top_directions: directions ``b <= N`` kept for the update
    :param noise_std: exploration noise ``nu``
    """

    step_size: float = 0.02
    n_directions: int = 8
    top_directions: int = 4
    noise_std: float = 0.03

    def __post_init__(self):
        super().__post_init__()
        _check_real(self, "step_size", 0)
        _check_real(self, "noise_std", 0)
        _check_int(self, "n_directions", 1)
        _check_int(self, "top_directions", 1)
        if self.top_directions > self.n_directions:
            raise ConfigurationError(
                f"top_directions ({self.top_directions}) exceeds n_directions ({self.n_directions})"
            )


@dataclass(frozen=True)
class CemConfig(TrainerConfig):
    """
    Cross-entropy method over a diagonal Gaussian of policy parameters.
    """

    population: int = 32
    elite_frac: float = 0.25
    init_std: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        _check_int(self, "population", 1)
        _check_real(self, "init_std", 0, strict=False)
        _check_real(self, "elite_frac", 0)
        if self.elite_frac > 1:
            raise ConfigurationError(f"elite_frac must lie in (0, 1], got {self.elite_frac!r}")
        if self.n_elite < 1:
            raise ConfigurationError(
                f"elite_frac={self.elite_frac!r} of population={self.population} selects no elite sample"
            )

    @property
    def n_elite(self) -> int:
        return int(self.elite_frac * self.population)


@dataclass(frozen=True)
class RandomSearchConfig(TrainerConfig):
    """
    Random-policy control: independent Gaussian policies, the best one kept.
    """

    population: int = 32
    std: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        _check_int(self, "population", 1)
        _check_real(self, "std", 0, strict=False)


def zeta(r_s: float, r_e: float) -> float:
    """Training improvement: mean return at the end minus mean return at the start."""
    return r_e - r_s


@dataclass(frozen=True)
class EvalReport:
    r_s: float
    r_e: float
    zeta: float
    n_eval_episodes: int
    wall_time: float

    @classmethod
    def from_returns(cls, r_s: float, r_e: float, n_eval_episodes: int, wall_time: float) -> "EvalReport":
        return cls(float(r_s), float(r_e), zeta(float(r_s), float(r_e)), n_eval_episodes, wall_time)

    def as_dict(self) -> dict:
        return {
            "r_s": self.r_s, "r_e": self.r_e, "zeta": self.zeta,
            "n_eval_episodes": self.n_eval_episodes, "wall_time": self.wall_time,
        }


@dataclass(frozen=True)
class IterationRecord:
    """
    One training iteration. ``eval_return`` is NaN when the iteration was not evaluated.
    """

    iteration: int
    mean_return: float
    eval_return: float
    env_steps: int
    wall_time: float = field(default=0.0, compare=False)

    def row(self) -> tuple:
        return self.iteration, self.mean_return, self.eval_return, self.env_steps


HISTORY_COLUMNS = ("iteration", "mean_return", "eval_return", "env_steps")
TIMING_COLUMNS = ("iteration", "wall_time")


@dataclass(frozen=True, eq=False)
class TrainRun:
    trainer: str
    env: Any
    config: TrainerConfig
    history: Tuple[IterationRecord, ...]
    policy: LinearPolicy
    report: EvalReport

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def mean_returns(self) -> np.ndarray:
        return np.array([h.mean_return for h in self.history])

    def history_rows(self):
        return [h.row() for h in self.history]

    def timing_rows(self):
        return [(h.iteration, h.wall_time) for h in self.history]

    def as_dict(self) -> Dict[str, Any]:
        doc = self.report.as_dict()
        doc.update(trainer=self.trainer, seed=self.seed, iterations=len(self.history),
                   env=self.env.as_dict(), trainer_config=self.config.as_dict())
        return doc


__all__ = [
    "VARIANCE_FLOOR", "Normalizer", "LinearPolicy", "TrainerConfig", "ArsConfig", "CemConfig",
    "RandomSearchConfig", "zeta", "EvalReport", "IterationRecord", "HISTORY_COLUMNS", "TIMING_COLUMNS", "TrainRun"
]
