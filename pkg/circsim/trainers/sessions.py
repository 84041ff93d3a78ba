"""
circsim.trainers.sessions
~~~~~~~~~~~~~~~~~~~~~~~~~

Rollout sessions: a pool of worker threads, each owning a private environment.
"""
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, NamedTuple, Optional, TypeVar

from ..abc import PolicyAction
from ..exceptions import ConfigurationError
from .models import LinearPolicy, Normalizer

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class Rollout(NamedTuple):
    episode_return: float
    steps: int
    termination: str
    stats: Optional[Normalizer] = None


class RolloutSession:
    """
    Runs episodes of one environment configuration, possibly in parallel.

    Basic Usage::

        >>> from circsim.envs import EnvConfig
        >>> with RolloutSession(EnvConfig('transport-truck'), workers=4) as session:
        ...     session.rollout(LinearPolicy.zeros(1, 2), seed=7)
        Rollout(episode_return=..., steps=400, termination='horizon', stats=None)

    :meth:`map` returns results in input order, whatever the number of workers.
    """

    __attrs__ = [
        "env_config",
        "workers",
    ]

    def __init__(self, env_config, workers: int = 1):
        if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
            raise ConfigurationError(f"workers must be an integer >= 1, got {workers!r}")

        self.env_config = env_config
        self.workers = workers
        self._local = threading.local()
        self._executor = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="rollout") \
            if workers > 1 else None

        env = env_config.make()
        self.obs_dim = env.observation_space.shape[0]
        self.action_dim = env.action_space.shape[0]

    def __repr__(self):
        return '<%s %s workers=%d>' % (self.__class__.__name__, self.env_config.name, self.workers)

    def __enter__(self):
        return self

    def __exit__(self, *args):
        self.close()

    def __getstate__(self):
        return {attr: getattr(self, attr, None) for attr in self.__attrs__}

    def __setstate__(self, state):
        self.__init__(state["env_config"], state["workers"])

    def get_env(self):
        """
        The calling thread's environment, taking policy outputs in ``[-1, 1]``.
        """
        env = getattr(self._local, "env", None)
        if env is None:
            env = PolicyAction(self.env_config.make())
            self._local.env = env
            logger.debug(f"Created {self.env_config.name} for {threading.current_thread().name}")
        return env

    def rollout(self, policy: LinearPolicy, seed: int, collect_stats: bool = False) -> Rollout:
        """
        One episode of ``policy`` from ``env.reset(seed=seed)``.

        The policy and its normalizer are left untouched; with ``collect_stats`` the
        visited observations are returned as a fresh :class:`Normalizer`.
        """
        env = self.get_env()
        stats = Normalizer(self.obs_dim) if collect_stats else None

        obs, _ = env.reset(seed=seed)
        total = 0.0
        steps = 0
        termination = "horizon"

        while True:
            if stats is not None:
                stats.observe(obs)

            obs, reward, terminated, truncated, info = env.step(policy.act(obs))
            total += reward
            steps += 1

            if terminated or truncated:
                termination = info.get("termination", termination)
                break

        return Rollout(total, steps, termination, stats)

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        if self._executor is None:
            return [fn(item) for item in items]
        return list(self._executor.map(fn, items))

    def close(self):
        """
        Shuts the worker pool down.
        """
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None


__all__ = ["Rollout", "RolloutSession"]
