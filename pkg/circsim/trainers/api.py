"""
circsim.trainers.api
~~~~~~~~~~~~~~~~~~~~

This module implements the trainers and the evaluation harness.

Basic usage::

    >>> from circsim.envs import EnvConfig
    >>> from circsim import trainers
    >>> run = trainers.ars_train(EnvConfig('transport-truck'), trainers.ArsConfig(iterations=50))
    >>> run.report.zeta > 0
    True
"""
import json
import logging
import math
import time
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Type

import numpy as np

from ..utils import format_float, parse_float
from ._internal_utils import Stream, derive_rng, derive_seed
from .exceptions import MalformedPolicyRecord, PolicyDivergence
from .models import (
    ArsConfig, CemConfig, EvalReport, IterationRecord, LinearPolicy, Normalizer, RandomSearchConfig, TrainerConfig,
    TrainRun
)
from .sessions import RolloutSession

logger = logging.getLogger(__name__)

#: ARS return spreads below this are replaced by 1
SIGMA_FLOOR = 1e-8

POLICY_FORMAT = "circsim-linear-policy"
POLICY_VERSION = 1


def _evaluate(session: RolloutSession, policy: LinearPolicy, n_episodes: int, seed: int) -> float:
    seeds = [derive_seed(seed, Stream.EVALUATION, i) for i in range(n_episodes)]
    rollouts = session.map(lambda s: session.rollout(policy, s), seeds)
    return math.fsum(r.episode_return for r in rollouts) / n_episodes


def evaluate(policy: LinearPolicy, env_config, n_episodes: int, seed: int, workers: int = 1) -> float:
    """
    Mean return of ``policy`` over ``n_episodes`` episodes.

    Actions are deterministic and the normalizer is frozen; episode reset seeds are
    derived from ``seed``, so equal seeds give equal means.

    :param policy: the linear policy to evaluate
    :param env_config: :class:`circsim.envs.EnvConfig` of the environment
    :param n_episodes: number of episodes to average
    :param seed: evaluation seed
    :param workers: worker threads
    """
    if isinstance(n_episodes, bool) or not isinstance(n_episodes, int) or n_episodes < 1:
        raise ValueError(f"n_episodes must be an integer >= 1, got {n_episodes!r}")

    with RolloutSession(env_config, workers) as session:
        return _evaluate(session, policy, n_episodes, seed)


def ars_update(params: np.ndarray, deltas: np.ndarray, r_plus: Sequence[float], r_minus: Sequence[float],
               step_size: float, top_directions: int) -> np.ndarray:
    """
    One augmented random search step.

    Directions are ranked by ``max(r+, r-)``; the best ``top_directions`` move the
    parameters by ``step_size / (b * sigma_R) * sum((r+ - r-) * delta)``, where
    ``sigma_R`` is the standard deviation of the ``2b`` selected returns (1 if
    below :data:`SIGMA_FLOOR`).

    :param params: current parameters
    :param deltas: one direction per row, shaped ``(N, *params.shape)``
    """
    r_plus = np.asarray(r_plus, dtype=float)
    r_minus = np.asarray(r_minus, dtype=float)

    top = np.argsort(-np.maximum(r_plus, r_minus), kind="stable")[:top_directions]

    sigma = float(np.std(np.concatenate([r_plus[top], r_minus[top]])))
    if not sigma >= SIGMA_FLOOR:
        sigma = 1.0

    step = np.tensordot(r_plus[top] - r_minus[top], deltas[top], axes=1)
    return params + step_size / (top_directions * sigma) * step


def cem_refit(samples: np.ndarray, returns: Sequence[float], n_elite: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Mean and standard deviation of the ``n_elite`` best samples.

    :return: ``(mean, std)`` shaped like one sample
    """
    returns = np.asarray(returns, dtype=float)
    elite = np.sort(np.argsort(-returns, kind="stable")[:n_elite])
    return samples[elite].mean(axis=0), samples[elite].std(axis=0)


class _Job(NamedTuple):
    params: np.ndarray
    seed: int


def _rollouts(session: RolloutSession, jobs: List[_Job], snapshot: Normalizer):
    return session.map(
        lambda job: session.rollout(LinearPolicy.from_params(job.params, snapshot), job.seed, collect_stats=True),
        jobs,
    )


class _Trainer:
    """
    Bookkeeping shared by the trainers: evaluations, history, timing and divergence.
    """

    name = None

    def __init__(self, env_config, cfg: TrainerConfig, workers: int = 1):
        self.env_config = env_config
        self.cfg = cfg
        self.workers = workers
        self.history: List[IterationRecord] = []
        self.env_steps = 0

    def run(self) -> TrainRun:
        start = time.perf_counter()

        logger.info(f"Training {self.name} on {self.env_config.name}: {self.cfg.iterations} iterations, "
                    f"seed {self.cfg.seed}, {self.workers} worker(s)")

        with RolloutSession(self.env_config, self.workers) as session:
            self.session = session
            policy = LinearPolicy.zeros(session.action_dim, session.obs_dim)
            r_s = self.evaluate(policy)

            self.setup(policy)

            for it in range(1, self.cfg.iterations + 1):
                mean_return, policy = self.iterate(it)

                eval_return = math.nan
                if it % self.cfg.eval_every == 0:
                    eval_return = self.evaluate(policy)
                    logger.info(f"{self.name} iteration {it}: mean return {mean_return:.6g}, "
                                f"evaluation {eval_return:.6g}")

                self.history.append(IterationRecord(it, mean_return, eval_return, self.env_steps,
                                                    time.perf_counter() - start))

            policy = self.final_policy(policy)
            r_e = self.evaluate(policy)

        report = EvalReport.from_returns(r_s, r_e, self.cfg.n_eval_episodes, time.perf_counter() - start)
        logger.info(f"{self.name} finished: r_s={r_s:.6g} r_e={r_e:.6g} zeta={report.zeta:.6g}")

        return TrainRun(self.name, self.env_config, self.cfg, tuple(self.history), policy, report)

    def evaluate(self, policy: LinearPolicy) -> float:
        return _evaluate(self.session, policy, self.cfg.n_eval_episodes, self.cfg.seed)

    def check(self, it: int, params: np.ndarray):
        if not np.all(np.isfinite(params)):
            raise PolicyDivergence(f"{self.name} policy parameters diverged at iteration {it}",
                                   iteration=it, history=self.history)

    def setup(self, policy: LinearPolicy):
        raise NotImplementedError

    def iterate(self, it: int) -> Tuple[float, LinearPolicy]:
        raise NotImplementedError

    def final_policy(self, policy: LinearPolicy) -> LinearPolicy:
        return policy


class _Ars(_Trainer):
    name = "ars"

    def setup(self, policy):
        self.policy = policy

    def iterate(self, it):
        cfg = self.cfg
        params = self.policy.params
        normalizer = self.policy.normalizer
        snapshot = normalizer.copy()

        deltas = derive_rng(cfg.seed, Stream.DIRECTIONS, it).standard_normal((cfg.n_directions, *params.shape))
        seeds = [derive_seed(cfg.seed, Stream.ROLLOUT, it, k) for k in range(cfg.n_directions)]

        jobs = []
        for delta, seed in zip(deltas, seeds):
            jobs.append(_Job(params + cfg.noise_std * delta, seed))
            jobs.append(_Job(params - cfg.noise_std * delta, seed))

        results = _rollouts(self.session, jobs, snapshot)

        for r in results:
            normalizer.merge(r.stats)
            self.env_steps += r.steps

        returns = np.array([r.episode_return for r in results])
        new_params = ars_update(params, deltas, returns[0::2], returns[1::2], cfg.step_size, cfg.top_directions)
        self.check(it, new_params)

        self.policy = LinearPolicy.from_params(new_params, normalizer)
        return math.fsum(returns) / len(returns), self.policy


class _Population(_Trainer):
    """
    Trainers evaluating a Gaussian population of parameters with one episode each,
    all members of an iteration sharing the reset seed. Keeps the best member seen.
    """

    def setup(self, policy):
        self.normalizer = policy.normalizer
        self.shape = policy.params.shape
        self.best: Optional[Tuple[float, LinearPolicy]] = None

    def distribution(self) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def refit(self, samples, returns):
        pass

    def iterate(self, it):
        cfg = self.cfg
        mean, std = self.distribution()
        snapshot = self.normalizer.copy()

        noise = derive_rng(cfg.seed, Stream.POPULATION, it).standard_normal((cfg.population, *self.shape))
        samples = mean + std * noise
        self.check(it, samples)

        seed = derive_seed(cfg.seed, Stream.ROLLOUT, it)
        results = _rollouts(self.session, [_Job(s, seed) for s in samples], snapshot)

        for r in results:
            self.normalizer.merge(r.stats)
            self.env_steps += r.steps

        returns = np.array([r.episode_return for r in results])
        k = int(np.argmax(returns))
        if self.best is None or returns[k] > self.best[0]:
            self.best = (float(returns[k]), LinearPolicy.from_params(samples[k], snapshot))

        self.refit(samples, returns)
        return math.fsum(returns) / len(returns), self.best[1]

    def final_policy(self, policy):
        return policy if self.best is None else self.best[1]


class _Cem(_Population):
    name = "cem"

    def setup(self, policy):
        super().setup(policy)
        self.mean = np.zeros(self.shape)
        self.std = np.full(self.shape, float(self.cfg.init_std))

    def distribution(self):
        return self.mean, self.std

    def refit(self, samples, returns):
        self.mean, self.std = cem_refit(samples, returns, self.cfg.n_elite)


class _RandomSearch(_Population):
    name = "random"

    def distribution(self):
        return np.zeros(self.shape), np.full(self.shape, float(self.cfg.std))


def ars_train(env_config, cfg: ArsConfig, workers: int = 1) -> TrainRun:
    """
    Train a linear policy with augmented random search.

    Each iteration rolls out ``W + nu * delta_k`` and ``W - nu * delta_k`` for
    ``n_directions`` Gaussian directions (both signs from the same reset seed), with
    observations normalized by the statistics gathered up to the iteration start.
    The statistics of the iteration are merged afterwards in direction order, so the
    run is identical for any number of ``workers``.

    :raises PolicyDivergence: if the parameters become non-finite
    """
    return _Ars(env_config, cfg, workers).run()


def cem_train(env_config, cfg: CemConfig, workers: int = 1) -> TrainRun:
    """
    Train a linear policy with the cross-entropy method; returns the best sample seen.

    :raises PolicyDivergence: if the sampled parameters become non-finite
    """
    return _Cem(env_config, cfg, workers).run()


def random_search_train(env_config, cfg: RandomSearchConfig, workers: int = 1) -> TrainRun:
    """
    Random-policy control: sample independent policies, keep the best one.
    """
    return _RandomSearch(env_config, cfg, workers).run()


class TrainerEntry(NamedTuple):
    config_class: Type[TrainerConfig]
    train: Callable[..., TrainRun]


TRAINERS: Dict[str, TrainerEntry] = {
    "ars": TrainerEntry(ArsConfig, ars_train),
    "cem": TrainerEntry(CemConfig, cem_train),
    "random": TrainerEntry(RandomSearchConfig, random_search_train),
}


def save_policy(policy: LinearPolicy) -> str:
    """
    The policy as a JSON record; every number is decimal text with 17 significant digits.
    """
    n = policy.normalizer
    record = {
        "format": POLICY_FORMAT,
        "version": POLICY_VERSION,
        "action_dim": policy.action_dim,
        "obs_dim": policy.obs_dim,
        "weights": [[format_float(w) for w in row] for row in policy.weights],
        "bias": [format_float(b) for b in policy.bias],
        "normalizer": {
            "count": n.count,
            "mean": [format_float(v) for v in n.mean],
            "m2": [format_float(v) for v in n.m2],
        },
    }
    return json.dumps(record, indent=2, sort_keys=True) + "\n"


def load_policy(record: str) -> LinearPolicy:
    """
    Parse a record written by :func:`save_policy`.

    :raises MalformedPolicyRecord: if the record is not valid
    """
    try:
        doc = json.loads(record)
    except json.JSONDecodeError as jde:
        raise MalformedPolicyRecord(f"Policy record is not JSON (line {jde.lineno}): {jde.msg}") from jde

    if not isinstance(doc, dict):
        raise MalformedPolicyRecord("Policy record must be an object")

    missing_keys = [k for k in ("format", "version", "action_dim", "obs_dim", "weights", "bias", "normalizer")
                    if k not in doc]
    if missing_keys:
        raise MalformedPolicyRecord("Keys missing from policy record: " + ", ".join(missing_keys))

    if doc["format"] != POLICY_FORMAT or doc["version"] != POLICY_VERSION:
        raise MalformedPolicyRecord(f"Unsupported policy record {doc['format']!r} version {doc['version']!r}")

    norm = doc["normalizer"]
    if not isinstance(norm, dict) or any(k not in norm for k in ("count", "mean", "m2")):
        raise MalformedPolicyRecord("Keys missing from policy normalizer: count, mean, m2")

    try:
        weights = np.array([[parse_float(w, "weight") for w in row] for row in doc["weights"]], dtype=float)
        bias = np.array([parse_float(b, "bias") for b in doc["bias"]], dtype=float)
        mean = np.array([parse_float(v, "mean") for v in norm["mean"]], dtype=float)
        m2 = np.array([parse_float(v, "m2") for v in norm["m2"]], dtype=float)
    except (TypeError, ValueError) as err:
        raise MalformedPolicyRecord(f"Invalid number in policy record: {err}") from err

    action_dim, obs_dim = doc["action_dim"], doc["obs_dim"]
    if weights.shape != (action_dim, obs_dim) or bias.shape != (action_dim,):
        raise MalformedPolicyRecord(f"Policy record shapes do not match {action_dim}x{obs_dim}")

    count = norm["count"]
    if isinstance(count, bool) or not isinstance(count, int):
        raise MalformedPolicyRecord(f"Normalizer count must be an integer, got {count!r}")

    try:
        normalizer = Normalizer(obs_dim, count, mean, m2)
    except ValueError as err:
        raise MalformedPolicyRecord(str(err)) from err

    return LinearPolicy(weights, bias, normalizer)


def write_policy(path, policy: LinearPolicy):
    with open(path, "w") as fp:
        fp.write(save_policy(policy))


def read_policy(path) -> LinearPolicy:
    with open(path) as fp:
        return load_policy(fp.read())


__all__ = [
    "SIGMA_FLOOR", "evaluate", "ars_update", "cem_refit", "ars_train", "cem_train", "random_search_train",
    "TrainerEntry", "TRAINERS", "save_policy", "load_policy", "write_policy", "read_policy"
]
