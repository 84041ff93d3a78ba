"""
Derivative-free trainers for linear policies.

Basic usage:

    >>> from circsim.envs import EnvConfig
    >>> from circsim import trainers
    >>> run = trainers.ars_train(EnvConfig('co2-microalgae-monod'), trainers.ArsConfig(iterations=20))
    >>> run.report.zeta == run.report.r_e - run.report.r_s
    True
"""

from .api import (
    SIGMA_FLOOR, TRAINERS, TrainerEntry, ars_train, ars_update, cem_refit, cem_train, evaluate, load_policy,
    random_search_train, read_policy, save_policy, write_policy
)
from .exceptions import MalformedPolicyRecord, PolicyDivergence, TrainerError
from .models import (
    HISTORY_COLUMNS, TIMING_COLUMNS, ArsConfig, CemConfig, EvalReport, IterationRecord, LinearPolicy, Normalizer,
    RandomSearchConfig, TrainerConfig, TrainRun, zeta
)
from .sessions import Rollout, RolloutSession
