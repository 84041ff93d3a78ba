"""
circsim.trainers.exceptions
~~~~~~~~~~~~~~~~~~~~~~~~~~~

This module contains the exceptions in the circsim.trainers package.
"""
from ..exceptions import CircsimException, NumericalError


class TrainerError(CircsimException):
    """
    Ambiguous trainer exception.
    """

    def __init__(self, *args, **kwargs):
        self.iteration = kwargs.pop('iteration', None)
        self.history = tuple(kwargs.pop('history', ()))
        super().__init__(*args, **kwargs)


class PolicyDivergence(TrainerError, NumericalError):
    """
    The policy parameters became non-finite; ``history`` holds the iterations completed before.
    """
    pass


class MalformedPolicyRecord(TrainerError, ValueError):
    """
    A policy record is not valid JSON, misses keys or holds non-finite numbers.
    """
    pass


__all__ = ["TrainerError", "PolicyDivergence", "MalformedPolicyRecord"]
