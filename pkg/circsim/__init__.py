"""
A simulator and trainer library for thermodynamical material networks (TMNs).

circsim models a material network as a set of node and arc compartments, computes
its instantaneous circularity from mass ledgers and continuous flows, and ships a
collection of compartment environments written in state-space form (a transport
truck, a waste incinerator and two microalgae photobioreactors) together with
derivative-free trainers for linear controllers.

Note:
    Environments follow the gymnasium interface, so any gymnasium-compatible agent
    can drive them. The bundled trainers (:mod:`circsim.trainers`) are augmented
    random search, a cross-entropy method and a random-policy control.
"""

from enum import IntEnum

__version__ = "0.1.0"


class ExitStatus(IntEnum):

    def __new__(cls, value, phrase, description=''):
        obj = int.__new__(cls, value)
        obj._value_ = value

        obj.phrase = phrase
        obj.description = description
        return obj

    OK = 0, 'OK', 'Command completed'
    USAGE_ERROR = 1, 'Usage Error', 'Bad command line, configuration or input file'
    NUMERICAL_FAILURE = 2, 'Numerical Failure', 'Integration or training diverged'

    @property
    def is_success(self):
        return self.value == 0

    @property
    def is_failure(self):
        return self.value != 0


__all__ = ['ExitStatus']
