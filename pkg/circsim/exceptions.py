"""
circsim.exceptions
~~~~~~~~~~~~~~~~~~

This module contains the exceptions raised across the circsim package.
"""


class CircsimException(Exception):
    """
    Ambiguous circsim exception.
    """
    pass


class ConfigurationError(CircsimException, ValueError):
    """
    A parameter block, configuration file or input file is invalid.
    """

    def __init__(self, *args, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        super().__init__(*args)

    def __str__(self):
        msg = super().__str__()
        if self.path is not None and self.lineno is not None:
            return f"{self.path}:{self.lineno}: {msg}"
        if self.path is not None:
            return f"{self.path}: {msg}"
        return msg


class UnknownEnvironment(ConfigurationError):
    """
    The environment name is not registered.
    """

    def __init__(self, name, valid_names):
        self.name = name
        self.valid_names = tuple(valid_names)
        super().__init__(f"Unknown environment {name!r}; valid names: {', '.join(self.valid_names)}")


class InvalidNetwork(CircsimException, ValueError):
    """
    An operation needs a valid material network and got an invalid one.
    """

    def __init__(self, message, violations=()):
        self.violations = tuple(violations)
        super().__init__(message)


class UnknownCompartment(InvalidNetwork):
    """
    A ledger event or flow references a compartment absent from the network.
    """

    def __init__(self, k):
        self.k = k
        super().__init__(f"Compartment k={k} is not part of the network")


class NumericalError(CircsimException, ArithmeticError):
    """
    A numerical procedure failed.
    """
    pass


class IntegrationDivergence(NumericalError):
    """
    The fixed-step integrator produced a non-finite state.
    """

    def __init__(self, substep, t=None):
        self.substep = substep
        self.t = t
        super().__init__(f"Integration diverged at substep {substep}" + ("" if t is None else f" (t={t!r})"))


class ThermalMassUnderflow(NumericalError):
    """
    A thermal-mass denominator fell below its guard value.
    """

    def __init__(self, which, value, guard):
        self.which = which
        self.value = value
        self.guard = guard
        super().__init__(f"Thermal mass of the {which} is {value!r}, below the guard {guard!r}")


class ReferenceIntegrationError(NumericalError):
    """
    The adaptive reference integrator failed.
    """
    pass


class EpisodeError(CircsimException, RuntimeError):
    """
    The environment contract was violated (step before reset, step after the episode ended).
    """
    pass


__all__ = [
    "CircsimException", "ConfigurationError", "UnknownEnvironment", "InvalidNetwork", "UnknownCompartment",
    "NumericalError", "IntegrationDivergence", "ThermalMassUnderflow", "ReferenceIntegrationError", "EpisodeError"
]
