"""
Fixed-step ODE integration and step-size verification.

Environments advance their state with :func:`integrate_step`: ``substeps`` equal
Euler or classical Runge-Kutta substeps per control step, the action held
constant over the step. :func:`verify_step_size` compares such a trajectory with
an adaptive high-order reference (scipy's ``DOP853`` at tight tolerance),
restarted at every action change so the zero-order hold is reproduced exactly.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .exceptions import ConfigurationError, IntegrationDivergence, NumericalError, ReferenceIntegrationError
from .typing import ActionSchedule, Derivative, Vector, VectorLike

logger = logging.getLogger(__name__)

#: floor of the per-state scale in the relative deviation
DEVIATION_FLOOR = 1e-12


class Method(str, Enum):
    EULER = "euler"
    RK4 = "rk4"


@dataclass(frozen=True)
class OdeSpec:
    """
    A state-space system ``dx/dt = derivative(x, u, t)`` and how to integrate it.

    :param state_dim: length of the state vector
    :param derivative: right-hand side, called as ``derivative(x, u, t)``
    :param dt: control step (time units of the system)
    :param substeps: integration substeps per control step
    :param method: ``euler`` or ``rk4``
    """

    state_dim: int
    derivative: Derivative = field(compare=False)
    dt: float
    substeps: int = 1
    method: Method = Method.RK4

    def __post_init__(self):
        if isinstance(self.state_dim, bool) or not isinstance(self.state_dim, int) or self.state_dim < 1:
            raise ConfigurationError(f"state_dim must be a positive integer, got {self.state_dim!r}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError(f"dt must be finite and > 0, got {self.dt!r}")
        if isinstance(self.substeps, bool) or not isinstance(self.substeps, int) or self.substeps < 1:
            raise ConfigurationError(f"substeps must be an integer >= 1, got {self.substeps!r}")
        try:
            object.__setattr__(self, "method", Method(self.method))
        except ValueError:
            raise ConfigurationError(
                f"Unknown integration method {self.method!r}; choose from: {', '.join(m.value for m in Method)}"
            ) from None


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    States at the control instants ``times`` and the actions held in between.

    ``states`` has one row more than ``actions``.
    """

    times: np.ndarray
    states: np.ndarray
    actions: np.ndarray

    @property
    def n_steps(self) -> int:
        return len(self.actions)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


@dataclass(frozen=True, eq=False)
class VerificationReport:
    """
    Outcome of :func:`verify_step_size`.

    ``deviations[i]`` is the largest deviation of state ``i`` from the reference over
    the horizon, relative to the largest magnitude the reference reaches. ``error``
    holds the reason when the fixed-step run itself failed.
    """

    passed: bool
    deviations: np.ndarray
    rel_tol: float
    dt: float
    substeps: int
    method: Method
    horizon: float
    n_steps: int
    error: Optional[str] = None

    @property
    def worst_state(self) -> int:
        return int(np.argmax(self.deviations))

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "deviations": [float(d) for d in self.deviations],
            "max_deviation": float(np.max(self.deviations)),
            "worst_state": self.worst_state,
            "rel_tol": self.rel_tol,
            "dt": self.dt,
            "substeps": self.substeps,
            "method": self.method.value,
            "horizon": self.horizon,
            "n_steps": self.n_steps,
            "error": self.error,
        }


def integrate_step(spec: OdeSpec, x: VectorLike, u: VectorLike, t: float = 0.0) -> Vector:
    """
    Advance ``x`` by one control step ``spec.dt`` with the action ``u`` held constant.

    :raises IntegrationDivergence: when a substep produces a non-finite component;
        ``substep`` is the 1-based index of the offending substep
    """
    x = np.array(x, dtype=float)
    u = np.asarray(u, dtype=float)

    if x.shape != (spec.state_dim,):
        raise ConfigurationError(f"State must have shape ({spec.state_dim},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise IntegrationDivergence(0, t)

    f = spec.derivative
    h = spec.dt / spec.substeps

    with np.errstate(all="ignore"):
        for n in range(1, spec.substeps + 1):
            tn = t + (n - 1) * h

            if spec.method is Method.EULER:
                x = x + h * f(x, u, tn)
            else:
                k1 = f(x, u, tn)
                k2 = f(x + 0.5 * h * k1, u, tn + 0.5 * h)
                k3 = f(x + 0.5 * h * k2, u, tn + 0.5 * h)
                k4 = f(x + h * k3, u, tn + h)
                x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

            if not np.all(np.isfinite(x)):
                raise IntegrationDivergence(n, tn + h)

    return x


def _n_steps(spec: OdeSpec, horizon: float) -> int:
    if not (math.isfinite(horizon) and horizon > 0):
        raise ConfigurationError(f"horizon must be finite and > 0, got {horizon!r}")
    n_steps = round(horizon / spec.dt)
    if n_steps < 1 or abs(n_steps * spec.dt - horizon) > 1e-9 * horizon:
        raise ConfigurationError(f"horizon {horizon!r} is not a whole number of steps of dt={spec.dt!r}")
    return n_steps


def _actions(spec: OdeSpec, action_schedule: ActionSchedule, n_steps: int, t0: float) -> np.ndarray:
    return np.array(
        [np.atleast_1d(np.asarray(action_schedule(t0 + k * spec.dt), dtype=float)) for k in range(n_steps)]
    )


def simulate(spec: OdeSpec, x0: VectorLike, action_schedule: ActionSchedule, horizon: float,
             t0: float = 0.0) -> Trajectory:
    """
    Fixed-step trajectory over ``horizon``, the action sampled from ``action_schedule``
    at the start of every control step.
    """
    n_steps = _n_steps(spec, horizon)
    actions = _actions(spec, action_schedule, n_steps, t0)

    states = np.empty((n_steps + 1, spec.state_dim))
    states[0] = x0
    for k in range(n_steps):
        states[k + 1] = integrate_step(spec, states[k], actions[k], t0 + k * spec.dt)

    return Trajectory(t0 + spec.dt * np.arange(n_steps + 1), states, actions)


def reference_trajectory(spec: OdeSpec, x0: VectorLike, action_schedule: ActionSchedule, horizon: float,
                         t0: float = 0.0, rtol: float = 1e-9, atol: float = 1e-12) -> Trajectory:
    """
    The trajectory of :func:`simulate` computed with an adaptive ``DOP853`` integrator.

    Runs of equal consecutive actions are integrated in one call and sampled at the
    control instants; the integrator restarts wherever the action changes.

    :raises ReferenceIntegrationError: if the adaptive integrator fails
    """
    n_steps = _n_steps(spec, horizon)
    actions = _actions(spec, action_schedule, n_steps, t0)
    times = t0 + spec.dt * np.arange(n_steps + 1)

    states = np.empty((n_steps + 1, spec.state_dim))
    states[0] = x0

    start = 0
    while start < n_steps:
        stop = start + 1
        while stop < n_steps and np.array_equal(actions[stop], actions[start]):
            stop += 1

        u = actions[start]
        span = times[start:stop + 1]

        try:
            sol = solve_ivp(
                lambda t, x: spec.derivative(x, u, t), (span[0], span[-1]), states[start],
                method="DOP853", t_eval=span, rtol=rtol, atol=atol,
            )
        except NumericalError as err:
            raise ReferenceIntegrationError(f"Reference integration failed at t={span[0]!r}: {err}") from err

        if not sol.success or sol.y.shape[1] != len(span) or not np.all(np.isfinite(sol.y)):
            raise ReferenceIntegrationError(f"Reference integration failed at t={span[0]!r}: {sol.message}")

        states[start + 1:stop + 1] = sol.y[:, 1:].T
        start = stop

    return Trajectory(times, states, actions)


def relative_deviations(states: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """
    Per state: ``max_t |x - x_ref| / max(max_t |x_ref|, 1e-12)``.
    """
    scale = np.maximum(np.max(np.abs(reference), axis=0), DEVIATION_FLOOR)
    return np.max(np.abs(states - reference), axis=0) / scale


def verify_step_size(spec: OdeSpec, x0: VectorLike, action_schedule: ActionSchedule, horizon: float,
                     rel_tol: float, reference_rtol: float = 1e-9) -> VerificationReport:
    """
    Check that ``spec``'s fixed-step integration tracks the adaptive reference within ``rel_tol``.

    A failing fixed-step run (divergence, thermal-mass underflow) is reported as a
    failed verification; a failing reference run raises.

    :param spec: the system and the step settings under test
    :param x0: initial state
    :param action_schedule: action as a function of time, held over each control step
    :param horizon: simulated time, a whole number of control steps
    :param rel_tol: largest accepted relative deviation per state
    :raises ConfigurationError: if ``horizon`` is not a multiple of ``spec.dt``
    :raises ReferenceIntegrationError: if the reference integrator fails
    """
    if not rel_tol > 0:
        raise ConfigurationError(f"rel_tol must be > 0, got {rel_tol!r}")

    n_steps = _n_steps(spec, horizon)
    reference = reference_trajectory(spec, x0, action_schedule, horizon, rtol=reference_rtol)

    error = None
    try:
        fixed = simulate(spec, x0, action_schedule, horizon)
        with np.errstate(all="ignore"):
            deviations = relative_deviations(fixed.states, reference.states)
    except NumericalError as err:
        error = str(err)
        deviations = np.full(spec.state_dim, np.inf)

    passed = error is None and bool(np.all(deviations <= rel_tol))

    logger.info(
        f"Step-size verification {'passed' if passed else 'FAILED'}: dt={spec.dt!r} substeps={spec.substeps} "
        f"method={spec.method.value} max deviation={float(np.max(deviations)):.3e} (rel_tol={rel_tol!r})"
    )

    return VerificationReport(passed, deviations, float(rel_tol), spec.dt, spec.substeps, spec.method,
                              float(horizon), n_steps, error)


def observed_order(errors: Sequence[float], ratio: float = 2.0) -> np.ndarray:
    """
    Convergence exponents between successive errors obtained with steps divided by ``ratio``.
    """
    errors = np.asarray(errors, dtype=float)
    if errors.ndim != 1 or errors.size < 2:
        raise ConfigurationError("At least two errors are needed to measure an order")
    return np.log(errors[:-1] / errors[1:]) / np.log(ratio)


def constant_schedule(action: VectorLike) -> ActionSchedule:
    action = np.atleast_1d(np.asarray(action, dtype=float))
    return lambda t: action


__all__ = [
    "Method", "OdeSpec", "Trajectory", "VerificationReport", "integrate_step", "simulate", "reference_trajectory",
    "relative_deviations", "verify_step_size", "observed_order", "constant_schedule", "DEVIATION_FLOOR"
]
