"""
Instantaneous circularity of a material network.

``lambda(N; t) = -(m_fb(t) + delta * mdot_fc(t))`` where ``m_fb`` is the net
finite-time sustainable mass moved in batches up to ``t`` and ``mdot_fc`` the net
finite-time sustainable flow moved continuously at ``t``. Zero is the maximum.

Net contribution of a batch or a flow between two compartments:

- +1 if it exits a nonrenewable reservoir,
- +1 if it enters a landfill, an incinerator or the natural environment,
- -1 if it exits the natural environment (removal, e.g. carbon uptake).

File formats
------------
Event log: one ``time,mass,from_k,to_k`` record per line, an optional
``time,mass,from,to`` header, ``#`` comments.

Flow file: a ``flow,from_k,to_k`` header line starts each flow and is followed by
``time,rate`` samples with strictly increasing times.
"""
import csv
import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, List, Sequence, Tuple

import numpy as np

from .exceptions import ConfigurationError, InvalidNetwork
from .network import Direction, Role, Tmn, is_finite_time_sustainable, validate_tmn
from .utils import read_csv_columns, write_csv

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FlowEvent:
    """A batch of ``mass`` kg moved from compartment ``source`` to ``target`` (ids ``k``) at ``time``."""

    time: float
    mass: float
    source: int
    target: int

    def __post_init__(self):
        if not (math.isfinite(self.time) and self.time >= 0):
            raise ConfigurationError(f"Event time must be finite and >= 0, got {self.time!r}")
        if not (math.isfinite(self.mass) and self.mass > 0):
            raise ConfigurationError(f"Event mass must be finite and > 0, got {self.mass!r}")


@dataclass(frozen=True, eq=False)
class ContinuousFlow:
    """
    A continuous flow from ``source`` to ``target`` sampled as ``rates`` (kg/s) at ``times`` (s).

    Between samples the rate is interpolated linearly; outside the sampled span it is zero.
    """

    source: int
    target: int
    times: np.ndarray
    rates: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).ravel()
        rates = np.asarray(self.rates, dtype=float).ravel()

        if times.size == 0:
            raise ConfigurationError(f"Flow {self.source}->{self.target} has no samples")
        if times.shape != rates.shape:
            raise ConfigurationError(f"Flow {self.source}->{self.target}: {times.size} times but {rates.size} rates")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(rates))):
            raise ConfigurationError(f"Flow {self.source}->{self.target} has non-finite samples")
        if np.any(np.diff(times) <= 0):
            raise ConfigurationError(f"Flow {self.source}->{self.target}: sample times must be strictly increasing")

        times.setflags(write=False)
        rates.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "rates", rates)

    def rate_at(self, t: float) -> float:
        return float(np.interp(t, self.times, self.rates, left=0.0, right=0.0))

    @classmethod
    def constant(cls, source: int, target: int, rate: float, start: float, stop: float) -> "ContinuousFlow":
        return cls(source, target, np.array([start, stop]), np.array([rate, rate]))


@dataclass(frozen=True)
class CircularityConfig:
    """``delta`` (s) converts a flow into a mass; keep it fixed across compared values."""

    delta: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise ConfigurationError(f"delta must be finite and > 0, got {self.delta!r}")


@dataclass(frozen=True)
class SolidScenario:
    """
    Timeline of the solids network: extraction, first use, sorting, then incineration
    of the unsorted share by truck and of the recycled share after a second life.

    Sorted and unsorted batches leave the sorter at the same time.
    """

    m: float
    s: float
    T_s: float
    t_extract_out: float = 0.0
    first_use_duration: float = 0.0
    tau_transport_unsorted: float = 0.0
    tau_second_life: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.m) and self.m >= 0):
            raise ConfigurationError(f"m must be finite and >= 0, got {self.m!r}")
        if not 0 <= self.s <= 100:
            raise ConfigurationError(f"s must lie in [0, 100], got {self.s!r}")
        for name in ("T_s", "t_extract_out", "first_use_duration", "tau_transport_unsorted", "tau_second_life"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ConfigurationError(f"{name} must be finite and >= 0, got {value!r}")
        if not self.tau_second_life > self.tau_transport_unsorted:
            raise ConfigurationError(
                f"tau_second_life ({self.tau_second_life!r}) must exceed "
                f"tau_transport_unsorted ({self.tau_transport_unsorted!r})"
            )

    @property
    def t_sorter_in(self) -> float:
        return self.t_extract_out + self.first_use_duration

    @property
    def t_sorter_out(self) -> float:
        return self.t_sorter_in + self.T_s

    @property
    def t_incinerator_in_unsorted(self) -> float:
        return self.t_sorter_out + self.tau_transport_unsorted

    @property
    def t_incinerator_in_recycled(self) -> float:
        return self.t_sorter_out + self.tau_second_life

    @property
    def life_extension(self) -> float:
        return self.t_incinerator_in_recycled - self.t_incinerator_in_unsorted

    def event_times(self) -> dict:
        return {
            "t_2_in_4": self.t_sorter_in,
            "t_2_out": self.t_sorter_out,
            "t_3_in_6": self.t_incinerator_in_unsorted,
            "t_3_in_5": self.t_incinerator_in_recycled,
            "nu": self.life_extension,
        }


def mass_split(m: float, s: float) -> Tuple[float, float]:
    """
    Split ``m`` into recycled and unsorted mass for sorting success ``s`` percent.

    The larger share is computed by multiplication and the smaller by subtraction,
    which is exact there, so ``m_r + m_u == m`` holds in floating point.

    :return: ``(m_r, m_u)``
    """
    if not (math.isfinite(m) and m >= 0):
        raise ConfigurationError(f"m must be finite and >= 0, got {m!r}")
    if not 0 <= s <= 100:
        raise ConfigurationError(f"s must lie in [0, 100], got {s!r}")

    if s <= 50:
        m_u = m * (1.0 - s / 100.0)
        m_r = m - m_u
    else:
        m_r = m * (s / 100.0)
        m_u = m - m_r

    return m_r, m_u


def net_weight(tmn: Tmn, source: int, target: int) -> int:
    """
    Net finite-time sustainable multiplicity of material moving from ``source`` to ``target``.
    """
    src = tmn.compartment(source)
    dst = tmn.compartment(target)

    weight = 0
    if is_finite_time_sustainable(src, Direction.EXITING):
        weight += 1
    if is_finite_time_sustainable(dst, Direction.ENTERING):
        weight += 1
    if Role.NATURAL_ENVIRONMENT in src.roles:
        weight -= 1
    return weight


class Ledger:
    """
    Batch events and continuous flows of one network, classified once and
    queried many times.
    """

    def __init__(self, tmn: Tmn, events: Iterable[FlowEvent] = (), flows: Iterable[ContinuousFlow] = (),
                 cfg: CircularityConfig = None):
        report = validate_tmn(tmn)
        if not report.ok:
            raise InvalidNetwork(
                "Cannot compute circularity on an invalid network: " + "; ".join(str(v) for v in report.violations),
                report.violations,
            )

        self.tmn = tmn
        self.cfg = cfg if cfg is not None else CircularityConfig()

        batches = []
        for event in sorted(events, key=lambda e: e.time):
            weight = net_weight(tmn, event.source, event.target)
            if weight:
                batches.append((event.time, weight * event.mass))

        self._batch_times = np.array([b[0] for b in batches], dtype=float)
        self._batch_masses = [b[1] for b in batches]

        self._flows = []
        for flow in flows:
            weight = net_weight(tmn, flow.source, flow.target)
            if weight:
                self._flows.append((weight, flow))

    def batch_mass(self, t: float) -> float:
        n = int(np.searchsorted(self._batch_times, t, side="right"))
        return math.fsum(self._batch_masses[:n])

    def flow_rate(self, t: float) -> float:
        return math.fsum(weight * flow.rate_at(t) for weight, flow in self._flows)

    def lambda_at(self, t: float) -> float:
        if not t >= 0:
            raise ConfigurationError(f"t must be >= 0, got {t!r}")
        return -(self.batch_mass(t) + self.cfg.delta * self.flow_rate(t))


def lambda_from_ledger(tmn: Tmn, events: Sequence[FlowEvent], flows: Sequence[ContinuousFlow], t: float,
                       cfg: CircularityConfig = None) -> float:
    """
    Circularity of ``tmn`` at time ``t`` from its batch events and continuous flows.

    :raises InvalidNetwork: if the network is invalid
    :raises UnknownCompartment: if an event or flow references a missing compartment
    """
    return Ledger(tmn, events, flows, cfg).lambda_at(t)


def lambda_solid_scenario(sc: SolidScenario, t: float) -> float:
    """
    Piecewise circularity of the solids network::

        -m          for 0 <= t < t_3_in_6
        -(m + m_u)  for t_3_in_6 <= t < t_3_in_5
        -2m         for t >= t_3_in_5
    """
    if not t >= 0:
        raise ConfigurationError(f"t must be >= 0, got {t!r}")

    if t < sc.t_incinerator_in_unsorted:
        return -sc.m
    if t < sc.t_incinerator_in_recycled:
        _, m_u = mass_split(sc.m, sc.s)
        return -(sc.m + m_u)
    return -2 * sc.m


def solid_scenario_events(sc: SolidScenario) -> List[FlowEvent]:
    """
    The batch events of the solids network (compartment ids of ``n_s.json``):
    extraction into first use, the unsorted share by truck into the incinerator,
    the recycled share into the incinerator after its second life.
    """
    m_r, m_u = mass_split(sc.m, sc.s)

    events = []
    if sc.m > 0:
        events.append(FlowEvent(sc.t_extract_out, sc.m, 1, 4))
    if m_u > 0:
        events.append(FlowEvent(sc.t_incinerator_in_unsorted, m_u, 6, 3))
    if m_r > 0:
        events.append(FlowEvent(sc.t_incinerator_in_recycled, m_r, 5, 3))
    return events


def lambda_netzero(emitter_flow: ContinuousFlow, remover_flow: ContinuousFlow, t: float,
                   cfg: CircularityConfig = None) -> float:
    """
    Circularity of the net-zero network: ``-delta * (mdot_12(t) - mdot_23(t))``.

    Not clamped: removal above emission gives a positive value.
    """
    cfg = cfg if cfg is not None else CircularityConfig()
    return -cfg.delta * (emitter_flow.rate_at(t) - remover_flow.rate_at(t))


def lambda_series(fn: Callable[[float], float], times: Iterable[float]) -> np.ndarray:
    return np.array([fn(float(t)) for t in times], dtype=float)


def load_events(path) -> List[FlowEvent]:
    events = []
    for lineno, row in _rows(path):
        if row[0].strip().lower() == "time":
            continue
        if len(row) != 4:
            raise ConfigurationError(f"Expected time,mass,from,to; got {len(row)} fields", path=str(path), lineno=lineno)
        try:
            events.append(FlowEvent(float(row[0]), float(row[1]), int(row[2]), int(row[3])))
        except ValueError as err:
            raise ConfigurationError(str(err), path=str(path), lineno=lineno) from err
    return events


def load_flows(path) -> List[ContinuousFlow]:
    flows = []
    header = None
    samples: List[Tuple[float, float]] = []

    def _close():
        if header is not None:
            flows.append(ContinuousFlow(header[0], header[1], [s[0] for s in samples], [s[1] for s in samples]))

    for lineno, row in _rows(path):
        is_header = row[0].strip().lower() == "flow"
        if not is_header and header is None:
            raise ConfigurationError("Samples before the first flow header", path=str(path), lineno=lineno)
        try:
            if is_header:
                _close()
                header = (int(row[1]), int(row[2]))
                samples = []
            else:
                samples.append((float(row[0]), float(row[1])))
        except (IndexError, ValueError) as err:
            raise ConfigurationError(f"Malformed flow record: {err}", path=str(path), lineno=lineno) from err

    _close()
    return flows


def flow_from_trajectory(path, column: str = "m_dot_23", source: int = 2, target: int = 3,
                         time_column: str = "t", time_scale: float = 1.0) -> ContinuousFlow:
    """
    Load one column of an environment trajectory CSV as a continuous flow.

    ``time_scale`` converts the trajectory's time unit to seconds (86400 for days).
    """
    columns = read_csv_columns(path)
    for name in (time_column, column):
        if name not in columns:
            raise ConfigurationError(f"Column {name!r} not found; columns: {', '.join(columns)}", path=str(path))
    return ContinuousFlow(source, target, columns[time_column] * time_scale, columns[column])


def write_lambda_csv(path, times: Sequence[float], values: Sequence[float], header: Sequence[str] = ()):
    write_csv(path, ("t", "lambda"), zip(times, values), header)


def _rows(path):
    try:
        with open(path, newline="") as fp:
            for lineno, row in enumerate(csv.reader(fp), start=1):
                if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                    continue
                yield lineno, row
    except OSError as err:
        raise ConfigurationError(f"Cannot read file: {err.strerror}", path=str(path)) from err


__all__ = [
    "FlowEvent", "ContinuousFlow", "CircularityConfig", "SolidScenario", "Ledger", "mass_split", "net_weight",
    "lambda_from_ledger", "lambda_solid_scenario", "solid_scenario_events", "lambda_netzero", "lambda_series",
    "load_events", "load_flows", "flow_from_trajectory", "write_lambda_csv"
]
