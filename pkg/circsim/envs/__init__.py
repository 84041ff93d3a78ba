"""
circsim.envs
~~~~~~~~~~~~

The registry of compartment environments.

Basic usage::

    >>> from circsim import envs
    >>> env = envs.make_env('transport-truck', {'horizon': 100})
    >>> obs, info = env.reset(seed=7)
    >>> result = env.step([0.0])
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Type

from ..abc import OdeEnv, OdeParams
from ..exceptions import ConfigurationError, UnknownEnvironment
from .incinerator import IncineratorEnv, IncineratorParams
from .microalgae import AlgaeParams, DroopEnv, MonodEnv
from .truck import TransportTruckEnv, TruckParams


@dataclass(frozen=True)
class EnvEntry:
    name: str
    env_class: Type[OdeEnv]
    params_class: Type[OdeParams]
    description: str = ""

    @property
    def state_dim(self) -> int:
        return len(self.env_class.state_names)

    @property
    def action_dim(self) -> int:
        return len(self.env_class.action_names)

    @property
    def compartment(self) -> str:
        return self.env_class.compartment

    @property
    def role(self) -> str:
        return self.env_class.compartment_role


ENVIRONMENTS: Dict[str, EnvEntry] = {
    entry.name: entry for entry in (
        EnvEntry("transport-truck", TransportTruckEnv, TruckParams,
                 "truck moving unsorted waste to the incinerator"),
        EnvEntry("incinerator", IncineratorEnv, IncineratorParams,
                 "wastebed and freeboard, freeboard heat exchange regulates the gas temperature"),
        EnvEntry("co2-microalgae-monod", MonodEnv, AlgaeParams,
                 "Monod photobioreactor, light drives CO2 uptake"),
        EnvEntry("co2-microalgae-droop", DroopEnv, AlgaeParams,
                 "Droop photobioreactor with internal cell quota"),
    )
}


def get_entry(name: str) -> EnvEntry:
    try:
        return ENVIRONMENTS[name]
    except KeyError:
        raise UnknownEnvironment(name, ENVIRONMENTS) from None


def list_envs() -> List[EnvEntry]:
    return list(ENVIRONMENTS.values())


def make_env(name: str, params: Optional[Any] = None) -> OdeEnv:
    """
    Construct a registered environment.

    :param name: registry name, see :func:`list_envs`
    :param params: the environment's parameter dataclass, or a mapping of its fields
    :raises UnknownEnvironment: if ``name`` is not registered
    :raises ConfigurationError: if a parameter is unknown or invalid
    """
    return get_entry(name).env_class(params)


@dataclass(frozen=True)
class EnvConfig:
    """
    A named environment and its parameter overrides; what trainers and commands
    need to build private environment instances.
    """

    name: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.params, Mapping):
            raise ConfigurationError(f"Environment parameters must be an object, got {type(self.params).__name__}")
        entry = get_entry(self.name)
        # fails early on unknown keys and invalid values
        entry.params_class.from_mapping(self.params, where=f"{self.name} parameters")
        object.__setattr__(self, "params", dict(self.params))

    @property
    def entry(self) -> EnvEntry:
        return get_entry(self.name)

    def resolved_params(self) -> OdeParams:
        return self.entry.params_class.from_mapping(self.params, where=f"{self.name} parameters")

    def make(self) -> OdeEnv:
        return make_env(self.name, self.params)

    def as_dict(self) -> dict:
        return {"name": self.name, "params": dict(self.params)}


__all__ = [
    "EnvEntry", "ENVIRONMENTS", "get_entry", "list_envs", "make_env", "EnvConfig", "TransportTruckEnv",
    "TruckParams", "IncineratorEnv", "IncineratorParams", "MonodEnv", "DroopEnv", "AlgaeParams"
]
