"""
Run configuration files.

A run configuration is a JSON document; every block is optional and only the blocks
a command needs are read::

    {
      "seed": 7,
      "out": "runs/truck",
      "workers": 4,
      "env": {"name": "transport-truck", "params": {"horizon": 200}},
      "trainer": {"name": "ars", "iterations": 300, "n_directions": 8},
      "evaluate": {"policy": "runs/truck/policy.json", "n_episodes": 100},
      "simulate": {"policy": null, "action": [0.0]},
      "circularity": {"delta": 1.0, "grid": {"start": 0, "stop": 100, "num": 101}},
      "verify": {"rel_tol": 1e-6}
    }

Unknown keys are errors reported with the line they appear on. Relative file paths
are resolved against the directory of the configuration file and must exist.
"""
import copy
import dataclasses
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np

from .circularity import CircularityConfig, ContinuousFlow, SolidScenario, flow_from_trajectory, load_flows
from .envs import EnvConfig, get_entry
from .exceptions import ConfigurationError, UnknownEnvironment
from .trainers import TRAINERS, TrainerConfig
from .utils import locate_key

logger = logging.getLogger(__name__)

_PRESETS_DIR = os.path.join(os.path.dirname(__file__), "presets")

DEFAULT_OUT = "circsim-out"

TOP_LEVEL_KEYS = ("seed", "out", "workers", "env", "trainer", "evaluate", "simulate", "circularity", "verify")


class _Source:
    """
    Where a configuration came from; turns problems into located errors.
    """

    def __init__(self, path: Optional[str] = None, text: Optional[str] = None):
        self.path = path
        self.text = text
        self.base_dir = os.path.dirname(os.path.abspath(path)) if path else os.getcwd()

    def error(self, message: str, key: Optional[str] = None) -> ConfigurationError:
        lineno = locate_key(self.text, key) if (self.text and key) else None
        return ConfigurationError(message, path=self.path, lineno=lineno)

    def check_keys(self, block: Any, valid: Sequence[str], where: str) -> dict:
        if block is None:
            return {}
        if not isinstance(block, Mapping):
            raise self.error(f"{where} must be an object, got {type(block).__name__}")

        unknown = sorted(set(block) - set(valid))
        if unknown:
            raise self.error(
                f"Unknown key {unknown[0]!r} in {where} (valid keys: {', '.join(sorted(valid))})", unknown[0]
            )
        return dict(block)

    def file(self, value: Any, key: str) -> str:
        if not isinstance(value, str) or not value:
            raise self.error(f"{key} must be a file path, got {value!r}", key)
        path = value if os.path.isabs(value) else os.path.join(self.base_dir, value)
        if not os.path.exists(path):
            raise self.error(f"{key}: file not found: {value}", key)
        return path

    def wrap(self, err: ConfigurationError, key: Optional[str] = None) -> ConfigurationError:
        if err.path is not None:
            return err
        return self.error(str(err), key)


def _fields(cls) -> List[str]:
    return [f.name for f in dataclasses.fields(cls) if f.init]


@dataclass(frozen=True)
class TrainerBlock:
    name: str
    config: TrainerConfig

    def as_dict(self) -> dict:
        doc = self.config.as_dict()
        doc.pop("seed", None)
        return {"name": self.name, **doc}


@dataclass(frozen=True)
class EvaluateBlock:
    policy: Optional[str] = None
    n_episodes: int = 100


@dataclass(frozen=True)
class SimulateBlock:
    """
    ``policy`` drives the episode when given; otherwise the constant ``action``
    (environment units), otherwise the zero policy, which applies a zero action.
    """

    policy: Optional[str] = None
    action: Optional[Sequence[float]] = None
    steps: Optional[int] = None


@dataclass(frozen=True)
class FlowSource:
    """
    A continuous flow read from an environment trajectory column, from a flow file
    (its first flow), or a constant ``rate`` between ``start`` and ``stop``.
    """

    trajectory: Optional[str] = None
    column: str = "m_dot_23"
    time_column: str = "t"
    time_scale: float = 1.0
    file: Optional[str] = None
    rate: Optional[float] = None
    start: float = 0.0
    stop: Optional[float] = None

    def load(self, source: int, target: int) -> ContinuousFlow:
        if self.trajectory is not None:
            return flow_from_trajectory(self.trajectory, self.column, source, target, self.time_column,
                                        self.time_scale)
        if self.file is not None:
            flows = load_flows(self.file)
            if not flows:
                raise ConfigurationError("Flow file holds no flow", path=self.file)
            return flows[0]
        return ContinuousFlow.constant(source, target, self.rate, self.start, self.stop)


@dataclass(frozen=True)
class CircularityBlock:
    delta: float = 1.0
    times: Optional[np.ndarray] = field(default=None, compare=False)
    network: Optional[str] = None
    events: Optional[str] = None
    flows: Optional[str] = None
    scenario: Optional[SolidScenario] = None
    emitter: Optional[FlowSource] = None
    remover: Optional[FlowSource] = None

    @property
    def cfg(self) -> CircularityConfig:
        return CircularityConfig(self.delta)


@dataclass(frozen=True)
class VerifyBlock:
    """
    ``horizon`` defaults to one episode; ``action`` to the zero action clipped to the
    box; ``initial_state`` to the environment's reset state for the run seed.
    """

    rel_tol: float = 1e-6
    horizon: Optional[float] = None
    action: Optional[Sequence[float]] = None
    initial_state: Optional[Sequence[float]] = None
    reference_rtol: float = 1e-9


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    out: str = DEFAULT_OUT
    workers: int = 1
    env: Optional[EnvConfig] = None
    trainer: Optional[TrainerBlock] = None
    evaluate: EvaluateBlock = field(default_factory=EvaluateBlock)
    simulate: SimulateBlock = field(default_factory=SimulateBlock)
    circularity: CircularityBlock = field(default_factory=CircularityBlock)
    verify: VerifyBlock = field(default_factory=VerifyBlock)
    source: Optional[str] = field(default=None, compare=False)
    document: Dict[str, Any] = field(default_factory=dict, compare=False)

    def echo(self) -> Dict[str, Any]:
        """
        The effective configuration document, written into every output file.

        ``out`` and ``workers`` are left out: they do not change any result.
        """
        doc = copy.deepcopy(self.document)
        doc.pop("out", None)
        doc.pop("workers", None)
        doc["seed"] = self.seed
        if self.env is not None:
            doc["env"] = self.env.as_dict()
        if self.trainer is not None:
            doc["trainer"] = self.trainer.as_dict()
        return doc

    def require_env(self) -> EnvConfig:
        if self.env is None:
            raise ConfigurationError("No environment configured; set env.name or pass --env", path=self.source)
        return self.env

    @classmethod
    def parse(cls, text: str, source: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as jde:
            raise ConfigurationError(f"Invalid JSON: {jde.msg}", path=source, lineno=jde.lineno) from jde

        return cls.from_document(doc, _Source(source, text), overrides)

    @classmethod
    def load(cls, path, overrides: Optional[Mapping[str, Any]] = None) -> "RunConfig":
        try:
            with open(path) as fp:
                text = fp.read()
        except OSError as err:
            raise ConfigurationError(f"Cannot read configuration: {err.strerror}", path=str(path)) from err
        return cls.parse(text, str(path), overrides)

    @classmethod
    def from_preset(cls, name: str, overrides: Optional[Mapping[str, Any]] = None) -> "RunConfig":
        path = os.path.join(_PRESETS_DIR, f"{name}.json")
        if not os.path.exists(path):
            raise ConfigurationError(f"No preset named {name!r}; choose from: {', '.join(presets())}")
        return cls.load(path, overrides)

    @classmethod
    def from_document(cls, doc: Any, src: Optional[_Source] = None,
                      overrides: Optional[Mapping[str, Any]] = None) -> "RunConfig":
        src = src or _Source()
        doc = copy.deepcopy(doc) if doc is not None else {}
        if not isinstance(doc, dict):
            raise src.error("The configuration must be an object")

        for dotted, value in (overrides or {}).items():
            apply_override(doc, dotted, value)

        doc = src.check_keys(doc, TOP_LEVEL_KEYS, "configuration")

        seed = doc.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise src.error(f"seed must be a non-negative integer, got {seed!r}", "seed")

        out = doc.get("out", DEFAULT_OUT)
        if not isinstance(out, str) or not out:
            raise src.error(f"out must be a directory path, got {out!r}", "out")

        workers = doc.get("workers", 1)
        if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
            raise src.error(f"workers must be an integer >= 1, got {workers!r}", "workers")

        return cls(
            seed=seed,
            out=out,
            workers=workers,
            env=_parse_env(doc.get("env"), src),
            trainer=_parse_trainer(doc.get("trainer"), seed, src),
            evaluate=_parse_evaluate(doc.get("evaluate"), src),
            simulate=_parse_simulate(doc.get("simulate"), src),
            circularity=_parse_circularity(doc.get("circularity"), src),
            verify=_parse_verify(doc.get("verify"), src),
            source=src.path,
            document=doc,
        )


def apply_override(doc: dict, dotted: str, value: Any) -> None:
    """
    Set ``doc["a"]["b"] = value`` for ``dotted == "a.b"``, creating objects on the way.
    """
    keys = dotted.split(".")
    node = doc
    for key in keys[:-1]:
        child = node.get(key)
        if child is None:
            child = node[key] = {}
        elif not isinstance(child, dict):
            raise ConfigurationError(f"Cannot set {dotted!r}: {key!r} is not an object")
        node = child
    node[keys[-1]] = value


def parse_override(text: str):
    """
    ``KEY=VALUE`` from the command line; the value is read as JSON when possible.
    """
    if "=" not in text:
        raise ConfigurationError(f"Expected KEY=VALUE, got {text!r}")
    key, value = text.split("=", 1)
    try:
        return key.strip(), json.loads(value)
    except json.JSONDecodeError:
        return key.strip(), value


def presets() -> List[str]:
    return sorted(os.path.splitext(f)[0] for f in os.listdir(_PRESETS_DIR) if f.endswith(".json"))


def _parse_env(block, src: _Source) -> Optional[EnvConfig]:
    if block is None:
        return None
    block = src.check_keys(block, ("name", "params"), "env")
    if "name" not in block:
        raise src.error("Keys missing from env: name", "env")

    try:
        entry = get_entry(block["name"])
    except UnknownEnvironment as err:
        raise src.wrap(err, "name") from None

    params = src.check_keys(block.get("params"), _fields(entry.params_class), f"{entry.name} parameters")
    try:
        return EnvConfig(entry.name, params)
    except ConfigurationError as err:
        raise src.wrap(err, "params") from None


def _parse_trainer(block, seed: int, src: _Source) -> Optional[TrainerBlock]:
    if block is None:
        return None
    if not isinstance(block, Mapping):
        raise src.error(f"trainer must be an object, got {type(block).__name__}", "trainer")
    if "name" not in block:
        raise src.error("Keys missing from trainer: name", "trainer")

    name = block["name"]
    if name not in TRAINERS:
        raise src.error(f"Unknown trainer {name!r}; valid names: {', '.join(TRAINERS)}", "name")

    config_class = TRAINERS[name].config_class
    valid = [f for f in _fields(config_class) if f != "seed"]
    params = src.check_keys(block, ["name", *valid], "trainer")
    params.pop("name")

    try:
        return TrainerBlock(name, config_class(seed=seed, **params))
    except (ConfigurationError, TypeError) as err:
        raise src.error(str(err), "trainer") from None


def _parse_evaluate(block, src: _Source) -> EvaluateBlock:
    block = src.check_keys(block, _fields(EvaluateBlock), "evaluate")
    if block.get("policy") is not None:
        block["policy"] = src.file(block["policy"], "policy")
    n = block.get("n_episodes", 100)
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise src.error(f"n_episodes must be an integer >= 1, got {n!r}", "n_episodes")
    return EvaluateBlock(**block)


def _parse_simulate(block, src: _Source) -> SimulateBlock:
    block = src.check_keys(block, _fields(SimulateBlock), "simulate")
    if block.get("policy") is not None:
        block["policy"] = src.file(block["policy"], "policy")
    if block.get("action") is not None:
        block["action"] = tuple(_reals(block["action"], "action", src))
    steps = block.get("steps")
    if steps is not None and (isinstance(steps, bool) or not isinstance(steps, int) or steps < 1):
        raise src.error(f"steps must be an integer >= 1, got {steps!r}", "steps")
    return SimulateBlock(**block)


def _parse_flow_source(block, where: str, src: _Source) -> Optional[FlowSource]:
    if block is None:
        return None
    block = src.check_keys(block, _fields(FlowSource), where)

    kinds = [k for k in ("trajectory", "file", "rate") if block.get(k) is not None]
    if len(kinds) != 1:
        raise src.error(f"{where} needs exactly one of trajectory, file or rate", where)

    for key in ("trajectory", "file"):
        if block.get(key) is not None:
            block[key] = src.file(block[key], key)
    if block.get("rate") is not None and block.get("stop") is None:
        raise src.error(f"{where}: a constant rate needs a stop time", where)

    for key in ("time_scale", "rate", "start", "stop"):
        if block.get(key) is not None:
            _reals([block[key]], key, src)

    return FlowSource(**block)


def _parse_circularity(block, src: _Source) -> CircularityBlock:
    block = src.check_keys(
        block, ("delta", "grid", "times", "network", "events", "flows", "scenario", "emitter", "remover"),
        "circularity",
    )

    if "grid" in block and "times" in block:
        raise src.error("circularity takes either grid or times, not both", "grid")

    times = None
    if block.get("grid") is not None:
        grid = src.check_keys(block["grid"], ("start", "stop", "num"), "circularity.grid")
        missing_keys = [k for k in ("start", "stop", "num") if k not in grid]
        if missing_keys:
            raise src.error("Keys missing from circularity.grid: " + ", ".join(missing_keys), "grid")
        start, stop = _reals([grid["start"], grid["stop"]], "grid", src)
        num = grid["num"]
        if isinstance(num, bool) or not isinstance(num, int) or num < 1 or not 0 <= start <= stop:
            raise src.error("grid needs 0 <= start <= stop and an integer num >= 1", "grid")
        times = np.linspace(start, stop, num)
    elif block.get("times") is not None:
        times = np.array(_reals(block["times"], "times", src))
        if np.any(times < 0):
            raise src.error("times must be >= 0", "times")

    network = block.get("network")
    if network is not None and not isinstance(network, str):
        raise src.error(f"network must be a built-in name or a file path, got {network!r}", "network")
    if network is not None and (network.endswith(".json") or os.sep in network):
        network = src.file(network, "network")

    scenario = None
    if block.get("scenario") is not None:
        params = src.check_keys(block["scenario"], _fields(SolidScenario), "circularity.scenario")
        missing_keys = [k for k in ("m", "s", "T_s") if k not in params]
        if missing_keys:
            raise src.error("Keys missing from circularity.scenario: " + ", ".join(missing_keys), "scenario")
        try:
            scenario = SolidScenario(**{k: float(v) for k, v in params.items()})
        except (TypeError, ValueError) as err:
            raise src.error(str(err), "scenario") from None

    try:
        delta = block.get("delta", 1.0)
        CircularityConfig(delta)
    except (TypeError, ConfigurationError) as err:
        raise src.error(str(err), "delta") from None

    return CircularityBlock(
        delta=delta,
        times=times,
        network=network,
        events=src.file(block["events"], "events") if block.get("events") is not None else None,
        flows=src.file(block["flows"], "flows") if block.get("flows") is not None else None,
        scenario=scenario,
        emitter=_parse_flow_source(block.get("emitter"), "emitter", src),
        remover=_parse_flow_source(block.get("remover"), "remover", src),
    )


def _parse_verify(block, src: _Source) -> VerifyBlock:
    block = src.check_keys(block, _fields(VerifyBlock), "verify")

    rel_tol = block.get("rel_tol", 1e-6)
    if isinstance(rel_tol, str) and rel_tol.lower() in ("inf", "infinity"):
        block["rel_tol"] = rel_tol = math.inf
    if isinstance(rel_tol, bool) or not isinstance(rel_tol, (int, float)) or not rel_tol > 0:
        raise src.error(f"rel_tol must be > 0, got {rel_tol!r}", "rel_tol")

    for key in ("horizon", "reference_rtol"):
        if block.get(key) is not None:
            value, = _reals([block[key]], key, src)
            if not value > 0:
                raise src.error(f"{key} must be > 0, got {value!r}", key)
    for key in ("action", "initial_state"):
        if block.get(key) is not None:
            block[key] = tuple(_reals(block[key], key, src))

    return VerifyBlock(**block)


def _reals(values, key: str, src: _Source) -> List[float]:
    if isinstance(values, (int, float)) and not isinstance(values, bool):
        values = [values]
    if not isinstance(values, (list, tuple)):
        raise src.error(f"{key} must be a number or a list of numbers, got {values!r}", key)

    out = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise src.error(f"{key} must hold finite numbers, got {v!r}", key)
        out.append(float(v))
    return out


__all__ = [
    "RunConfig", "TrainerBlock", "EvaluateBlock", "SimulateBlock", "FlowSource", "CircularityBlock", "VerifyBlock",
    "apply_override", "parse_override", "presets", "DEFAULT_OUT"
]
