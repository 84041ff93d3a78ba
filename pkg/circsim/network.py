"""
Thermodynamical material networks.

A material network is a set of compartments ``c^k_{i,j}`` that transport, store,
use and transform a target material. Node compartments (``i = j = k``) store,
use or transform it; arc compartments (``i != j``) move it from node ``i`` to
node ``j`` in the direction of the material flow.

Network description files are JSON documents::

    {
      "material": "solid waste",
      "n_v": 3, "n_a": 3, "n_c": 6,
      "compartments": [
        {"k": 1, "i": 1, "j": 1, "kind": "node", "roles": ["nonrenewable-reservoir"], "label": "extraction"},
        {"k": 4, "i": 1, "j": 2, "kind": "arc", "roles": ["transport"], "label": "first use"}
      ]
    }

The counts are optional; when present they are checked by :func:`validate_tmn`.
"""
import json
import logging
import os
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, List, Optional, Tuple

import networkx as nx

from .exceptions import ConfigurationError, InvalidNetwork, UnknownCompartment

logger = logging.getLogger(__name__)

_NETWORKS_DIR = os.path.join(os.path.dirname(__file__), "data", "networks")

_COMPARTMENT_KEYS = ("k", "i", "j", "kind", "roles", "label")


class Kind(str, Enum):
    NODE = "node"
    ARC = "arc"


class Role(str, Enum):
    NONRENEWABLE_RESERVOIR = "nonrenewable-reservoir"
    LANDFILL = "landfill"
    INCINERATOR = "incinerator"
    NATURAL_ENVIRONMENT = "natural-environment"
    PROCESS = "process"
    USE = "use"
    TRANSPORT = "transport"


class Direction(str, Enum):
    EXITING = "exiting"
    ENTERING = "entering"


# Locations where entering material stops circulating.
TERMINAL_ROLES = frozenset({Role.LANDFILL, Role.INCINERATOR, Role.NATURAL_ENVIRONMENT})


class ViolationKind(Enum):

    def __new__(cls, value, phrase, description=''):
        obj = object.__new__(cls)
        obj._value_ = value

        obj.phrase = phrase
        obj.description = description
        return obj

    DUPLICATE_ID = "duplicate-id", "duplicate k", "Two compartments share the identifier k"
    DANGLING_ENDPOINT = "dangling-endpoint", "dangling arc endpoint", "An arc references a missing node"
    NODE_INDEX_RULE = "node-index-rule", "node index rule", "A node compartment must satisfy i = j = k"
    SELF_LOOP_ARC = "self-loop-arc", "self-loop arc", "An arc compartment must satisfy i != j"
    COUNT_MISMATCH = "count-mismatch", "count mismatch", "Declared counts disagree with the compartments"
    ROLE_RULE = "role-rule", "role rule", "Arcs may only transport; nodes may not transport"


@dataclass(frozen=True, order=True)
class CompartmentId:
    k: int
    i: int
    j: int

    def __post_init__(self):
        for name in ("k", "i", "j"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigurationError(f"Compartment index {name} must be a positive integer, got {value!r}")

    def __str__(self):
        return f"c^{self.k}_{{{self.i},{self.j}}}"


@dataclass(frozen=True)
class Compartment:
    id: CompartmentId
    kind: Kind
    roles: FrozenSet[Role] = frozenset()
    label: str = ""

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", Kind(self.kind))
            object.__setattr__(self, "roles", frozenset(Role(r) for r in self.roles))
        except ValueError as err:
            raise ConfigurationError(f"Invalid compartment {self.id}: {err}") from err

    def __repr__(self):
        return '<%s %s %s>' % (self.__class__.__name__, self.id, self.kind.value)

    @property
    def k(self) -> int:
        return self.id.k

    @property
    def i(self) -> int:
        return self.id.i

    @property
    def j(self) -> int:
        return self.id.j

    @property
    def is_node(self) -> bool:
        return self.kind is Kind.NODE

    @classmethod
    def node(cls, k: int, *roles, label: str = "") -> "Compartment":
        return cls(CompartmentId(k, k, k), Kind.NODE, frozenset(roles), label)

    @classmethod
    def arc(cls, k: int, i: int, j: int, label: str = "") -> "Compartment":
        return cls(CompartmentId(k, i, j), Kind.ARC, frozenset({Role.TRANSPORT}), label)


@dataclass(frozen=True)
class Tmn:
    """
    A thermodynamical material network: the target ``material`` and its compartments.

    ``n_v``, ``n_a`` and ``n_c`` are the declared counts; they default to the
    actual counts and are compared against them by :func:`validate_tmn`.
    """

    material: str
    compartments: Tuple[Compartment, ...] = ()
    n_v: Optional[int] = None
    n_a: Optional[int] = None
    n_c: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "compartments", tuple(self.compartments))
        if self.n_v is None:
            object.__setattr__(self, "n_v", len(self.nodes))
        if self.n_a is None:
            object.__setattr__(self, "n_a", len(self.arcs))
        if self.n_c is None:
            object.__setattr__(self, "n_c", len(self.compartments))

    def __repr__(self):
        return '<%s %r n_v=%d n_a=%d>' % (self.__class__.__name__, self.material, self.n_v, self.n_a)

    @property
    def nodes(self) -> Tuple[Compartment, ...]:
        return tuple(c for c in self.compartments if c.kind is Kind.NODE)

    @property
    def arcs(self) -> Tuple[Compartment, ...]:
        return tuple(c for c in self.compartments if c.kind is Kind.ARC)

    def compartment(self, k: int) -> Compartment:
        for c in self.compartments:
            if c.k == k:
                return c
        raise UnknownCompartment(k)

    def __contains__(self, k) -> bool:
        return any(c.k == k for c in self.compartments)

    def as_dict(self) -> dict:
        return {
            "material": self.material,
            "n_v": self.n_v,
            "n_a": self.n_a,
            "n_c": self.n_c,
            "compartments": [
                {
                    "k": c.k, "i": c.i, "j": c.j,
                    "kind": c.kind.value,
                    "roles": sorted(r.value for r in c.roles),
                    "label": c.label,
                }
                for c in self.compartments
            ],
        }

    def as_string(self, indent=2) -> str:
        return json.dumps(self.as_dict(), indent=indent)

    @classmethod
    def parse(cls, text: str, source: str = None) -> "Tmn":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as jde:
            raise ConfigurationError(f"Invalid network description: {jde.msg}", path=source, lineno=jde.lineno) from jde

        if not isinstance(doc, dict):
            raise ConfigurationError("Network description must be an object", path=source)

        unknown = sorted(set(doc) - {"material", "n_v", "n_a", "n_c", "compartments"})
        if unknown:
            raise ConfigurationError("Unknown key(s) in network description: " + ", ".join(unknown), path=source)

        missing_keys = [k for k in ("material", "compartments") if k not in doc]
        if missing_keys:
            raise ConfigurationError("Keys missing from network description: " + ", ".join(missing_keys), path=source)

        if not isinstance(doc["compartments"], list):
            raise ConfigurationError("Network compartments must be a list", path=source)

        compartments = []
        for n, entry in enumerate(doc["compartments"]):
            if not isinstance(entry, dict):
                raise ConfigurationError(f"Compartment #{n} must be an object", path=source)

            missing_keys = [k for k in ("k", "i", "j", "kind") if k not in entry]
            unknown = sorted(set(entry) - set(_COMPARTMENT_KEYS))
            if missing_keys:
                raise ConfigurationError(f"Keys missing from compartment #{n}: " + ", ".join(missing_keys), path=source)
            if unknown:
                raise ConfigurationError(f"Unknown key(s) in compartment #{n}: " + ", ".join(unknown), path=source)
            if not isinstance(entry.get("roles", []), list):
                raise ConfigurationError(f"Roles of compartment #{n} must be a list", path=source)

            compartments.append(Compartment(
                CompartmentId(entry["k"], entry["i"], entry["j"]),
                entry["kind"],
                frozenset(entry.get("roles", ())),
                entry.get("label", ""),
            ))

        return cls(doc["material"], tuple(compartments), doc.get("n_v"), doc.get("n_a"), doc.get("n_c"))


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    message: str
    k: Optional[int] = None

    def __str__(self):
        return f"{self.kind.phrase}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[Violation, ...] = ()
    warnings: Tuple[str, ...] = ()
    n_v: int = 0
    n_a: int = 0
    n_c: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def kinds(self) -> FrozenSet[ViolationKind]:
        return frozenset(v.kind for v in self.violations)


def validate_tmn(tmn: Tmn) -> ValidationReport:
    """
    Check the structural rules of a material network.

    Violations are returned, not raised. A network that is not weakly connected is
    reported as a warning.
    """
    violations: List[Violation] = []
    warnings: List[str] = []

    nodes = tmn.nodes
    arcs = tmn.arcs

    for k, count in sorted(Counter(c.k for c in tmn.compartments).items()):
        if count > 1:
            violations.append(Violation(ViolationKind.DUPLICATE_ID, f"k={k} is used {count} times", k))

    node_ids = {c.k for c in nodes}

    for c in nodes:
        if not c.i == c.j == c.k:
            violations.append(Violation(ViolationKind.NODE_INDEX_RULE, f"node {c.id} has i={c.i}, j={c.j}", c.k))
        if Role.TRANSPORT in c.roles:
            violations.append(Violation(ViolationKind.ROLE_RULE, f"node {c.id} carries the transport role", c.k))

    for c in arcs:
        if c.i == c.j:
            violations.append(Violation(ViolationKind.SELF_LOOP_ARC, f"arc {c.id} starts and ends at node {c.i}", c.k))
        for end in (c.i, c.j):
            if end not in node_ids:
                violations.append(Violation(ViolationKind.DANGLING_ENDPOINT, f"arc {c.id} references node {end}", c.k))
        if not c.roles <= {Role.TRANSPORT}:
            extra = ", ".join(sorted(r.value for r in c.roles - {Role.TRANSPORT}))
            violations.append(Violation(ViolationKind.ROLE_RULE, f"arc {c.id} carries role(s) {extra}", c.k))

    n_v, n_a, n_c = len(nodes), len(arcs), len(tmn.compartments)

    if tmn.n_v != n_v:
        violations.append(Violation(ViolationKind.COUNT_MISMATCH, f"declared n_v={tmn.n_v}, found {n_v} nodes"))
    if tmn.n_a != n_a:
        violations.append(Violation(ViolationKind.COUNT_MISMATCH, f"declared n_a={tmn.n_a}, found {n_a} arcs"))
    if tmn.n_c != n_c:
        violations.append(Violation(ViolationKind.COUNT_MISMATCH, f"declared n_c={tmn.n_c}, found {n_c} compartments"))
    if tmn.n_c != tmn.n_v + tmn.n_a:
        violations.append(Violation(
            ViolationKind.COUNT_MISMATCH, f"n_c={tmn.n_c} differs from n_v + n_a = {tmn.n_v + tmn.n_a}"
        ))

    if nodes:
        graph = nx.MultiDiGraph()
        graph.add_nodes_from(node_ids)
        graph.add_edges_from((c.i, c.j) for c in arcs if c.i in node_ids and c.j in node_ids)
        if not nx.is_weakly_connected(graph):
            parts = nx.number_weakly_connected_components(graph)
            warnings.append(f"network is not connected ({parts} weakly connected components)")
            logger.warning(f"Network {tmn.material!r} is not connected ({parts} components)")

    return ValidationReport(tuple(violations), tuple(warnings), n_v, n_a, n_c)


def compartmental_digraph(tmn: Tmn) -> nx.MultiDiGraph:
    """
    Build the compartmental digraph of a valid network.

    One graph node per node compartment and one edge ``i -> j`` per arc compartment,
    keyed by ``k`` so that parallel arcs are kept apart.

    :param tmn: the material network
    :raises InvalidNetwork: if :func:`validate_tmn` reports violations
    """
    report = validate_tmn(tmn)
    if not report.ok:
        raise InvalidNetwork(
            "Cannot build the digraph of an invalid network: " + "; ".join(str(v) for v in report.violations),
            report.violations,
        )

    graph = nx.MultiDiGraph(material=tmn.material)
    for c in tmn.nodes:
        graph.add_node(c.k, roles=c.roles, label=c.label)
    for c in tmn.arcs:
        graph.add_edge(c.i, c.j, key=c.k, roles=c.roles, label=c.label)

    return graph


def is_finite_time_sustainable(endpoint: Compartment, direction: Direction) -> bool:
    """
    True if material crossing ``endpoint`` in ``direction`` is finite-time sustainable.

    That is material exiting a nonrenewable reservoir, or entering a landfill, an
    incinerator or the natural environment.
    """
    direction = Direction(direction)
    if direction is Direction.EXITING:
        return Role.NONRENEWABLE_RESERVOIR in endpoint.roles
    return bool(endpoint.roles & TERMINAL_ROLES)


def load_network(path) -> Tmn:
    try:
        with open(path) as fp:
            text = fp.read()
    except OSError as err:
        raise ConfigurationError(f"Cannot read network description: {err.strerror}", path=str(path)) from err

    return Tmn.parse(text, source=str(path))


def builtin_network(name: str) -> Tmn:
    """
    Load one of the shipped networks: ``n_s`` (solids) or ``n_nz`` (net zero).
    """
    path = os.path.join(_NETWORKS_DIR, f"{name}.json")
    if not os.path.exists(path):
        raise ConfigurationError(f"No built-in network named {name!r}; choose from: {', '.join(builtin_networks())}")
    return load_network(path)


def builtin_networks() -> List[str]:
    return sorted(os.path.splitext(f)[0] for f in os.listdir(_NETWORKS_DIR) if f.endswith(".json"))



__all__ = [
    "Kind", "Role", "Direction", "TERMINAL_ROLES", "ViolationKind", "CompartmentId", "Compartment", "Tmn",
    "Violation", "ValidationReport", "validate_tmn", "compartmental_digraph", "is_finite_time_sustainable",
    "load_network", "builtin_network", "builtin_networks"
]
