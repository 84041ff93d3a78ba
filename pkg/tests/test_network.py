"""Tests for circsim.network."""

import pytest

from circsim.exceptions import ConfigurationError, InvalidNetwork, UnknownCompartment
from circsim.network import (
    Compartment, CompartmentId, Direction, Kind, Role, Tmn, ViolationKind, builtin_networks, compartmental_digraph,
    is_finite_time_sustainable, load_network, validate_tmn
)


class TestCompartmentId:
    def test_str(self) -> None:
        assert str(CompartmentId(6, 2, 3)) == "c^6_{2,3}"

    def test_rejects_zero_index(self) -> None:
        with pytest.raises(ConfigurationError, match="positive integer"):
            CompartmentId(0, 1, 1)

    def test_unknown_role_rejected(self) -> None:
        with pytest.raises(ConfigurationError, match="Invalid compartment"):
            Compartment(CompartmentId(1, 1, 1), "node", frozenset({"warehouse"}))


class TestValidateTmn:
    def test_solids_network_is_valid(self, n_s) -> None:
        report = validate_tmn(n_s)
        assert report.ok
        assert (report.n_v, report.n_a, report.n_c) == (3, 3, 6)
        assert report.warnings == ()

    def test_empty_network_is_valid(self) -> None:
        report = validate_tmn(Tmn("nothing"))
        assert report.ok
        assert report.n_c == 0

    def test_dangling_arc_endpoint(self) -> None:
        tmn = Tmn("x", (Compartment.node(1, Role.PROCESS), Compartment.arc(4, 1, 5)))
        report = validate_tmn(tmn)
        assert not report.ok
        assert report.kinds() == {ViolationKind.DANGLING_ENDPOINT}
        assert "dangling arc endpoint" in str(report.violations[0])

    def test_duplicate_id(self) -> None:
        tmn = Tmn("x", (Compartment.node(1), Compartment.node(2), Compartment.arc(2, 1, 2)))
        assert ViolationKind.DUPLICATE_ID in validate_tmn(tmn).kinds()

    def test_node_index_rule(self) -> None:
        tmn = Tmn("x", (Compartment(CompartmentId(1, 1, 2), Kind.NODE),))
        assert ViolationKind.NODE_INDEX_RULE in validate_tmn(tmn).kinds()

    def test_self_loop_arc(self) -> None:
        tmn = Tmn("x", (Compartment.node(1), Compartment.arc(2, 1, 1)))
        assert ViolationKind.SELF_LOOP_ARC in validate_tmn(tmn).kinds()

    def test_transport_node_breaks_role_rule(self) -> None:
        tmn = Tmn("x", (Compartment.node(1, Role.TRANSPORT),))
        assert validate_tmn(tmn).kinds() == {ViolationKind.ROLE_RULE}

    def test_declared_counts_must_match(self) -> None:
        tmn = Tmn("x", (Compartment.node(1), Compartment.node(2), Compartment.arc(3, 1, 2)), n_v=3, n_a=1, n_c=4)
        assert validate_tmn(tmn).kinds() == {ViolationKind.COUNT_MISMATCH}

    def test_disconnected_network_warns(self) -> None:
        tmn = Tmn("x", (Compartment.node(1), Compartment.node(2)))
        report = validate_tmn(tmn)
        assert report.ok
        assert "not connected" in report.warnings[0]


class TestCompartmentalDigraph:
    def test_solids_network(self, n_s) -> None:
        graph = compartmental_digraph(n_s)
        assert sorted(graph.nodes) == [1, 2, 3]
        assert sorted(graph.edges(keys=True)) == [(1, 2, 4), (2, 3, 5), (2, 3, 6)]

    def test_single_node(self) -> None:
        graph = compartmental_digraph(Tmn("x", (Compartment.node(1),)))
        assert graph.number_of_nodes() == 1
        assert graph.number_of_edges() == 0

    def test_net_zero_network(self, n_nz) -> None:
        graph = compartmental_digraph(n_nz)
        assert graph.number_of_nodes() == 3
        assert sorted(graph.edges()) == [(1, 2), (2, 3)]

    def test_invalid_network_raises(self) -> None:
        tmn = Tmn("x", (Compartment.node(1), Compartment.arc(4, 1, 5)))
        with pytest.raises(InvalidNetwork, match="dangling arc endpoint") as exc:
            compartmental_digraph(tmn)
        assert exc.value.violations[0].k == 4


class TestFiniteTimeSustainable:
    def test_reservoir_exiting(self) -> None:
        node = Compartment.node(1, Role.NONRENEWABLE_RESERVOIR)
        assert is_finite_time_sustainable(node, Direction.EXITING)
        assert not is_finite_time_sustainable(node, Direction.ENTERING)

    def test_incinerator_entering(self) -> None:
        assert is_finite_time_sustainable(Compartment.node(3, Role.INCINERATOR), "entering")

    @pytest.mark.parametrize("role", [Role.LANDFILL, Role.NATURAL_ENVIRONMENT])
    def test_terminal_entering(self, role) -> None:
        assert is_finite_time_sustainable(Compartment.node(3, role), Direction.ENTERING)

    def test_process_entering(self) -> None:
        assert not is_finite_time_sustainable(Compartment.node(2, Role.PROCESS), Direction.ENTERING)


class TestTmnFiles:
    def test_builtin_networks(self) -> None:
        assert builtin_networks() == ["n_nz", "n_s"]

    def test_serialized_network_parses_back(self, n_s) -> None:
        again = Tmn.parse(n_s.as_string())
        assert again == n_s
        assert validate_tmn(again).ok

    def test_compartment_lookup(self, n_s) -> None:
        assert n_s.compartment(6).label == "truck to incinerator"
        assert 6 in n_s and 7 not in n_s
        with pytest.raises(UnknownCompartment):
            n_s.compartment(7)

    def test_missing_keys(self, write_file) -> None:
        path = write_file("net.json", '{"material": "x"}')
        with pytest.raises(ConfigurationError, match="Keys missing from network description: compartments"):
            load_network(path)

    def test_invalid_json_reports_line(self, write_file) -> None:
        path = write_file("net.json", '{\n"material": "x",\n}')
        with pytest.raises(ConfigurationError) as exc:
            load_network(path)
        assert exc.value.lineno == 3

    @pytest.mark.parametrize("compartments", ['{"k": 1}', '"k1"', "3", "null"])
    def test_compartments_must_be_a_list(self, compartments, write_file) -> None:
        path = write_file("net.json", '{"material": "x", "compartments": %s}' % compartments)
        with pytest.raises(ConfigurationError, match="Network compartments must be a list") as exc:
            load_network(path)
        assert exc.value.path == str(path)

    def test_roles_must_be_a_list(self) -> None:
        text = '{"material": "x", "compartments": [{"k": 1, "i": 1, "j": 1, "kind": "node", "roles": "incinerator"}]}'
        with pytest.raises(ConfigurationError, match="Roles of compartment #0 must be a list"):
            Tmn.parse(text)
