import json

import pytest

from holant.grids import (
    SignatureGrid,
    ValidationError,
    disjoint_union,
    grid_from_json,
    grid_from_parts,
    grid_to_json,
    load_grid,
    require_valid,
    save_grid,
    validate,
)
from holant.signatures import Signature

EQ2 = Signature.named("EQ", 2)
EQ3 = Signature.named("EQ", 3)
NEQ = Signature.named("NEQ")


def triangle():
    # 3-cycle of EQ2 vertices, closed
    return SignatureGrid(
        vertices={0: EQ2, 1: EQ2, 2: EQ2},
        edges=[((0, 2), (1, 1)), ((1, 2), (2, 1)), ((2, 2), (0, 1))],
    )


def open_path():
    # EQ3 - EQ2 with three dangling legs
    return SignatureGrid(
        vertices={0: EQ3, 1: EQ2},
        edges=[((0, 3), (1, 1))],
        dangling=[(0, 1), (0, 2), (1, 2)],
    )


class TestShape:
    def test_arity_and_closed(self):
        assert triangle().closed
        assert triangle().arity == 0
        g = open_path()
        assert not g.closed
        assert g.arity == 3

    def test_ports_enumerates_one_based_slots(self):
        g = open_path()
        assert sorted(g.ports()) == [(0, 1), (0, 2), (0, 3), (1, 1), (1, 2)]

    def test_with_vertex_replaces(self):
        g = triangle().with_vertex(1, NEQ)
        assert g.vertices[1] == NEQ
        assert triangle().vertices[1] == EQ2  # original untouched

    def test_is_exact(self):
        assert triangle().is_exact()
        g = triangle().with_vertex(0, Signature([1.0, 0, 0, 1.0]))
        assert not g.is_exact()

    def test_grid_from_parts(self):
        g = grid_from_parts([EQ2], dangling=[(0, 1), (0, 2)])
        assert g.arity == 2 and validate(g).ok


class TestValidation:
    def test_valid_grid(self):
        report = validate(triangle())
        assert report.ok and not report.issues
        assert bool(report)

    def test_unknown_vertex_in_edge(self):
        g = SignatureGrid({0: EQ2}, edges=[((0, 1), (7, 1))],
                          dangling=[(0, 2)])
        report = validate(g)
        assert not report.ok
        assert any("unknown vertex 7" in msg for _, msg in report.issues)

    def test_slot_out_of_range(self):
        g = SignatureGrid({0: EQ2}, dangling=[(0, 1), (0, 3)])
        report = validate(g)
        assert any("out of range" in msg for _, msg in report.issues)

    def test_unbound_port(self):
        g = SignatureGrid({0: EQ2}, dangling=[(0, 1)])
        report = validate(g)
        assert any("unbound" in msg for _, msg in report.issues)

    def test_port_used_twice(self):
        g = SignatureGrid({0: EQ2, 1: EQ2},
                          edges=[((0, 1), (1, 1)), ((0, 1), (1, 2))],
                          dangling=[(0, 2)])
        report = validate(g)
        assert any("used 2 times" in msg for _, msg in report.issues)

    def test_bipartition_same_label_edge_rejected(self):
        g = SignatureGrid({0: EQ2, 1: EQ2},
                          edges=[((0, 1), (1, 1)), ((0, 2), (1, 2))],
                          bipartition={0: "L", 1: "L"})
        report = validate(g)
        assert any("violates bipartition" in msg for _, msg in report.issues)

    def test_bipartition_must_cover_vertices(self):
        g = SignatureGrid({0: EQ2, 1: EQ2},
                          edges=[((0, 1), (1, 1)), ((0, 2), (1, 2))],
                          bipartition={0: "L"})
        report = validate(g)
        assert any("unlabelled" in msg for _, msg in report.issues)

    def test_require_valid_raises(self):
        g = SignatureGrid({0: EQ2}, dangling=[(0, 1)])
        with pytest.raises(ValidationError):
            require_valid(g)
        require_valid(triangle())


class TestUnion:
    def test_disjoint_union_closed(self):
        g = disjoint_union(triangle(), triangle())
        assert len(g.vertices) == 6
        assert len(g.edges) == 6
        assert validate(g).ok

    def test_dangling_order_g1_first(self):
        g1 = open_path()
        g2 = SignatureGrid({5: NEQ}, dangling=[(5, 1), (5, 2)])
        g = disjoint_union(g1, g2)
        assert g.arity == 5
        # first three legs are g1's, in g1 order
        assert [g.vertices[v].arity for v, _ in g.dangling[:3]] == [3, 3, 2]
        assert validate(g).ok

    def test_bipartition_carried_when_both_sides_have_one(self):
        g1 = SignatureGrid({0: EQ2, 1: NEQ},
                           edges=[((0, 1), (1, 1)), ((0, 2), (1, 2))],
                           bipartition={0: "L", 1: "R"})
        g = disjoint_union(g1, g1)
        assert g.bipartition is not None
        assert sorted(g.bipartition.values()) == ["L", "L", "R", "R"]
        assert disjoint_union(g1, triangle()).bipartition is None


class TestJson:
    def test_round_trip_closed(self):
        g = triangle()
        g2 = grid_from_json(grid_to_json(g))
        assert g2.vertices == g.vertices
        assert g2.edges == g.edges
        assert g2.dangling == g.dangling

    def test_round_trip_with_bipartition(self):
        g = SignatureGrid({0: EQ2, 1: NEQ},
                          edges=[((0, 1), (1, 1))],
                          dangling=[(0, 2), (1, 2)],
                          bipartition={0: "L", 1: "R"})
        g2 = grid_from_json(grid_to_json(g))
        assert g2.bipartition == {0: "L", 1: "R"}
        assert g2.dangling == ((0, 2), (1, 2))

    def test_json_is_json_serializable(self):
        blob = json.dumps(grid_to_json(open_path()))
        g2 = grid_from_json(json.loads(blob))
        assert g2.vertices[0] == EQ3

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "g.json"
        save_grid(triangle(), path)
        g2 = load_grid(path)
        assert g2.vertices == triangle().vertices
        assert g2.edges == triangle().edges
