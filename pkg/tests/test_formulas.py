import random

import pytest

from holant.evaluation import contract_network
from holant.formulas import (
    Atom,
    BudgetExceeded,
    LabelViolation,
    MultiplicityError,
    PpsHFormula,
    check_pps_h,
    closure_step,
    discipline,
    eval_formula,
    formula_from_json,
    formula_to_gadget,
    formula_to_json,
    gadget_to_formula,
    multiplicities,
)
from holant.grids import validate
from holant.signatures import Signature

from conftest import rand_open_grid, rand_sig

EQ2 = Signature.named("EQ", 2)
EQ3 = Signature.named("EQ", 3)
NEQ = Signature.named("NEQ")


def chain():
    # psi(x) = sum_y EQ3(x, y, y): one free var, one bound pair
    return PpsHFormula(free=("x",), bound=("y",),
                       atoms=(Atom(EQ3, ("x", "y", "y")),))


def two_atom():
    # psi(x, z) = sum_y EQ2(x, y) NEQ(y, z)
    return PpsHFormula(free=("x", "z"), bound=("y",),
                       atoms=(Atom(EQ2, ("x", "y")), Atom(NEQ, ("y", "z"))))


class TestStructure:
    def test_atom_scope_must_match_arity(self):
        with pytest.raises(MultiplicityError):
            Atom(EQ2, ("x",))

    def test_multiplicities(self):
        counts = multiplicities(two_atom())
        assert counts == {"x": 1, "y": 2, "z": 1}

    def test_discipline_pps_h(self):
        assert discipline(two_atom()) == "pps_h"

    def test_discipline_degrades_to_pps(self):
        psi = PpsHFormula(free=("x",), bound=(),
                          atoms=(Atom(EQ2, ("x", "x")),))
        assert discipline(psi) == "pps"

    def test_check_pps_h_rejects_free_and_bound_overlap(self):
        psi = PpsHFormula(free=("x",), bound=("x",),
                          atoms=(Atom(EQ2, ("x", "x")),))
        with pytest.raises(MultiplicityError):
            check_pps_h(psi)

    def test_check_pps_h_rejects_thrice_used(self):
        psi = PpsHFormula(free=(), bound=("y",),
                          atoms=(Atom(EQ3, ("y", "y", "y")),))
        with pytest.raises(MultiplicityError):
            check_pps_h(psi)


class TestEval:
    def test_chain_value(self):
        f = eval_formula(chain())
        # EQ3 summed over a matched pair of its legs is EQ1-ish: [1, 1]
        assert f == Signature([1, 1])

    def test_two_atom_value(self):
        f = eval_formula(two_atom())
        # x routed through EQ2 then flipped by NEQ
        assert f == Signature([0, 1, 1, 0])

    def test_free_order_is_argument_order(self):
        psi = PpsHFormula(free=("a", "b"), bound=(),
                          atoms=(Atom(Signature([1, 2, 3, 4]), ("b", "a")),))
        f = eval_formula(psi)
        assert f.value((0, 1)) == 3  # f(a=0,b=1) = atom(b=1,a=0)

    def test_closed_formula_gives_arity_zero(self):
        psi = PpsHFormula(free=(), bound=("y",),
                          atoms=(Atom(Signature([2, 5]), ("y",)),
                                 Atom(Signature([1, 1]), ("y",))))
        f = eval_formula(psi)
        assert f.arity == 0
        assert f.values[0] == 7

    def test_budget(self):
        atoms = tuple(Atom(EQ2, (f"x{i}", f"y{i}")) for i in range(20))
        psi = PpsHFormula(free=tuple(f"x{i}" for i in range(20)),
                          bound=tuple(f"y{i}" for i in range(20)),
                          atoms=atoms + tuple(
                              Atom(Signature([1, 1]), (f"y{i}",)) for i in range(20)))
        with pytest.raises(BudgetExceeded):
            eval_formula(psi, budget=10)


class TestGadgetBridge:
    def test_formula_to_gadget_matches_eval(self, rng):
        for _ in range(15):
            grid = rand_open_grid(rng, max_vertices=4, max_arity=3, max_legs=4)
            psi = gadget_to_formula(grid)
            assert discipline(psi) == "pps_h"
            f1 = eval_formula(psi)
            f2 = contract_network(grid)
            assert f1 == f2

    def test_round_trip_through_grid(self):
        psi = two_atom()
        grid = formula_to_gadget(psi)
        assert validate(grid).ok
        back = gadget_to_formula(grid)
        assert eval_formula(back) == eval_formula(psi)

    def test_gadget_to_formula_labels(self):
        from holant.grids import SignatureGrid
        grid = SignatureGrid({0: EQ2, 1: NEQ},
                             edges=[((0, 1), (1, 1))],
                             dangling=[(0, 2), (1, 2)],
                             bipartition={0: "L", 1: "R"})
        psi = gadget_to_formula(grid)
        assert psi.labels is not None
        flat = [l for labs in psi.labels for l in labs]
        assert set(flat) == {"L", "R"}


class TestClosure:
    def test_tensor(self):
        psi = closure_step("tensor", chain(), chain())
        assert psi.arity == 2
        f = eval_formula(psi)
        assert f == Signature([1, 1]).tensor(Signature([1, 1]))

    def test_tensor_renames_apart(self):
        # same variable names on both sides must not collide
        psi = closure_step("tensor", two_atom(), two_atom())
        assert len(psi.variables()) == 6
        check_pps_h(psi)

    def test_permute(self):
        base = PpsHFormula(free=("a", "b"), bound=(),
                           atoms=(Atom(Signature([1, 2, 3, 4]), ("a", "b")),))
        psi = closure_step("permute", base, (2, 1))
        assert eval_formula(psi) == eval_formula(base).permute((2, 1))

    def test_permute_rejects_bad(self):
        with pytest.raises(ValueError):
            closure_step("permute", two_atom(), (1, 1))

    def test_contract(self):
        base = PpsHFormula(free=("a", "b"), bound=(),
                           atoms=(Atom(Signature([1, 2, 3, 4]), ("a", "b")),))
        psi = closure_step("contract", base, 1, 2)
        assert psi.arity == 0
        assert eval_formula(psi).values[0] == 5

    def test_labelled_contract_needs_opposite_labels(self):
        lab = PpsHFormula(free=("x", "z"), bound=("y",),
                          atoms=(Atom(EQ2, ("x", "y")), Atom(NEQ, ("y", "z"))),
                          labels=(("L", "L"), ("R", "R")))
        psi = closure_step("labelled_contract", lab, 1, 2)
        assert psi.arity == 0

    def test_labelled_contract_rejects_same_side(self):
        lab = PpsHFormula(free=("x", "z"), bound=(),
                          atoms=(Atom(EQ2, ("x", "z")),),
                          labels=(("L", "L"),))
        with pytest.raises(LabelViolation):
            closure_step("labelled_contract", lab, 1, 2)

    def test_labelled_contract_requires_labels(self):
        with pytest.raises(LabelViolation):
            closure_step("labelled_contract", two_atom(), 1, 2)

    def test_unknown_op(self):
        with pytest.raises(ValueError):
            closure_step("compose", chain(), chain())

    def test_contract_matches_direct_sum(self, rng):
        for _ in range(15):
            k = rng.randint(2, 4)
            f = rand_sig(rng, k)
            names = tuple(f"v{i}" for i in range(k))
            psi = PpsHFormula(free=names, bound=(), atoms=(Atom(f, names),))
            i = rng.randint(1, k - 1)
            j = rng.randint(i + 1, k)
            got = eval_formula(closure_step("contract", psi, i, j))
            assert got == f.contract(i, j)


class TestJson:
    def test_round_trip(self):
        psi = two_atom()
        obj = formula_to_json(psi)
        back = formula_from_json(obj)
        assert eval_formula(back) == eval_formula(psi)
        assert back.free == psi.free

    def test_labels_round_trip(self):
        lab = PpsHFormula(free=("x", "z"), bound=("y",),
                          atoms=(Atom(EQ2, ("x", "y")), Atom(NEQ, ("y", "z"))),
                          labels=(("L", "L"), ("R", "R")))
        back = formula_from_json(formula_to_json(lab))
        assert back.labels == (("L", "L"), ("R", "R"))

    def test_atoms_use_fn_and_scope_keys(self):
        obj = formula_to_json(two_atom())
        assert set(obj) >= {"free", "bound", "atoms"}
        assert all(set(a) == {"fn", "scope"} for a in obj["atoms"])
