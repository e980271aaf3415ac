"""Primitive product-summation formulas and their gadget counterparts.

A formula is a product of atoms g(v_1,..,v_k) with some variables summed
over {0,1}. The evaluable discipline here: every free variable occurs exactly
once and every bound variable exactly twice, which is what makes formulas and
gadgets interchangeable (bound variable = internal edge, free = dangling).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .grids import SignatureGrid, require_valid
from .signatures import Signature, signature_from_json, signature_to_json


class BudgetExceeded(RuntimeError):
    pass


class LabelViolation(ValueError):
    pass


class MultiplicityError(ValueError):
    pass


@dataclass(frozen=True)
class Atom:
    signature: Signature
    scope: tuple

    def __post_init__(self):
        object.__setattr__(self, "scope", tuple(self.scope))
        if len(self.scope) != self.signature.arity:
            raise MultiplicityError(
                f"scope length {len(self.scope)} != arity {self.signature.arity}")


@dataclass(frozen=True)
class PpsHFormula:
    free: tuple
    bound: tuple
    atoms: tuple
    labels: tuple = None  # per atom, per scope slot: "L" | "R"

    def __post_init__(self):
        object.__setattr__(self, "free", tuple(self.free))
        object.__setattr__(self, "bound", tuple(self.bound))
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if self.labels is not None:
            object.__setattr__(self, "labels",
                               tuple(tuple(l) for l in self.labels))

    @property
    def arity(self) -> int:
        return len(self.free)

    def variables(self):
        return set(self.free) | set(self.bound)


def multiplicities(psi: PpsHFormula) -> dict:
    counts = {v: 0 for v in psi.variables()}
    for atom in psi.atoms:
        for v in atom.scope:
            counts[v] = counts.get(v, 0) + 1
    return counts


def discipline(psi: PpsHFormula) -> str:
    """"pps_h" when free vars occur once and bound vars twice, else "pps"."""
    counts = multiplicities(psi)
    if any(v not in psi.free and v not in psi.bound for v in counts):
        return "pps"
    if all(counts.get(v, 0) == 1 for v in psi.free) and \
            all(counts.get(v, 0) == 2 for v in psi.bound):
        return "pps_h"
    return "pps"


def check_pps_h(psi: PpsHFormula):
    if len(set(psi.free)) != len(psi.free):
        raise MultiplicityError("duplicate free variable")
    if set(psi.free) & set(psi.bound):
        raise MultiplicityError("variable both free and bound")
    if discipline(psi) != "pps_h":
        raise MultiplicityError("multiplicities violate the once/twice discipline")


def eval_formula(psi: PpsHFormula, budget: int = 24) -> Signature:
    check_pps_h(psi)
    if len(psi.bound) > budget:
        raise BudgetExceeded(f"{len(psi.bound)} bound variables > budget {budget}")
    pos = {v: n for n, v in enumerate(psi.free)}
    pos.update({v: len(psi.free) + n for n, v in enumerate(psi.bound)})
    slots = [tuple(pos[v] for v in atom.scope) for atom in psi.atoms]

    vals = []
    assign = [0] * (len(psi.free) + len(psi.bound))
    for fbits in product((0, 1), repeat=len(psi.free)):
        assign[:len(psi.free)] = fbits
        total = None
        for bbits in product((0, 1), repeat=len(psi.bound)):
            assign[len(psi.free):] = bbits
            term = None
            for atom, sl in zip(psi.atoms, slots):
                v = atom.signature.value(tuple(assign[s] for s in sl))
                term = v if term is None else term * v
                if not isinstance(v, complex) and not v:
                    break
            if term is None:
                term = 1
            total = term if total is None else total + term
        vals.append(total)
    return Signature(vals, len(psi.free))


# -- gadget conversion -------------------------------------------------------

def formula_to_gadget(psi: PpsHFormula) -> SignatureGrid:
    check_pps_h(psi)
    occurrences = {}
    for n, atom in enumerate(psi.atoms):
        for slot, v in enumerate(atom.scope, start=1):
            occurrences.setdefault(v, []).append((n, slot))
    edges = [tuple(occurrences[v]) for v in psi.bound]
    dangling = [occurrences[v][0] for v in psi.free]

    bip = None
    if psi.labels is not None:
        bip = {}
        for n, labs in enumerate(psi.labels):
            sides = set(labs)
            if len(sides) != 1:
                bip = None
                break
            bip[n] = sides.pop()
    return SignatureGrid({n: a.signature for n, a in enumerate(psi.atoms)},
                         edges, dangling, bip)


def gadget_to_formula(grid: SignatureGrid) -> PpsHFormula:
    require_valid(grid)
    var_of = {}
    k = len(grid.dangling)
    for n, port in enumerate(grid.dangling):
        var_of[port] = n
    for n, (p, q) in enumerate(grid.edges):
        var_of[p] = var_of[q] = k + n

    atoms = []
    labels = [] if grid.bipartition is not None else None
    for vid in sorted(grid.vertices):
        f = grid.vertices[vid]
        scope = tuple(var_of[(vid, slot)] for slot in range(1, f.arity + 1))
        atoms.append(Atom(f, scope))
        if labels is not None:
            labels.append((grid.bipartition[vid],) * f.arity)
    return PpsHFormula(tuple(range(k)),
                       tuple(range(k, k + len(grid.edges))),
                       atoms, labels)


# -- clone closure on formulas ----------------------------------------------

def _reintern(psi: PpsHFormula, start: int = 0):
    """Rename variables to consecutive integers from `start`."""
    names = {}
    for v in psi.free:
        names[v] = start + len(names)
    for v in psi.bound:
        names[v] = start + len(names)
    atoms = tuple(Atom(a.signature, tuple(names[v] for v in a.scope))
                  for a in psi.atoms)
    return PpsHFormula(tuple(names[v] for v in psi.free),
                       tuple(names[v] for v in psi.bound),
                       atoms, psi.labels), start + len(names)


def _occurrence_labels(psi: PpsHFormula, var):
    out = []
    for n, atom in enumerate(psi.atoms):
        for slot, v in enumerate(atom.scope):
            if v == var:
                lab = psi.labels[n][slot] if psi.labels is not None else None
                out.append(lab)
    return out


def closure_step(op: str, *operands) -> PpsHFormula:
    if op == "tensor":
        p1, p2 = operands
        check_pps_h(p1)
        check_pps_h(p2)
        p1, nxt = _reintern(p1, 0)
        p2, _ = _reintern(p2, nxt)
        labels = None
        if p1.labels is not None and p2.labels is not None:
            labels = p1.labels + p2.labels
        return PpsHFormula(p1.free + p2.free, p1.bound + p2.bound,
                           p1.atoms + p2.atoms, labels)

    if op == "permute":
        psi, pi = operands
        check_pps_h(psi)
        if sorted(pi) != list(range(1, psi.arity + 1)):
            raise ValueError(f"not a permutation of 1..{psi.arity}: {pi}")
        return PpsHFormula(tuple(psi.free[p - 1] for p in pi), psi.bound,
                           psi.atoms, psi.labels)

    if op in ("contract", "labelled_contract"):
        psi, i, j = operands
        check_pps_h(psi)
        if not (1 <= i < j <= psi.arity):
            raise IndexError(f"bad contraction pair ({i}, {j})")
        u, w = psi.free[i - 1], psi.free[j - 1]
        if op == "labelled_contract":
            if psi.labels is None:
                raise LabelViolation("formula carries no labels")
            lu = _occurrence_labels(psi, u)
            lw = _occurrence_labels(psi, w)
            if len(lu) != 1 or len(lw) != 1 or {lu[0], lw[0]} != {"L", "R"}:
                raise LabelViolation(
                    f"arguments {i},{j} carry labels {lu + lw}, need one L and one R")
        atoms = tuple(Atom(a.signature, tuple(u if v == w else v for v in a.scope))
                      for a in psi.atoms)
        free = tuple(v for v in psi.free if v not in (u, w))
        return PpsHFormula(free, psi.bound + (u,), atoms, psi.labels)

    raise ValueError(f"unknown closure op: {op}")


# -- file format --------------------------------------------------------------

def formula_to_json(psi: PpsHFormula) -> dict:
    out = {
        "free": list(psi.free),
        "bound": list(psi.bound),
        "atoms": [{"fn": signature_to_json(a.signature), "scope": list(a.scope)}
                  for a in psi.atoms],
    }
    if psi.labels is not None:
        out["labels"] = {str(n): list(labs) for n, labs in enumerate(psi.labels)}
    return out


def formula_from_json(obj) -> PpsHFormula:
    atoms = [Atom(signature_from_json(a["fn"]), tuple(a["scope"]))
             for a in obj.get("atoms", [])]
    labels = None
    if "labels" in obj:
        labels = tuple(tuple(obj["labels"][str(n)]) for n in range(len(atoms)))
    return PpsHFormula(tuple(obj.get("free", ())), tuple(obj.get("bound", ())),
                       atoms, labels)
