"""Z-preserving grid compilers.

Everything in this module rewrites one counting instance into another with
exactly the same partition function: holographic reassignment on bipartite
grids, the structural rewrites (edge subdivision and its inverse, forced
bipartition, label forgetting, gadget substitution), twisted-world stripping,
the #CSP bridge, and the independent-set reduction together with its
enumeration oracle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .scalars import as_scalar, exact_sqrt
from .signatures import (ArityMismatch, Signature, Transform2, holo,
                         sig_max_residual)
from .grids import SignatureGrid, require_valid
from .formulas import BudgetExceeded
from .evaluation import realize_gadget
from .synthesis import SingularMatrix


class NotBipartite(ValueError):
    pass


class RuleInapplicable(ValueError):
    pass


class UnusedVariable(ValueError):
    pass


class DegreeTooLarge(ValueError):
    pass


_NEQ = Signature.named("NEQ_2")
_EQ2 = Signature.named("EQ_2")
_NAND = Signature.named("NAND")


# -- instance types ------------------------------------------------------------

@dataclass(frozen=True)
class CspInstance:
    """Weighted #CSP instance: constraints are (function, scope) pairs and
    scopes may repeat variables."""
    variables: frozenset
    constraints: tuple  # of (Signature, tuple of variables)

    def __post_init__(self):
        object.__setattr__(self, "variables", frozenset(self.variables))
        object.__setattr__(self, "constraints",
                           tuple((f, tuple(scope))
                                 for f, scope in self.constraints))
        for n, (f, scope) in enumerate(self.constraints):
            if len(scope) != f.arity:
                raise ArityMismatch(
                    f"constraint {n}: scope length {len(scope)} != arity {f.arity}")
            for v in scope:
                if v not in self.variables:
                    raise UnusedVariable(f"constraint {n} mentions unknown variable {v!r}")

    def multiplicity(self, v) -> int:
        return sum(scope.count(v) for _, scope in self.constraints)


@dataclass(frozen=True)
class SimpleGraph:
    n: int
    edges: tuple  # of (u, v) with u < v

    def __post_init__(self):
        norm = []
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u},{v}) out of range for n={self.n}")
            norm.append((min(u, v), max(u, v)))
        if len(set(norm)) != len(norm):
            raise ValueError("duplicate edge")
        object.__setattr__(self, "edges", tuple(norm))

    def adjacency(self):
        adj = [set() for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return tuple(frozenset(s) for s in adj)

    def degree(self, v) -> int:
        return sum(1 for e in self.edges if v in e)

    @property
    def max_degree(self) -> int:
        return max((self.degree(v) for v in range(self.n)), default=0)


def graph_to_json(g: SimpleGraph) -> dict:
    return {"n": g.n, "edges": [list(e) for e in g.edges]}


def graph_from_json(obj) -> SimpleGraph:
    return SimpleGraph(int(obj["n"]), tuple(tuple(e) for e in obj["edges"]))


def load_graph(path) -> SimpleGraph:
    with open(path) as fh:
        return graph_from_json(json.load(fh))


def save_graph(g: SimpleGraph, path):
    with open(path, "w") as fh:
        json.dump(graph_to_json(g), fh)
        fh.write("\n")


# -- holographic reassignment --------------------------------------------------

def valiant_transform(grid: SignatureGrid, M: Transform2) -> SignatureGrid:
    """Left vertices pick up M, Right vertices (M^-1)^T; every edge crosses
    the bipartition so the pair cancels and Z is unchanged."""
    require_valid(grid)
    if grid.bipartition is None:
        raise NotBipartite("holographic transform needs a bipartitioned grid")
    if not M.is_invertible():
        raise SingularMatrix("transform matrix is singular")
    left = M
    right = M.inverse().transpose()
    verts = {vid: holo(left if grid.bipartition[vid] == "L" else right, f)
             for vid, f in grid.vertices.items()}
    return SignatureGrid(verts, grid.edges, grid.dangling, grid.bipartition)


# -- structural rewrites ---------------------------------------------------------

def _fresh_ids(grid, count):
    base = max((v for v in grid.vertices if isinstance(v, int)), default=-1) + 1
    return list(range(base, base + count))


def _subdivide(grid, which, new_label):
    """Insert a degree-2 vertex on each edge in `which`; label handling is the
    caller's business via new_label(edge index)."""
    verts = dict(grid.vertices)
    edges = []
    bip = dict(grid.bipartition) if grid.bipartition is not None else None
    fresh = iter(_fresh_ids(grid, len(which)))
    for n, (p, q) in enumerate(grid.edges):
        if n not in which:
            edges.append((p, q))
            continue
        w = next(fresh)
        verts[w] = _EQ2
        edges.append((p, (w, 1)))
        edges.append(((w, 2), q))
        if bip is not None:
            bip[w] = new_label(n)
    return verts, tuple(edges), bip


def rewrite(grid: SignatureGrid, rule: str, gadget_map: dict = None,
            labels: dict = None) -> SignatureGrid:
    """Apply one Z-preserving structural rewrite.

    a_subdivide          put an EQ_2 on every edge; output is bipartite
    b_unsubdivide        inverse of a: contract away degree-2 Right EQ_2s
    c_bipartify          subdivide only the edges joining same-labelled ends
    d_forget             drop the bipartition labels
    e_substitute         replace vertices by gadgets from gadget_map
    f_substitute_bipartite  same, keeping a consistent bipartition
    """
    require_valid(grid)
    if rule == "a_subdivide":
        bip = {vid: "L" for vid in grid.vertices}
        verts = dict(grid.vertices)
        edges = []
        fresh = iter(_fresh_ids(grid, len(grid.edges)))
        for p, q in grid.edges:
            w = next(fresh)
            verts[w] = _EQ2
            bip[w] = "R"
            edges.append((p, (w, 1)))
            edges.append(((w, 2), q))
        return SignatureGrid(verts, tuple(edges), grid.dangling, bip)

    if rule == "b_unsubdivide":
        if grid.bipartition is None:
            raise RuleInapplicable("unsubdivide needs a bipartitioned grid")
        gone = [vid for vid, lab in grid.bipartition.items() if lab == "R"]
        at = {}  # port of a removed vertex -> the far port of its edge
        edges = []
        for p, q in grid.edges:
            if p[0] in grid.bipartition and grid.bipartition[p[0]] == "R":
                p, q = q, p
            if grid.bipartition[q[0]] == "R":
                at[q] = p
            else:
                edges.append((p, q))
        for vid in gone:
            f = grid.vertices[vid]
            if f != _EQ2:
                raise RuleInapplicable(f"Right vertex {vid} is not EQ_2")
            if (vid, 1) not in at or (vid, 2) not in at:
                raise RuleInapplicable(f"Right vertex {vid} has a dangling leg")
            edges.append((at[(vid, 1)], at[(vid, 2)]))
        verts = {vid: f for vid, f in grid.vertices.items() if vid not in gone}
        return SignatureGrid(verts, tuple(edges), grid.dangling, None)

    if rule == "c_bipartify":
        lab = labels if labels is not None else grid.bipartition
        if lab is None:
            raise RuleInapplicable("bipartify needs vertex labels")
        missing = [vid for vid in grid.vertices if vid not in lab]
        if missing:
            raise RuleInapplicable(f"unlabelled vertices: {missing}")
        which = {n for n, (p, q) in enumerate(grid.edges)
                 if lab[p[0]] == lab[q[0]]}
        other = {"L": "R", "R": "L"}
        verts = dict(grid.vertices)
        edges = []
        bip = dict(lab)
        fresh = iter(_fresh_ids(grid, len(which)))
        for n, (p, q) in enumerate(grid.edges):
            if n not in which:
                edges.append((p, q))
                continue
            w = next(fresh)
            verts[w] = _EQ2
            bip[w] = other[lab[p[0]]]
            edges.append((p, (w, 1)))
            edges.append(((w, 2), q))
        return SignatureGrid(verts, tuple(edges), grid.dangling, bip)

    if rule == "d_forget":
        if grid.bipartition is None:
            raise RuleInapplicable("grid carries no bipartition to forget")
        return SignatureGrid(grid.vertices, grid.edges, grid.dangling, None)

    if rule == "e_substitute":
        return _substitute(grid, gadget_map, bipartite=False)

    if rule == "f_substitute_bipartite":
        if grid.bipartition is None:
            raise RuleInapplicable("bipartite substitution needs labels")
        return _substitute(grid, gadget_map, bipartite=True)

    raise RuleInapplicable(f"unknown rule {rule!r}")


def _gadget_realizes(gadget: SignatureGrid, f: Signature) -> bool:
    got = realize_gadget(gadget)
    if got.arity != f.arity:
        return False
    if got.is_exact() and f.is_exact():
        return got == f
    return sig_max_residual(got, f) <= 1e-9 * (1.0 + f.max_abs())


def _substitute(grid, gadget_map, bipartite):
    if not gadget_map:
        raise RuleInapplicable("empty gadget map")
    for vid, gadget in gadget_map.items():
        if vid not in grid.vertices:
            raise RuleInapplicable(f"no vertex {vid} to replace")
        require_valid(gadget)
        if not _gadget_realizes(gadget, grid.vertices[vid]):
            raise RuleInapplicable(
                f"gadget for vertex {vid} does not realize its signature")
        if bipartite:
            if gadget.bipartition is None:
                raise RuleInapplicable(f"gadget for vertex {vid} is unlabelled")
            want = grid.bipartition[vid]
            for gv, _ in gadget.dangling:
                if gadget.bipartition[gv] != want:
                    raise RuleInapplicable(
                        f"gadget for vertex {vid} exposes a "
                        f"{gadget.bipartition[gv]} leg on a {want} vertex")

    verts = {}
    bip = {} if bipartite else None
    for vid, f in grid.vertices.items():
        if vid not in gadget_map:
            verts[vid] = f
            if bipartite:
                bip[vid] = grid.bipartition[vid]

    # port -> replacement port, filled in as gadget internals get fresh ids
    port_map = {}
    edges = []
    fresh = iter(_fresh_ids(
        grid, sum(len(g.vertices) for g in gadget_map.values())))
    for vid, gadget in gadget_map.items():
        local = {gv: next(fresh) for gv in gadget.vertices}
        for gv, gf in gadget.vertices.items():
            verts[local[gv]] = gf
            if bipartite:
                bip[local[gv]] = gadget.bipartition[gv]
        for (pu, pv) in gadget.edges:
            edges.append(((local[pu[0]], pu[1]), (local[pv[0]], pv[1])))
        for slot, (gv, gs) in enumerate(gadget.dangling, start=1):
            port_map[(vid, slot)] = (local[gv], gs)

    def mapped(port):
        return port_map.get(tuple(port), tuple(port))

    edges.extend((mapped(p), mapped(q)) for p, q in grid.edges)
    dangling = tuple(mapped(p) for p in grid.dangling)
    return SignatureGrid(verts, tuple(edges), dangling, bip)


# -- twisted-world stripping -----------------------------------------------------

def strip_K(grid: SignatureGrid, K: Transform2) -> SignatureGrid:
    """Undo a twisted transform grid-wide: replace K∘f by f at each vertex and
    put a disequality on every edge.  K^T K = X makes each subdivided edge
    contract back to the original pairing, so Z is preserved exactly."""
    require_valid(grid)
    gram = K.transpose() @ K
    resid = max(abs(complex(gram.entry(r, c)) - (1.0 if r != c else 0.0))
                for r in range(2) for c in range(2))
    if resid > 1e-12:
        raise ValueError("stripping needs K^T K = X")
    Kinv = K.inverse()
    verts = {vid: holo(Kinv, f) for vid, f in grid.vertices.items()}
    bip = {vid: "L" for vid in grid.vertices}
    edges = []
    fresh = iter(_fresh_ids(grid, len(grid.edges)))
    for p, q in grid.edges:
        w = next(fresh)
        verts[w] = _NEQ
        bip[w] = "R"
        edges.append((p, (w, 1)))
        edges.append(((w, 2), q))
    return SignatureGrid(verts, tuple(edges), grid.dangling, bip)


# -- the #CSP bridge --------------------------------------------------------------

def csp_to_grid(csp: CspInstance) -> SignatureGrid:
    """One vertex per constraint, one equality vertex per variable; the
    equality fans the variable's value out to every occurrence."""
    order = sorted(csp.variables, key=repr)
    mult = {v: csp.multiplicity(v) for v in order}
    unused = [v for v in order if mult[v] == 0]
    if unused:
        raise UnusedVariable(f"variables never used: {unused}")

    verts = {}
    bip = {}
    for n, (f, _) in enumerate(csp.constraints):
        verts[n] = f
        bip[n] = "L"
    var_id = {}
    next_slot = {}
    for n, v in enumerate(order, start=len(csp.constraints)):
        var_id[v] = n
        verts[n] = Signature.named("EQ", mult[v])
        bip[n] = "R"
        next_slot[v] = 1

    edges = []
    for n, (_, scope) in enumerate(csp.constraints):
        for pos, v in enumerate(scope, start=1):
            edges.append(((n, pos), (var_id[v], next_slot[v])))
            next_slot[v] += 1
    return SignatureGrid(verts, tuple(edges), (), bip)


def csp_value_brute(csp: CspInstance, budget: int = 20):
    """Direct sum over all assignments; the oracle the bridge is tested against."""
    order = sorted(csp.variables, key=repr)
    if len(order) > budget:
        raise BudgetExceeded(f"{len(order)} variables > brute budget {budget}")
    pos = {v: n for n, v in enumerate(order)}
    total = as_scalar(0)
    for mask in range(1 << len(order)):
        term = as_scalar(1)
        for f, scope in csp.constraints:
            idx = 0
            for v in scope:
                idx = (idx << 1) | ((mask >> pos[v]) & 1)
            term = term * f.values[idx]
        total = total + term
    return total


# -- independent sets --------------------------------------------------------------

def independent_set_grid(g: SimpleGraph, lam, cap: int = 12) -> SignatureGrid:
    """Compile Z_G(λ) = Σ_I λ^|I| into a bipartite grid: a vertex of degree d
    becomes EQ_{d+1} whose legs feed a NAND per incident edge plus one pendant
    [1, λ] unary that pays for membership in the independent set."""
    deg = [g.degree(v) for v in range(g.n)]
    worst = max(deg, default=0)
    if worst + 1 > cap:
        raise DegreeTooLarge(f"degree {worst} needs arity {worst + 1} > cap {cap}")
    u_lam = Signature([1, as_scalar(lam)], 1)

    verts = {}
    bip = {}
    for v in range(g.n):
        verts[v] = Signature.named("EQ", deg[v] + 1)
        bip[v] = "L"
    nand_id = {}
    for n, e in enumerate(g.edges, start=g.n):
        nand_id[e] = n
        verts[n] = _NAND
        bip[n] = "R"
    pend0 = g.n + len(g.edges)
    for v in range(g.n):
        verts[pend0 + v] = u_lam
        bip[pend0 + v] = "R"

    edges = []
    slot = {v: 1 for v in range(g.n)}
    for e in g.edges:
        u, v = e
        edges.append(((u, slot[u]), (nand_id[e], 1)))
        slot[u] += 1
        edges.append(((v, slot[v]), (nand_id[e], 2)))
        slot[v] += 1
    for v in range(g.n):
        edges.append(((v, slot[v]), (pend0 + v, 1)))
    return SignatureGrid(verts, tuple(edges), (), bip)


def independent_set_counts(g: SimpleGraph, budget: int = 24) -> tuple:
    """Number of independent sets of each size, by deletion-contraction on the
    lowest remaining vertex: N(G) = N(G - v) + x * N(G - N[v])."""
    if g.n > budget:
        raise BudgetExceeded(f"{g.n} vertices > enumeration budget {budget}")
    nbr = [0] * g.n
    for u, v in g.edges:
        nbr[u] |= 1 << v
        nbr[v] |= 1 << u

    memo = {0: (1,)}

    def counts(mask):
        got = memo.get(mask)
        if got is not None:
            return got
        v = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << v)
        out_c = counts(rest)
        in_c = counts(rest & ~nbr[v])
        out = list(out_c) + [0] * (len(in_c) + 1 - len(out_c))
        for k, c in enumerate(in_c):
            out[k + 1] += c
        memo[mask] = tuple(out)
        return memo[mask]

    return counts((1 << g.n) - 1)


def independent_set_poly_brute(g: SimpleGraph, lam, budget: int = 24):
    """Σ_I λ^|I| over all independent sets of g."""
    lam = as_scalar(lam)
    total = as_scalar(0)
    power = as_scalar(1)
    for c in independent_set_counts(g, budget):
        total = total + power * c
        power = power * lam
    return total


# -- matchings ---------------------------------------------------------------------

def monomer_dimer_grid(g: SimpleGraph, gamma, cap: int = 12) -> SignatureGrid:
    """Holant form of the matching polynomial Σ_M γ^|M|: each vertex allows at
    most one incident occupied edge and pays √γ for it."""
    if g.max_degree > cap:
        raise DegreeTooLarge(f"degree {g.max_degree} > cap {cap}")
    root = exact_sqrt(as_scalar(gamma))
    if root is None:
        root = complex(as_scalar(gamma)) ** 0.5

    verts = {}
    for v in range(g.n):
        d = max(g.degree(v), 1)  # isolated vertices keep a padded leg
        vals = [as_scalar(0)] * (1 << d)
        vals[0] = as_scalar(1)
        for j in range(d):
            vals[1 << j] = root
        verts[v] = Signature(vals, d)

    edges = []
    slot = {v: 1 for v in range(g.n)}
    extra = {}
    for u, v in g.edges:
        edges.append(((u, slot[u]), (v, slot[v])))
        slot[u] += 1
        slot[v] += 1
    base = g.n
    for v in range(g.n):
        if g.degree(v) == 0:
            # cap the padded leg with δ0 so the vertex contributes weight 1
            extra[base] = Signature.named("DELTA0")
            edges.append(((v, 1), (base, 1)))
            base += 1
    verts.update(extra)
    return SignatureGrid(verts, tuple(edges), (), None)


def matching_counts(g: SimpleGraph, budget: int = 24) -> tuple:
    """Number of matchings of each size, by branching on the first edge."""
    if len(g.edges) > budget:
        raise BudgetExceeded(f"{len(g.edges)} edges > enumeration budget {budget}")

    def counts(edges):
        if not edges:
            return (1,)
        (u, v), rest = edges[0], edges[1:]
        out_c = counts(rest)
        in_c = counts(tuple(e for e in rest if u not in e and v not in e))
        out = list(out_c) + [0] * (len(in_c) + 1 - len(out_c))
        for k, c in enumerate(in_c):
            out[k + 1] += c
        return tuple(out)

    return counts(g.edges)


def matching_poly_brute(g: SimpleGraph, gamma, budget: int = 24):
    gamma = as_scalar(gamma)
    total = as_scalar(0)
    power = as_scalar(1)
    for c in matching_counts(g, budget):
        total = total + power * c
        power = power * gamma
    return total
