"""Holant computation engines.

holant_brute enumerates edge assignments; holant_contract eliminates edges by
sequential tensor contraction with a greedy order; holant_T, holant_E and
holant_KM are the polynomial-time evaluators for the three nontrivial
tractable families (arity <= 2 atoms; parity-constrained supports; weight <= 1
supports under a K transform). The family evaluators are validated against
holant_brute, never trusted on faith.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .formulas import BudgetExceeded
from .grids import SignatureGrid, ValidationError, require_valid
from .scalars import Cyc, ONE, ZERO, as_scalar, to_complex
from .signatures import (Signature, Transform2, decompose_atoms, holo, in_E,
                         in_M, matrix_view)


def _lower(v):
    """Rational Cyc -> int or Fraction, so long product chains stay cheap."""
    if isinstance(v, Cyc) and v.is_rational():
        q = v.c0
        return q.numerator if q.denominator == 1 else q
    return v


class FamilyViolation(ValueError):
    pass


class CapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class HolantValue:
    value: object
    backend: str  # "exact" | "approx"

    def __complex__(self):
        return to_complex(self.value)

    def magnitude(self) -> float:
        return abs(to_complex(self.value))

    def argument(self) -> float:
        """Principal argument folded into [0, 2pi)."""
        import cmath
        z = to_complex(self.value)
        if z == 0:
            return 0.0
        a = cmath.phase(z)
        return a if a >= 0 else a + 2 * cmath.pi


def _backend_tag(grid: SignatureGrid) -> str:
    return "exact" if grid.is_exact() else "approx"


def _require_closed(grid: SignatureGrid):
    require_valid(grid)
    if grid.dangling:
        raise ValidationError("grid has dangling edges; realize it as a gadget")


# -- brute force ---------------------------------------------------------------

def holant_brute(grid: SignatureGrid, budget: int = 24) -> HolantValue:
    _require_closed(grid)
    m = len(grid.edges)
    if m > budget:
        raise BudgetExceeded(f"{m} edges > brute budget {budget}")
    edge_of = {}
    for n, (p, q) in enumerate(grid.edges):
        edge_of[p] = n
        edge_of[q] = n
    slots = [(f, [edge_of[(vid, s)] for s in range(1, f.arity + 1)])
             for vid, f in sorted(grid.vertices.items())]

    total = None
    for mask in range(1 << m):
        term = ONE
        for f, es in slots:
            idx = 0
            for e in es:
                idx = (idx << 1) | ((mask >> e) & 1)
            term = term * f.values[idx]
        total = term if total is None else total + term
    return HolantValue(ONE if total is None else total, _backend_tag(grid))


def realize_gadget(grid: SignatureGrid, budget: int = 24) -> Signature:
    require_valid(grid)
    m = len(grid.edges)
    if m > budget:
        raise BudgetExceeded(f"{m} internal edges > brute budget {budget}")
    k = len(grid.dangling)
    port_src = {}
    for n, (p, q) in enumerate(grid.edges):
        port_src[p] = ("e", n)
        port_src[q] = ("e", n)
    for n, p in enumerate(grid.dangling):
        port_src[p] = ("d", n)
    slots = [(f, [port_src[(vid, s)] for s in range(1, f.arity + 1)])
             for vid, f in sorted(grid.vertices.items())]

    vals = []
    for fidx in range(1 << k):
        fbits = [(fidx >> (k - 1 - t)) & 1 for t in range(k)]
        total = None
        for mask in range(1 << m):
            term = ONE
            for f, srcs in slots:
                idx = 0
                for kind, n in srcs:
                    bit = fbits[n] if kind == "d" else (mask >> n) & 1
                    idx = (idx << 1) | bit
                term = term * f.values[idx]
            total = term if total is None else total + term
        vals.append(ONE if total is None else total)
    return Signature(vals, k)


# -- sequential contraction ----------------------------------------------------

@dataclass(frozen=True)
class ContractionPlan:
    steps: tuple  # (node u, node v, predicted resulting arity); u == v for loops

    @property
    def max_arity(self) -> int:
        return max((a for _, _, a in self.steps), default=0)


class _Network:
    def __init__(self, grid: SignatureGrid):
        self.sig = {}
        self.wires = {}       # node -> list of wire ids, position = argument - 1
        self.ends = {}        # wire id -> list of node ids (len 2, or 1 if dangling)
        wid = {}
        for n, (p, q) in enumerate(grid.edges):
            wid[p] = n
            wid[q] = n
        base = len(grid.edges)
        for n, p in enumerate(grid.dangling):
            wid[p] = base + n
        self.dangling_wires = [base + n for n in range(len(grid.dangling))]
        for v, f in grid.vertices.items():
            self.sig[v] = f
            ws = [wid[(v, s)] for s in range(1, f.arity + 1)]
            self.wires[v] = ws
            for w in ws:
                self.ends.setdefault(w, []).append(v)
        self.internal = sum(1 for es in self.ends.values() if len(es) == 2)

    def shared(self, u, v):
        if u == v:
            from collections import Counter
            return sum(1 for c in Counter(self.wires[u]).values() if c == 2)
        su = set(self.wires[u])
        return sum(1 for w in self.wires[v] if w in su)

    def result_arity(self, u, v):
        if u == v:
            return len(self.wires[u]) - 2 * self.shared(u, u)
        return len(self.wires[u]) + len(self.wires[v]) - 2 * self.shared(u, v)

    def merge(self, u, v):
        """Contract all wires joining u and v; survivor id is min(u, v)."""
        if u == v:
            sig, ws = self.sig[u], list(self.wires[u])
        else:
            sig = self.sig[u].tensor(self.sig[v])
            ws = list(self.wires[u]) + list(self.wires[v])
        while True:
            dup = None
            seen = {}
            for pos, w in enumerate(ws):
                if w in seen:
                    dup = (seen[w], pos, w)
                    break
                seen[w] = pos
            if dup is None:
                break
            i, j, w = dup
            sig = sig.contract(i + 1, j + 1)
            ws = ws[:i] + ws[i + 1:j] + ws[j + 1:]
            del self.ends[w]
            self.internal -= 1
        keep = min(u, v)
        drop = max(u, v)
        if drop != keep:
            del self.sig[drop], self.wires[drop]
        self.sig[keep] = sig
        self.wires[keep] = ws
        for w in ws:
            self.ends[w] = [keep if e in (u, v) else e for e in self.ends[w]]
        return keep

    def internal_pairs(self):
        pairs = set()
        for w, es in self.ends.items():
            if len(es) == 2:
                pairs.add((min(es), max(es)))
        return pairs


def contract_network(grid: SignatureGrid, plan: ContractionPlan = None,
                     cap: int = 12) -> Signature:
    """Reduce the grid to the signature it realizes (arity 0 when closed)."""
    require_valid(grid)
    net = _Network(grid)

    if plan is not None:
        for (u, v, _) in plan.steps:
            if net.result_arity(u, v) > cap:
                raise CapExceeded(f"step ({u},{v}) exceeds arity cap {cap}")
            net.merge(u, v)
    else:
        heap = [(net.result_arity(u, v), u, v) for u, v in net.internal_pairs()]
        heapq.heapify(heap)
        while net.internal > 0:
            while True:
                if not heap:
                    heap = [(net.result_arity(u, v), u, v)
                            for u, v in net.internal_pairs()]
                    heapq.heapify(heap)
                arity, u, v = heapq.heappop(heap)
                if u not in net.sig or v not in net.sig:
                    continue
                if net.shared(u, v) == 0:
                    continue
                cur = net.result_arity(u, v)
                if cur != arity:
                    heapq.heappush(heap, (cur, u, v))
                    continue
                break
            if arity > cap:
                raise CapExceeded(
                    f"best available contraction needs arity {arity} > cap {cap}; "
                    "raise the cap or use the brute evaluator")
            keep = net.merge(u, v)
            pushed = set()
            for w in net.wires[keep]:
                for t in net.ends[w]:
                    key = (min(keep, t), max(keep, t))
                    if len(net.ends[w]) == 2 and key not in pushed:
                        pushed.add(key)
                        heapq.heappush(heap, (net.result_arity(keep, t), keep, t))

    # assemble the remains: tensor in id order, then put dangling legs in order
    out = None
    ws = []
    for v in sorted(net.sig):
        out = net.sig[v] if out is None else out.tensor(net.sig[v])
        ws.extend(net.wires[v])
    if out is None:
        out = Signature([ONE], 0)
    # slot m of `out` carries wire ws[m-1]; permute() feeds old slot m from
    # new argument pi[m-1], so pi maps tensor slots to dangling positions
    pos_of = {w: n for n, w in enumerate(net.dangling_wires)}
    pi = tuple(pos_of[w] + 1 for w in ws)
    if pi and pi != tuple(range(1, len(pi) + 1)):
        out = out.permute(pi)
    return out


def plan_greedy(grid: SignatureGrid, cap: int = 12) -> ContractionPlan:
    """Dry-run the greedy order, recording steps and predicted arities."""
    require_valid(grid)
    net = _Network(grid)
    steps = []
    while True:
        pairs = net.internal_pairs()
        if not pairs:
            break
        arity, u, v = min((net.result_arity(u, v), u, v) for u, v in pairs)
        if arity > cap:
            raise CapExceeded(f"greedy needs arity {arity} > cap {cap}")
        steps.append((u, v, arity))
        net.merge(u, v)
    return ContractionPlan(tuple(steps))


def holant_contract(grid: SignatureGrid, plan: ContractionPlan = None,
                    cap: int = 12) -> HolantValue:
    _require_closed(grid)
    out = contract_network(grid, plan, cap)
    return HolantValue(out.values[0], _backend_tag(grid))


# -- family evaluators ---------------------------------------------------------

def _split_into_atoms(grid: SignatureGrid, strip: Transform2 = None,
                      tol: float = 1e-9):
    """Strip a transform off every vertex and split into tensor atoms.

    Returns (scalar, atom signature list, remapped edges); atom ids are dense.
    """
    cache = {}
    scalar = ONE
    atoms = []
    port_map = {}
    inv = strip.inverse() if strip is not None else None
    for vid in sorted(grid.vertices):
        f = grid.vertices[vid]
        if f not in cache:
            g = holo(inv, f) if inv is not None else f
            cache[f] = decompose_atoms(g, tol=tol)
        dec = cache[f]
        scalar = scalar * dec.scalar
        for atom, places in zip(dec.atoms, dec.placement):
            nid = len(atoms)
            atoms.append(atom)
            for t, p in enumerate(places, start=1):
                port_map[(vid, p)] = (nid, t)
    edges = [(port_map[p], port_map[q]) for p, q in grid.edges]
    return scalar, atoms, edges


def holant_T(grid: SignatureGrid, tol: float = 1e-9) -> HolantValue:
    """Closed grids whose vertices factor into atoms of arity <= 2."""
    _require_closed(grid)
    scalar, atoms, edges = _split_into_atoms(grid, tol=tol)
    bad = [n for n, a in enumerate(atoms) if a.arity > 2]
    if bad:
        raise FamilyViolation(f"atom of arity {atoms[bad[0]].arity} > 2")

    adj = {n: [] for n in range(len(atoms))}
    for p, q in edges:
        adj[p[0]].append((p[1], q))
        adj[q[0]].append((q[1], p))

    total = scalar
    seen = [False] * len(atoms)
    for start in range(len(atoms)):
        if seen[start]:
            continue
        if atoms[start].arity == 2 and len(adj[start]) == 2:
            # might be interior of a path; handle paths from their endpoints
            if not any(q[0] == start for _, q in adj[start]):
                continue
        comp = _trace_chain(atoms, adj, seen, start)
        total = total * comp
    # leftover unseen vertices belong to cycles of binary atoms
    for start in range(len(atoms)):
        if not seen[start]:
            total = total * _trace_cycle(atoms, adj, seen, start)
    return HolantValue(total, _backend_tag(grid))


def _step_matrix(atom: Signature, enter_slot: int) -> Transform2:
    m = matrix_view(atom)
    return m if enter_slot == 1 else m.transpose()


def _trace_chain(atoms, adj, seen, start):
    """Evaluate the path component containing `start` (an endpoint or isolated)."""
    seen[start] = True
    a = atoms[start]
    if a.arity == 0:
        return a.values[0]
    if a.arity == 2 and len(adj[start]) == 2 and any(q[0] == start for _, q in adj[start]):
        # self-looped binary: trace of the matrix, a cycle of length 1
        m = matrix_view(a)
        return m.a + m.d
    # unary endpoint: walk to the other end
    vec = (a.values[0], a.values[1])
    slot_prev, cur = adj[start][0]
    while True:
        nid, slot = cur
        seen[nid] = True
        g = atoms[nid]
        if g.arity == 1:
            return vec[0] * g.values[0] + vec[1] * g.values[1]
        m = _step_matrix(g, slot)
        vec = (vec[0] * m.a + vec[1] * m.c, vec[0] * m.b + vec[1] * m.d)
        nxt = [q for s, q in adj[nid] if s != slot]
        cur = nxt[0]


def _trace_cycle(atoms, adj, seen, start):
    seen[start] = True
    acc = matrix_view(atoms[start])  # enter at slot 1 by convention
    _, cur = [e for e in adj[start] if e[0] == 2][0]
    while cur[0] != start:
        nid, slot = cur
        seen[nid] = True
        acc = acc @ _step_matrix(atoms[nid], slot)
        cur = [q for s, q in adj[nid] if s != slot][0]
    return acc.a + acc.d


class _ParityUF:
    """Union-find tracking a bit along each link (state_v = state_root xor par)."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.par = [0] * n
        self.rank = [0] * n
        self.dead = [False] * n

    def find(self, x):
        root, p = x, 0
        while self.parent[root] != root:
            p ^= self.par[root]
            root = self.parent[root]
        total = p
        while self.parent[x] != root:
            nxt = self.parent[x]
            nxt_p = p ^ self.par[x]
            self.parent[x] = root
            self.par[x] = p
            p = nxt_p
            x = nxt
        return root, total

    def union(self, x, y, d):
        rx, px = self.find(x)
        ry, py = self.find(y)
        need = d ^ px ^ py
        if rx == ry:
            if need:
                self.dead[rx] = True
            return
        if self.rank[rx] < self.rank[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.par[ry] = need
        self.dead[rx] = self.dead[rx] or self.dead[ry]
        if self.rank[rx] == self.rank[ry]:
            self.rank[rx] += 1


def holant_E(grid: SignatureGrid, strip=None, tol: float = 1e-9) -> HolantValue:
    """Closed grids of parity-pair supports: every vertex function is zero
    outside some {a, complement of a}.

    strip=None and strip=<orthogonal Transform2> keep edges as equality;
    strip="K1" removes the K1 transform from every vertex, which turns each
    edge into a disequality.
    """
    _require_closed(grid)
    flip = 0
    inv = None
    if strip == "K1":
        from .signatures import K1
        inv = K1.inverse()
        flip = 1
    elif isinstance(strip, Transform2):
        if not strip.is_orthogonal(tol):
            raise FamilyViolation("strip transform is not orthogonal")
        inv = strip.inverse()
    elif strip is not None:
        raise ValueError(f"unknown strip mode: {strip!r}")

    cache = {}
    ids = sorted(grid.vertices)
    idx = {vid: n for n, vid in enumerate(ids)}
    info = []
    nullary = 1
    for vid in ids:
        f = grid.vertices[vid]
        if f not in cache:
            g = holo(inv, f) if inv is not None else f
            if not in_E(g, tol):
                raise FamilyViolation(f"vertex {vid} not supported on a "
                                      "complementary pair")
            sup = g.support(tol)
            a = sup[0] if sup else 0
            abar = a ^ ((1 << g.arity) - 1)
            cache[f] = (g.arity, a, _lower(g.values[a]), _lower(g.values[abar]))
        info.append(cache[f])
        if cache[f][0] == 0:
            nullary = nullary * cache[f][2]

    uf = _ParityUF(len(ids))
    for (pu, su), (pv, sv) in grid.edges:
        ku, au, _, _ = info[idx[pu]]
        kv, av, _, _ = info[idx[pv]]
        bu = (au >> (ku - su)) & 1
        bv = (av >> (kv - sv)) & 1
        uf.union(idx[pu], idx[pv], bu ^ bv ^ flip)

    prod = {}
    for n, vid in enumerate(ids):
        k, a, w0, w1 = info[n]
        if k == 0:
            continue
        root, p = uf.find(n)
        p0, p1 = prod.get(root, (1, 1))
        if p:
            w0, w1 = w1, w0
        prod[root] = (p0 * w0, p1 * w1)

    total = nullary
    for root, (p0, p1) in prod.items():
        total = total * (0 if uf.dead[root] else p0 + p1)
    return HolantValue(as_scalar(total), _backend_tag(grid))


def holant_KM(grid: SignatureGrid, K: Transform2 = None,
              tol: float = 1e-9) -> HolantValue:
    """Closed grids over K-transformed weight<=1 supports.

    Stripping K turns each edge into "exactly one endpoint reads a 1"; the
    nonzero terms are edge orientations with in-degree at most 1, counted per
    component: trees by summing over the in-degree-0 root, unicyclic
    components by the two coherent cycle orientations.
    """
    from .signatures import K1
    _require_closed(grid)
    if K is None:
        K = K1
    scalar, atoms, edges = _split_into_atoms(grid, strip=K, tol=tol)
    for n, a in enumerate(atoms):
        if not in_M(a, tol):
            raise FamilyViolation(f"atom {n} has support of weight > 1")

    n_atoms = len(atoms)
    adj = {n: [] for n in range(n_atoms)}  # node -> (my slot, (other, other slot))
    for p, q in edges:
        adj[p[0]].append((p[1], q))
        adj[q[0]].append((q[1], p))

    low = [tuple(_lower(x) for x in a.values) for a in atoms]
    arities = [a.arity for a in atoms]

    def val_root(v):
        return low[v][0]

    def val_in(v, slot):
        return low[v][1 << (arities[v] - slot)]

    comp_of = [-1] * n_atoms
    comps = []
    for s in range(n_atoms):
        if comp_of[s] >= 0:
            continue
        cid = len(comps)
        stack = [s]
        comp_of[s] = cid
        members = []
        while stack:
            v = stack.pop()
            members.append(v)
            for _, (u, _) in adj[v]:
                if comp_of[u] < 0:
                    comp_of[u] = cid
                    stack.append(u)
        comps.append(members)

    total = scalar
    for members in comps:
        n_v = len(members)
        n_e = sum(len(adj[v]) for v in members)
        # each non-loop edge counted twice, each self-loop twice as well
        n_e //= 2
        if n_e > n_v:
            total = total * 0
            continue
        if n_e == n_v:
            total = total * _orient_unicyclic(atoms, adj, members, val_in)
        else:
            total = total * _orient_tree(adj, members, val_root, val_in)
    return HolantValue(as_scalar(total), _backend_tag(grid))


def _orient_tree(adj, members, val_root, val_in):
    """Sum over roots of prod f_v(indicator of the port toward the root).

    Two-pass rerooting keeps this linear: sub[] products looking down from an
    arbitrary root, up[] products looking up, combined per candidate root.
    """
    root = members[0]
    if len(members) == 1:
        return val_root(root)
    parent = {root: None}  # node -> (parent, slot on me toward parent)
    order = [root]
    stack = [root]
    while stack:
        v = stack.pop()
        for slot, (u, uslot) in adj[v]:
            if u not in parent:
                parent[u] = (v, uslot)
                order.append(u)
                stack.append(u)

    # t[v] = sub[v] * f_v(port toward parent); sub = product of children's t
    sub = {}
    t = {}
    for v in reversed(order):
        acc = 1
        for _, (u, _) in adj[v]:
            if parent.get(u) is not None and parent[u][0] == v:
                acc = acc * t[u]
        sub[v] = acc
        if parent[v] is not None:
            t[v] = acc * val_in(v, parent[v][1])

    up = {root: 1}
    for v in order:
        kids = [(slot, u) for slot, (u, _) in adj[v]
                if parent.get(u) is not None and parent[u][0] == v]
        if not kids:
            continue
        ts = [t[u] for _, u in kids]
        pref = [1]
        for x in ts:
            pref.append(pref[-1] * x)
        suf = [1]
        for x in reversed(ts):
            suf.append(suf[-1] * x)
        suf.reverse()
        for n, (slot, u) in enumerate(kids):
            up[u] = up[v] * val_in(v, slot) * pref[n] * suf[n + 1]

    acc = None
    for v in order:
        term = val_root(v) * sub[v] * up[v]
        acc = term if acc is None else acc + term
    return acc


def _orient_unicyclic(atoms, adj, members, val_in):
    """Two coherent cycle orientations; branch trees point away from the cycle."""
    deg = {v: len(adj[v]) for v in members}
    leaves = [v for v in members if deg[v] == 1]
    on_cycle = {v: True for v in members}
    while leaves:
        v = leaves.pop()
        on_cycle[v] = False
        for _, (u, _) in adj[v]:
            if on_cycle[u]:
                deg[u] -= 1
                if deg[u] == 1:
                    leaves.append(u)

    hang = 1
    cyc = [v for v in members if on_cycle[v]]
    inside = set(cyc)
    frontier = list(cyc)
    seen_tree = set(cyc)
    while frontier:
        v = frontier.pop()
        for slot, (u, uslot) in adj[v]:
            if u not in seen_tree:
                seen_tree.add(u)
                hang = hang * val_in(u, uslot)
                frontier.append(u)

    # walk the cycle, collecting its ordered (vertex, entry slot, exit slot)
    start = min(cyc)
    if len(cyc) == 1:
        slots = [s for s, (u, _) in adj[start] if u == start]
        fwd = val_in(start, slots[0])
        bwd = val_in(start, slots[1])
        return (fwd + bwd) * hang

    cyc_adj = {v: [] for v in cyc}
    for n, v in enumerate(cyc):
        for slot, (u, uslot) in adj[v]:
            if u in inside:
                cyc_adj[v].append((slot, u, uslot))
    # parallel-edge 2-cycles list both links; longer cycles have two neighbors
    first = cyc_adj[start][0]
    path = [(start, None, first[0])]  # (vertex, entry slot, exit slot)
    v, came_from_slot = first[1], first[2]
    prev = start
    while v != start:
        nxt = [(slot, u, uslot) for slot, u, uslot in cyc_adj[v]
               if slot != came_from_slot]
        slot, u, uslot = nxt[0]
        path.append((v, came_from_slot, slot))
        prev, v, came_from_slot = v, u, uslot
    path[0] = (start, came_from_slot, first[0])

    fwd = 1
    bwd = 1
    for v, entry, exit_ in path:
        fwd = fwd * val_in(v, entry)
        bwd = bwd * val_in(v, exit_)
    return (fwd + bwd) * hang
