"""Ternary entanglement classes and the four-way tractability classifier.

A ternary signature is Degenerate (tensor-splits), GHZ-class (equivalent to
EQ_3 under invertible leg transforms) or W-class (equivalent to ONE_3). The
set classifier reduces a finite family to atoms and checks the four
tractability conditions: all-binary atoms, orthogonal-conjugated parity
supports, K1-conjugated parity supports, K-conjugated weight<=1 supports.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction

from .scalars import (Cyc, ONE, as_scalar, exact_sqrt, is_exact, is_zero,
                      to_complex)
from .signatures import (ArityMismatch, Signature, Transform2, K1, K2,
                         decompose_atoms, family_test, holo, in_E)


class DegenerateInput(ValueError):
    pass


@dataclass(frozen=True)
class TernaryClass:
    tag: str                 # "Degenerate" | "GHZ" | "W"
    witness: Transform2 = None  # f = witness o EQ_3 (GHZ) or witness o ONE_3 (W)


@dataclass(frozen=True)
class Rank2Split:
    c0: tuple
    c1: tuple
    alpha: object
    beta: object
    pattern: tuple  # bits a with f = alpha prod c_{a_j} + beta prod c_{abar_j}
    exact: bool


@dataclass(frozen=True)
class CondOE:
    status: str              # "holds" | "fails" | "undetermined"
    witness: Transform2 = None
    exact: bool = True


@dataclass(frozen=True)
class DichotomyReport:
    cond_T: bool
    cond_OE: CondOE
    cond_KE: bool
    cond_KM: tuple           # subset of ("K1", "K2")
    verdict: str             # "NotUniversal" | "Universal" | "UniversalModuloNumerics"
    reasons: tuple


def hyperdet(f: Signature):
    """Cayley's 2x2x2 hyperdeterminant; zero exactly off the GHZ class."""
    if f.arity != 3:
        raise ArityMismatch("hyperdeterminant needs arity 3")
    a000, a001, a010, a011, a100, a101, a110, a111 = f.values
    return (a000 * a000 * a111 * a111 + a001 * a001 * a110 * a110
            + a010 * a010 * a101 * a101 + a011 * a011 * a100 * a100
            - 2 * (a000 * a001 * a110 * a111 + a000 * a010 * a101 * a111
                   + a000 * a100 * a011 * a111 + a001 * a010 * a101 * a110
                   + a001 * a100 * a011 * a110 + a010 * a100 * a011 * a101)
            + 4 * (a000 * a011 * a101 * a110 + a001 * a010 * a100 * a111))


def _is0(x, tol, scale=1.0):
    if is_exact(x):
        return not x
    return abs(to_complex(x)) <= tol * (scale + 1.0)


def _cbrt(x):
    """Exact cube root for rational perfect cubes, else principal complex."""
    if isinstance(x, Cyc) and x.is_rational():
        q = x.c0
        for sign in (1, -1):
            if sign * q >= 0:
                n = round(abs(q.numerator) ** (1 / 3))
                d = round(q.denominator ** (1 / 3))
                for nn in (n - 1, n, n + 1):
                    for dd in (d - 1, d, d + 1):
                        if dd > 0 and Fraction(sign * nn ** 3, dd ** 3) == q:
                            return Cyc(Fraction(sign * nn, dd))
    z = to_complex(x)
    if z == 0:
        return 0j
    return z ** (1.0 / 3.0)


def _sym_values(f):
    if isinstance(f, Signature):
        if f.arity != 3:
            raise ArityMismatch("need arity 3")
        sym = f.to_symmetric()
        if sym is None:
            raise ArityMismatch("signature is not symmetric")
        return sym, f
    vals = [as_scalar(v) for v in f]
    if len(vals) != 4:
        raise ArityMismatch("need 4 symmetric entries for arity 3")
    return vals, Signature.symmetric(vals)


def _ghz_witness_symmetric(f0, f1, f2, f3, sig, tol):
    """Columns u, v with f = u x u x u + v x v x v, by the weight recurrence
    f_{w+2} = p f_{w+1} + q f_w whose characteristic roots are u1/u0, v1/v0."""
    scale = sig.max_abs()

    def check(M):
        from .signatures import sig_approx_eq
        got = holo(M, Signature.symmetric([1, 0, 0, 1]))
        if sig.is_exact() and M.is_exact():
            return got == sig
        return sig_approx_eq(got, sig, max(tol, 1e-7) * (scale + 1))

    det_h = f1 * f1 - f0 * f2
    if not _is0(det_h, tol, scale * scale):
        # solve [f1 f0; f2 f1] (p, -q)^T = (f2, f3)^T
        inv = (ONE if is_exact(det_h) else 1.0) / det_h
        p = (f1 * f2 - f0 * f3) * inv
        q = (f1 * f3 - f2 * f2) * inv
        disc = p * p + 4 * q
        s = exact_sqrt(disc) if is_exact(disc) else None
        if s is None:
            s = cmath.sqrt(to_complex(disc))
        half = Fraction(1, 2) if is_exact(p) and is_exact(s) else 0.5
        r1 = (p + s) * half
        r2 = (p - s) * half
        den = r1 - r2
        if _is0(den, tol, scale):
            return None
        a1 = (f1 - r2 * f0) / den
        a2 = f0 - a1
        ca, cb = _cbrt(a1), _cbrt(a2)
        M = Transform2(ca, cb, ca * r1, cb * r2)
        if check(M):
            return M
        return None
    # u1^2 = f0 f2 case: one column is vertical, needs f0 != 0 here
    if _is0(f0, tol, scale):
        return None
    a = _cbrt(f0)
    r = f1 / f0
    beta = f3 - f1 * r * r
    b = _cbrt(beta)
    M = Transform2(a, 0 if is_exact(a) else 0j, a * r, b)
    return M if check(M) else None


def _w_witness_symmetric(f0, f1, f2, f3, sig, tol):
    """Columns u, v with f = sym(u x u x v): fit 3 l_u^2 l_v to the cubic."""
    scale = sig.max_abs()

    def check(M):
        from .signatures import sig_approx_eq
        got = holo(M, Signature.symmetric([0, 1, 0, 0]))
        if sig.is_exact() and M.is_exact():
            return got == sig
        return sig_approx_eq(got, sig, max(tol, 1e-7) * (scale + 1))

    third = Fraction(1, 3) if sig.is_exact() else (1 / 3)
    if _is0(f0, tol, scale) and _is0(f1, tol, scale):
        # double linear factor is y: f = [0, 0, f2, f3]
        M = Transform2(0 if not sig.is_exact() else Cyc(0), f2,
                       ONE if sig.is_exact() else 1.0, f3 * third)
        return M if check(M) else None
    # finite double root z0 of f0 z^3 + 3 f1 z^2 + 3 f2 z + f3
    if not _is0(f0, tol, scale):
        p = [f0, 3 * f1, 3 * f2, f3]
        dp = [3 * f0, 6 * f1, 3 * f2]
        r = _poly_mod(p, dp)
        r = _poly_mod(dp, r) if len(r) == 3 else r
        if len(r) != 2 or _is0(r[0], tol, scale):
            return None
        z0 = -r[1] / r[0]
    else:
        # quadratic: double root at the vertex
        if _is0(f1, tol, scale):
            return None
        z0 = -f2 / (2 * f1)
    u0 = ONE if sig.is_exact() and is_exact(z0) else 1.0
    b = f0 * third
    d = f1 + 2 * z0 * b
    M = Transform2(u0, b, -z0, d)
    return M if check(M) else None


def _poly_mod(p, q):
    """Remainder of p by q, coefficients high-to-low, generic scalars."""
    p = list(p)
    while len(p) >= len(q):
        if _is0(p[0], 0.0 if is_exact(p[0]) else 1e-12,
                max((abs(to_complex(c)) for c in p), default=0.0)):
            p.pop(0)
            continue
        c = p[0] / q[0]
        for n in range(len(q)):
            p[n] = p[n] - c * q[n]
        p.pop(0)
    return p


def classify_symmetric_ternary(f, tol: float = 1e-9) -> TernaryClass:
    (f0, f1, f2, f3), sig = _sym_values(f)
    scale = sig.max_abs()
    h1 = f1 * f1 - f0 * f2
    h2 = f2 * f2 - f1 * f3
    disc = (f0 * f3 - f1 * f2) ** 2 - 4 * h1 * h2
    if not _is0(disc, tol, scale ** 4):
        return TernaryClass("GHZ", _ghz_witness_symmetric(f0, f1, f2, f3, sig, tol))
    if _is0(h1, tol, scale * scale) and _is0(h2, tol, scale * scale):
        return TernaryClass("Degenerate")
    return TernaryClass("W", _w_witness_symmetric(f0, f1, f2, f3, sig, tol))


def classify_ternary(f: Signature, tol: float = 1e-9) -> TernaryClass:
    if f.arity != 3:
        raise ArityMismatch("need arity 3")
    dec = decompose_atoms(f, tol=tol)
    if len(dec.atoms) != 1 or dec.atoms[0].arity != 3:
        return TernaryClass("Degenerate")
    if f.is_symmetric():
        return classify_symmetric_ternary(f, tol)
    det = hyperdet(f)
    if not _is0(det, tol, f.max_abs() ** 4):
        return TernaryClass("GHZ")
    return TernaryClass("W")


# -- rank-2 support-pair recovery ---------------------------------------------

_PROBE_PAIRS = (
    ((Fraction(1), Fraction(2)), (Fraction(3), Fraction(1))),
    ((Fraction(2), Fraction(1)), (Fraction(1), Fraction(4))),
    ((Fraction(1), Fraction(1)), (Fraction(2), Fraction(5))),
    ((Fraction(3), Fraction(2)), (Fraction(1), Fraction(-1))),
    ((Fraction(1), Fraction(3)), (Fraction(5), Fraction(2))),
)


def _cap_trailing(h: Signature, vec) -> Transform2:
    """Contract legs 3..k with unaries [vec0, vec1 + j]; the per-leg shift
    keeps the two probe matrices from being proportional when the support
    pattern mixes both columns across the trailing legs."""
    g = h
    j = h.arity - 3
    while g.arity > 2:
        k = g.arity
        v1 = vec[1] + j
        vals = []
        for idx in range(1 << (k - 1)):
            base = idx << 1
            vals.append(g.values[base] * vec[0] + g.values[base | 1] * v1)
        g = Signature(vals, k - 1)
        j -= 1
    return Transform2(*g.values)


def _eigvec(m: Transform2, lam, tol, scale):
    v = (m.b, lam - m.a)
    if not (_is0(v[0], tol, scale) and _is0(v[1], tol, scale)):
        return v
    v = (lam - m.d, m.c)
    if not (_is0(v[0], tol, scale) and _is0(v[1], tol, scale)):
        return v
    return None


def _norm_first(v, tol, scale):
    for comp in v:
        if not _is0(comp, tol, scale):
            inv = (ONE if is_exact(comp) else 1.0) / comp
            return (v[0] * inv, v[1] * inv)
    return None


def _recover_rank2_impl(h: Signature, tol: float):
    """(split or None, exactness of the search path)."""
    if h.arity < 3:
        raise ArityMismatch("need arity >= 3")
    dec = decompose_atoms(h, tol=tol)
    if len(dec.atoms) != 1:
        raise DegenerateInput("signature tensor-splits")
    scale = h.max_abs()
    exact_path = h.is_exact()
    for u, v in _PROBE_PAIRS:
        a = _cap_trailing(h, u)
        b = _cap_trailing(h, v)
        det_b = b.det()
        if _is0(det_b, tol, scale * scale):
            continue
        m = a @ b.inverse()
        tr = m.a + m.d
        dt = m.det()
        disc = tr * tr - 4 * dt
        pair_exact = exact_path and is_exact(disc)
        if pair_exact:
            s = exact_sqrt(disc)
            if s is None:
                s = cmath.sqrt(to_complex(disc))
                pair_exact = False
        else:
            s = cmath.sqrt(to_complex(disc))
        if _is0(s, tol, scale):
            continue
        half = Fraction(1, 2) if is_exact(tr) and is_exact(s) else 0.5
        lams = ((tr + s) * half, (tr - s) * half)
        mscale = max(abs(to_complex(x)) for x in (m.a, m.b, m.c, m.d))
        c0 = _eigvec(m, lams[0], tol, mscale)
        c1 = _eigvec(m, lams[1], tol, mscale)
        if c0 is None or c1 is None:
            continue
        c0 = _norm_first(c0, tol, mscale)
        c1 = _norm_first(c1, tol, mscale)
        if c0 is None or c1 is None:
            continue
        C = Transform2.from_columns(c0, c1)
        if _is0(C.det(), tol, 1.0):
            continue
        ht = holo(C.inverse(), h)
        if not in_E(ht, tol):
            continue
        sup = ht.support(tol)
        a_idx = sup[0]
        abar = a_idx ^ ((1 << h.arity) - 1)
        alpha = ht.values[a_idx]
        beta = ht.values[abar]
        bits = tuple((a_idx >> (h.arity - 1 - j)) & 1 for j in range(h.arity))
        return (Rank2Split(c0, c1, alpha, beta, bits,
                           pair_exact and C.is_exact()), exact_path)
    return (None, exact_path)


def recover_rank2(h: Signature, tol: float = 1e-9):
    split, _ = _recover_rank2_impl(h, tol)
    return split


# -- the set classifier --------------------------------------------------------

def _dot2(u, v):
    return u[0] * v[0] + u[1] * v[1]


def _bilinear_unit(c, tol):
    n = _dot2(c, c)
    if is_exact(n):
        s = exact_sqrt(n)
        if s is not None:
            inv = ONE / s
            return (c[0] * inv, c[1] * inv)
    s = cmath.sqrt(to_complex(n))
    return (to_complex(c[0]) / s, to_complex(c[1]) / s)


def classify_set(family, tol: float = 1e-9, cap: int = 12) -> DichotomyReport:
    atoms = []
    for f in family:
        dec = decompose_atoms(f, cap=cap, tol=tol)
        atoms.extend(a for a in dec.atoms if a.arity >= 2)

    cond_T = all(a.arity <= 2 for a in atoms)
    cond_KE = all(family_test(a, "E", pre_transform=K1, tol=tol) for a in atoms)
    cond_KM = tuple(name for name, K in (("K1", K1), ("K2", K2))
                    if all(family_test(a, "M", pre_transform=K, tol=tol)
                           for a in atoms))

    big = next((a for a in atoms if a.arity >= 3), None)
    all_exact = all(a.is_exact() for a in atoms)
    if big is None:
        cond_oe = CondOE("undetermined", None, all_exact)
    else:
        split, exact_path = _recover_rank2_impl(big, tol)
        if split is None:
            cond_oe = CondOE("fails", None, exact_path)
        else:
            d01 = _dot2(split.c0, split.c1)
            n0 = _dot2(split.c0, split.c0)
            n1 = _dot2(split.c1, split.c1)
            sc = max(abs(to_complex(x)) for x in (*split.c0, *split.c1)) ** 2
            if not _is0(d01, tol, sc) or _is0(n0, tol, sc) or _is0(n1, tol, sc):
                cond_oe = CondOE("fails", None, split.exact)
            else:
                C = Transform2.from_columns(split.c0, split.c1)
                ok = all(family_test(a, "E", pre_transform=C, tol=tol)
                         for a in atoms)
                if ok:
                    O = Transform2.from_columns(_bilinear_unit(split.c0, tol),
                                                _bilinear_unit(split.c1, tol))
                    cond_oe = CondOE("holds", O, split.exact and all_exact)
                else:
                    cond_oe = CondOE("fails", None, split.exact and all_exact)

    reasons = []
    if cond_T:
        reasons.append("T")
    if cond_oe.status == "holds":
        reasons.append("OE")
    if cond_KE:
        reasons.append("KE")
    for name in cond_KM:
        reasons.append(f"KM:{name}")

    if reasons:
        verdict = "NotUniversal"
    elif cond_oe.status == "fails" and cond_oe.exact and all_exact:
        verdict = "Universal"
    else:
        verdict = "UniversalModuloNumerics"
    return DichotomyReport(cond_T, cond_oe, cond_KE, cond_KM, verdict,
                           tuple(reasons))


def report_to_json(report: DichotomyReport) -> dict:
    from .scalars import format_scalar

    def fmt_transform(M):
        if M is None:
            return None
        return [[format_scalar(M.a), format_scalar(M.b)],
                [format_scalar(M.c), format_scalar(M.d)]]

    return {
        "cond_T": report.cond_T,
        "cond_OE": {"status": report.cond_OE.status,
                    "witness": fmt_transform(report.cond_OE.witness),
                    "exact": report.cond_OE.exact},
        "cond_KE": report.cond_KE,
        "cond_KM": list(report.cond_KM),
        "verdict": report.verdict,
        "reasons": list(report.reasons),
    }
