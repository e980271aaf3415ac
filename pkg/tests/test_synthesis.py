import cmath
import math
import random
from fractions import Fraction

import pytest

from holant.classify import classify_ternary
from holant.evaluation import contract_network
from holant.formulas import formula_to_gadget
from holant.signatures import (
    ID2,
    K1,
    K2,
    Signature,
    Transform2,
    holo,
    is_unitary,
    matrix_view,
    sig_max_residual,
)
from holant.scalars import to_complex
from holant.synthesis import (
    Factorization,
    GadgetRecipe,
    ParameterDegenerate,
    PreconditionViolated,
    SingularMatrix,
    ZeroVector,
    binary_from_ghz,
    binary_from_tractable_pair,
    express_E,
    express_M,
    ghz_from_w,
    pldu,
    triangularize,
    unitary_completion,
    verify_appendix,
)

EQ2 = Signature.named("EQ", 2)
EQ3 = Signature.named("EQ", 3)
ONE3 = Signature.named("ONE", 3)


def mat_residual(m1, m2):
    return max(abs(to_complex(m1.entry(i, j)) - to_complex(m2.entry(i, j)))
               for i in range(2) for j in range(2))


def rand_mat(rng, lo=-4, hi=4):
    while True:
        m = Transform2(*(Fraction(rng.randint(lo, hi), rng.randint(1, 3))
                         for _ in range(4)))
        if m.det() != 0:
            return m


class TestPldu:
    def test_reassembles(self, rng):
        for _ in range(30):
            m = rand_mat(rng)
            fac = pldu(m)
            assert fac.kind == "pldu"
            assert fac.product() == m

    def test_factor_shapes(self, rng):
        for _ in range(20):
            m = rand_mat(rng)
            fac = pldu(m)
            assert fac.p in (ID2, Transform2(0, 1, 1, 0))
            assert fac.l.entry(0, 1) == 0 and fac.l.entry(0, 0) == 1 \
                and fac.l.entry(1, 1) == 1
            assert fac.u.entry(1, 0) == 0 and fac.u.entry(0, 0) == 1 \
                and fac.u.entry(1, 1) == 1
            assert fac.d.entry(0, 1) == 0 and fac.d.entry(1, 0) == 0

    def test_zero_pivot_uses_swap(self):
        m = Transform2(0, 1, 2, 3)
        fac = pldu(m)
        assert fac.p == Transform2(0, 1, 1, 0)
        assert fac.product() == m

    def test_exact_stays_exact(self):
        fac = pldu(Transform2(2, 1, 1, 1))
        for _, f in fac.factors:
            assert f.is_exact()

    def test_singular_rejected(self):
        with pytest.raises(SingularMatrix):
            pldu(Transform2(1, 2, 2, 4))


class TestTriangularize:
    def test_upper(self, rng):
        for _ in range(25):
            m = rand_mat(rng)
            fac = triangularize(m, "upper")
            assert fac.kind == "qr"
            assert abs(to_complex(fac.r.entry(1, 0))) == 0.0
            assert mat_residual(fac.product(), m) < 1e-9

    def test_lower(self, rng):
        for _ in range(25):
            m = rand_mat(rng)
            fac = triangularize(m, "lower")
            assert abs(to_complex(fac.r.entry(0, 1))) == 0.0
            assert mat_residual(fac.product(), m) < 1e-9

    def test_q_is_orthogonal_generically(self, rng):
        for _ in range(20):
            m = rand_mat(rng)
            q = triangularize(m, "upper").q
            qtq = q.transpose() @ q
            assert mat_residual(qtq, ID2) < 1e-9

    def test_isotropic_column_falls_back_to_K(self):
        m = Transform2(1, 0, 1j, 1)  # first column (1, i), isotropic
        fac = triangularize(m, "upper")
        assert fac.q in (K1, K2)
        assert mat_residual(fac.product(), m) < 1e-9

    def test_bad_side(self):
        with pytest.raises(ValueError):
            triangularize(ID2, "diag")

    def test_singular_rejected(self):
        with pytest.raises(SingularMatrix):
            triangularize(Transform2(1, 1, 1, 1))


class TestUnitaryCompletion:
    def test_first_column_is_normalized_input(self):
        f = unitary_completion([3, 4])
        assert is_unitary(f)
        u = matrix_view(f)
        # column 0 proportional to (3, 4)
        c = u.column(0)
        assert abs(to_complex(c[0]) / 3 - to_complex(c[1]) / 4) < 1e-12

    def test_exact_rational_input_stays_exact(self):
        f = unitary_completion([Fraction(1), Fraction(1)])
        assert f.is_exact()
        assert is_unitary(f)

    def test_dim_four(self, rng):
        for _ in range(10):
            vec = [complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
                   for _ in range(4)]
            f = unitary_completion(vec)
            assert f.arity == 4
            assert is_unitary(f, 1e-8)

    def test_rejects_zero(self):
        with pytest.raises(ZeroVector):
            unitary_completion([0, 0])

    def test_rejects_bad_length(self):
        from holant.signatures import ArityMismatch
        with pytest.raises(ArityMismatch):
            unitary_completion([1, 2, 3])


def _annulus(rng, lo=0.5, hi=1.5):
    r = rng.uniform(lo, hi)
    t = rng.uniform(0.0, 2.0 * math.pi)
    return cmath.rect(r, t)


def _ghz_source(rng):
    a = _annulus(rng)
    b = _annulus(rng)
    r = Transform2(a, b, 0, 1.0 / a)
    return holo(r, EQ3), a, b


class TestBinaryFromGhz:
    def test_hits_random_targets(self):
        rng = random.Random(5)
        for _ in range(20):
            f, _, _ = _ghz_source(rng)
            target = Signature([_annulus(rng) for _ in range(4)])
            rec = binary_from_ghz(f, target)
            got = rec.realize()
            scale = max(target.max_abs(), 1.0)
            assert sig_max_residual(got, target) < 1e-6 * scale
            assert sig_max_residual(rec.claimed, target) < 1e-6 * scale

    def test_formula_uses_only_f_and_unaries(self):
        rng = random.Random(6)
        f, _, _ = _ghz_source(rng)
        target = Signature([1, 2, 3, 4])
        rec = binary_from_ghz(f, target)
        for atom in rec.formula.atoms:
            assert atom.signature.arity == 1 or \
                sig_max_residual(atom.signature, f) == 0.0

    def test_rejects_wrong_shape(self):
        from holant.signatures import ArityMismatch
        with pytest.raises(ArityMismatch):
            binary_from_ghz(EQ2, EQ2)

    def test_rejects_triangular_ghz(self):
        # b = 0 gives a diagonally transformed equality; excluded case
        r = Transform2(2.0, 0, 0, 0.5)
        with pytest.raises(PreconditionViolated):
            binary_from_ghz(holo(r, EQ3), Signature([1, 2, 3, 4]))

    def test_rejects_w_class(self):
        with pytest.raises(PreconditionViolated):
            binary_from_ghz(ONE3.to_approx(), Signature([1, 2, 3, 4]))


class TestBinaryFromTractablePair:
    def test_hits_random_targets(self):
        rng = random.Random(7)
        for _ in range(20):
            a = _annulus(rng)
            f = Signature([1, 0, 0, 0, 0, 0, 0, a])
            while True:
                b, c = _annulus(rng), _annulus(rng)
                if abs(b * c - 1) > 0.1:
                    break
            g = Signature([b, 1, 1, c])
            target = Signature([_annulus(rng) for _ in range(4)])
            rec = binary_from_tractable_pair(f, g, target)
            got = rec.realize()
            scale = max(target.max_abs(), 1.0)
            assert sig_max_residual(got, target) < 1e-6 * scale

    def test_rejects_equality_clone_pair(self):
        f = Signature([1, 0, 0, 0, 0, 0, 0, 2.0])
        g = Signature([2.0, 1, 1, 0.5])  # bc = 1
        with pytest.raises(PreconditionViolated):
            binary_from_tractable_pair(f, g, Signature([1, 2, 3, 4]))

    def test_rejects_plain_disequality(self):
        f = Signature([1, 0, 0, 0, 0, 0, 0, 2.0])
        g = Signature([0.0, 1, 1, 0.0])
        with pytest.raises(PreconditionViolated):
            binary_from_tractable_pair(f, g, Signature([1, 2, 3, 4]))

    def test_rejects_malformed_f(self):
        f = Signature([1, 0, 0, 1.0, 0, 0, 0, 2.0])
        with pytest.raises(PreconditionViolated):
            binary_from_tractable_pair(f, Signature([2.0, 1, 1, 3.0]),
                                       Signature([1, 2, 3, 4]))


class TestGhzFromW:
    def test_generic_w_triangle(self):
        rng = random.Random(9)
        for _ in range(15):
            m = rand_mat(rng)
            f = holo(m, ONE3)
            if classify_ternary(f).tag != "W":
                continue
            rec = ghz_from_w(f, EQ2, EQ2)
            assert classify_ternary(rec.claimed).tag == "GHZ"
            assert rec.provenance["rule"] == "triangle"
            got = rec.realize()
            assert sig_max_residual(got, rec.claimed) == 0.0

    def test_twisted_w_needs_bridge(self):
        f = holo(K1, ONE3)
        rec = ghz_from_w(f, Signature([1, 0, 0, 2]), EQ2)
        assert rec.provenance["rule"] == "bridged-triangle"
        assert classify_ternary(rec.claimed, tol=1e-8).tag == "GHZ"

    def test_rejects_ghz_input(self):
        with pytest.raises(PreconditionViolated):
            ghz_from_w(EQ3, EQ2, EQ2)

    def test_rejects_bridge_inside_family(self):
        f = holo(K1, ONE3)
        # an edge function still inside K1 o M cannot escape
        s_bad = holo(K1, Signature([1, 1, 1, 0]))
        with pytest.raises(PreconditionViolated):
            ghz_from_w(f, s_bad, EQ2)


def _rand_pair_sig(rng, k, exact=True):
    a = rng.randrange(1 << k)
    vals = [0] * (1 << k)
    if exact:
        vals[a] = Fraction(rng.randint(1, 5), rng.randint(1, 3))
        vals[a ^ ((1 << k) - 1)] = Fraction(rng.randint(-5, 5), rng.randint(1, 3))
    else:
        vals[a] = _annulus(rng)
        vals[a ^ ((1 << k) - 1)] = _annulus(rng)
    return Signature(vals, k)


class TestExpressE:
    def test_plain_members_exact(self, rng):
        for _ in range(25):
            k = rng.randint(1, 5)
            f = _rand_pair_sig(rng, k)
            rec = express_E(f)
            assert rec.realize() == f

    def test_orthogonal_twist(self, rng):
        O = Transform2(Fraction(3, 5), Fraction(-4, 5),
                       Fraction(4, 5), Fraction(3, 5))
        for _ in range(15):
            k = rng.randint(1, 4)
            f = holo(O, _rand_pair_sig(rng, k))
            rec = express_E(f, M=O)
            assert rec.realize() == f

    def test_k1_twist(self, rng):
        for _ in range(10):
            k = rng.randint(1, 4)
            f = holo(K1, _rand_pair_sig(rng, k))
            rec = express_E(f, M=K1)
            got = rec.realize()
            assert sig_max_residual(got, f) < 1e-9 * max(1.0, f.max_abs())

    def test_formula_atoms_are_generators(self, rng):
        f = _rand_pair_sig(rng, 3)
        rec = express_E(f)
        for atom in rec.formula.atoms:
            vals = atom.signature
            sup = vals.support()
            assert len(sup) <= 2

    def test_rejects_outside_family(self):
        from holant.evaluation import FamilyViolation
        with pytest.raises(FamilyViolation):
            express_E(Signature([1, 1, 1, 0]))

    def test_rejects_bad_transform(self):
        with pytest.raises(ValueError):
            express_E(EQ2, M=Transform2(1, 1, 0, 1))


class TestExpressM:
    def _rand_m_sig(self, rng, k):
        vals = [0] * (1 << k)
        vals[0] = Fraction(rng.randint(-4, 4))
        for j in range(k):
            if rng.random() < 0.8:
                vals[1 << (k - 1 - j)] = Fraction(rng.randint(-4, 4),
                                                  rng.randint(1, 3))
        return Signature(vals, k)

    def test_members_reproduced_exactly(self, rng):
        for _ in range(25):
            k = rng.randint(1, 6)
            f = self._rand_m_sig(rng, k)
            rec = express_M(f)
            assert rec.realize(cap=14) == f

    def test_carries_labels(self, rng):
        f = self._rand_m_sig(rng, 3)
        rec = express_M(f)
        assert rec.formula.labels is not None
        assert len(rec.formula.labels) == len(rec.formula.atoms)

    def test_rejects_outside_family(self):
        from holant.evaluation import FamilyViolation
        with pytest.raises(FamilyViolation):
            express_M(EQ3)


class TestVerifyAppendix:
    def test_all_identities_pass(self):
        checks = verify_appendix(draws=10, seed=0)
        assert len(checks) == 17
        for c in checks:
            assert c.passed, f"{c.name}: {c.max_residual}"
            assert c.draws == 10

    def test_deterministic(self):
        a = verify_appendix(draws=5, seed=1)
        b = verify_appendix(draws=5, seed=1)
        assert a == b

    def test_seeds_differ(self):
        a = verify_appendix(draws=5, seed=1)
        b = verify_appendix(draws=5, seed=2)
        assert any(x.max_residual != y.max_residual for x, y in zip(a, b))
