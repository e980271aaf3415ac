import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from holant.classify import (
    DegenerateInput,
    classify_set,
    classify_symmetric_ternary,
    classify_ternary,
    hyperdet,
    recover_rank2,
    report_to_json,
)
from holant.signatures import (
    ID2,
    K1,
    Signature,
    Transform2,
    holo,
    sig_max_residual,
)

EQ2 = Signature.named("EQ", 2)
EQ3 = Signature.named("EQ", 3)
ONE3 = Signature.named("ONE", 3)
NEQ = Signature.named("NEQ")


def rand_invertible(rng, lo=-3, hi=3):
    while True:
        m = Transform2(*(rng.randint(lo, hi) for _ in range(4)))
        if m.det() != 0:
            return m


class TestHyperdet:
    def test_eq3_nonzero(self):
        assert hyperdet(EQ3) == 1

    def test_one3_zero(self):
        assert hyperdet(ONE3) == 0

    def test_degenerate_zero(self):
        f = Signature([1, 2]).tensor(Signature([3, 1])).tensor(Signature([1, 1]))
        assert hyperdet(f) == 0

    def test_invariant_degree_four(self, ):
        # hyperdet(M applied to one leg) = det(M)^2 * hyperdet(f)
        rng = random.Random(7)
        for _ in range(20):
            f = Signature([rng.randint(-3, 3) for _ in range(8)])
            m = rand_invertible(rng)
            g = holo(m, f)
            assert hyperdet(g) == m.det() ** 6 * hyperdet(f)


class TestTernary:
    def test_eq3_is_ghz(self):
        res = classify_ternary(EQ3)
        assert res.tag == "GHZ"

    def test_one3_is_w(self):
        res = classify_ternary(ONE3)
        assert res.tag == "W"

    def test_product_is_degenerate(self):
        f = Signature([1, 2]).tensor(Signature([1, 0, 0, 1]))
        assert classify_ternary(f.permute((1, 2, 3))).tag == "Degenerate"

    def test_arity_guard(self):
        from holant.signatures import ArityMismatch
        with pytest.raises(ArityMismatch):
            classify_ternary(EQ2)

    def test_ghz_witness_reproduces(self):
        rng = random.Random(3)
        for _ in range(25):
            m = rand_invertible(rng)
            f = holo(m, EQ3)
            res = classify_symmetric_ternary(f)
            assert res.tag == "GHZ"
            assert res.witness is not None
            back = holo(res.witness, EQ3)
            scale = max(f.max_abs(), 1.0)
            assert sig_max_residual(back, f) < 1e-6 * scale

    def test_w_witness_reproduces(self):
        rng = random.Random(4)
        for _ in range(25):
            m = rand_invertible(rng)
            f = holo(m, ONE3)
            res = classify_symmetric_ternary(f)
            assert res.tag == "W"
            back = holo(res.witness, ONE3)
            scale = max(f.max_abs(), 1.0)
            assert sig_max_residual(back, f) < 1e-6 * scale

    @given(st.integers(0, 2 ** 31))
    @settings(max_examples=60, deadline=None)
    def test_holo_preserves_class(self, seed):
        rng = random.Random(seed)
        m = rand_invertible(rng)
        assert classify_ternary(holo(m, EQ3)).tag == "GHZ"
        assert classify_ternary(holo(m, ONE3)).tag == "W"

    def test_all_01_ternaries_against_split_oracle(self):
        # rank <= 1 flattening along every leg <=> degenerate
        for mask in range(256):
            f = Signature([mask >> i & 1 for i in range(8)][::-1])
            got = classify_ternary(f).tag
            if f.is_zero():
                assert got == "Degenerate"
                continue
            deg = _degenerate_by_flattening(f)
            if deg:
                assert got == "Degenerate"
            elif hyperdet(f) != 0:
                assert got == "GHZ"
            else:
                assert got == "W"


def _degenerate_by_flattening(f):
    # some leg splits off iff that leg's 2 x 2^(k-1) flattening has rank <= 1
    k = f.arity
    for leg in range(1, k + 1):
        pi = [leg] + [m for m in range(1, k + 1) if m != leg]
        g = f.permute(_inverse_perm(pi))
        rows = [g.values[:1 << (k - 1)], g.values[1 << (k - 1):]]
        if _rank_le_1(rows):
            return True
    return False


def _inverse_perm(pi):
    inv = [0] * len(pi)
    for m, p in enumerate(pi, start=1):
        inv[p - 1] = m
    return inv


def _rank_le_1(rows):
    n = len(rows[0])
    for a in range(n):
        for b in range(a + 1, n):
            if rows[0][a] * rows[1][b] - rows[0][b] * rows[1][a] != 0:
                return False
    return True


class TestRank2:
    def test_eq3_split(self):
        split = recover_rank2(EQ3)
        assert split is not None
        assert split.exact
        # reproduce f from the split data
        f = _from_split(split, 3)
        assert f == EQ3

    def test_twisted_parity_support(self):
        rng = random.Random(11)
        for _ in range(15):
            m = rand_invertible(rng)
            f = holo(m, EQ3)
            split = recover_rank2(f)
            assert split is not None
            g = _from_split(split, 3)
            assert sig_max_residual(g, f) < 1e-6 * max(f.max_abs(), 1)

    def test_w_class_has_no_split(self):
        assert recover_rank2(ONE3) is None


def _from_split(split, k):
    vals = []
    for idx in range(1 << k):
        bits = [(idx >> (k - 1 - j)) & 1 for j in range(k)]
        t1 = split.alpha
        t2 = split.beta
        for b, a in zip(bits, split.pattern):
            c = split.c0 if a == b else split.c1
            # column for the "pattern side": bit equal to pattern takes c_{a_j}
            t1 = t1 * (split.c0[b] if a == 0 else split.c1[b])
            t2 = t2 * (split.c1[b] if a == 0 else split.c0[b])
        vals.append(t1 + t2)
    return Signature(vals, k)


class TestClassifySet:
    def test_eq2_only_is_T(self):
        rep = classify_set({EQ2})
        assert rep.cond_T
        assert rep.verdict == "NotUniversal"

    def test_eq3_is_OE_identity(self):
        rep = classify_set({EQ3})
        assert not rep.cond_T
        assert rep.cond_OE.status == "holds"
        assert rep.verdict == "NotUniversal"

    def test_k1_eq3_is_KE(self):
        rep = classify_set({holo(K1, EQ3)})
        assert rep.cond_KE
        assert rep.verdict == "NotUniversal"

    def test_k1_one3_is_KM(self):
        rep = classify_set({holo(K1, ONE3)})
        assert "K1" in rep.cond_KM
        assert rep.verdict == "NotUniversal"

    def test_eq3_one3_universal(self):
        rep = classify_set({EQ3, ONE3})
        assert rep.verdict == "Universal"
        # reasons names the conditions that hold; none do here
        assert rep.reasons == ()

    def test_reasons_name_the_holding_condition(self):
        assert "OE" in classify_set({EQ3}).reasons
        assert "KM:K1" in classify_set({holo(K1, ONE3)}).reasons

    def test_one3_alone_universal(self):
        rep = classify_set({ONE3})
        assert rep.verdict == "Universal"

    def test_monomer_dimer_universal(self):
        f = Signature.symmetric([1, 1, 0, 0])
        rep = classify_set({f})
        assert rep.verdict == "Universal"

    def test_mixed_binary_family_is_T(self):
        rep = classify_set({EQ2, NEQ, Signature([1, 2, 3, 4])})
        assert rep.cond_T

    def test_empty_family(self):
        rep = classify_set(set())
        assert rep.verdict == "NotUniversal"

    def test_report_json_shape(self):
        rep = classify_set({EQ3, ONE3})
        obj = report_to_json(rep)
        assert obj["verdict"] == "Universal"
        assert set(obj) >= {"cond_T", "cond_OE", "cond_KE", "cond_KM",
                            "verdict", "reasons"}
        import json
        json.dumps(obj)  # must be serializable

    def test_exact_family_never_modulo_numerics(self):
        rng = random.Random(23)
        for _ in range(10):
            f = Signature([Fraction(rng.randint(-2, 2)) for _ in range(8)])
            rep = classify_set({f})
            assert rep.verdict in ("Universal", "NotUniversal")
