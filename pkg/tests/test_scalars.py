import cmath
import json
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from holant.scalars import (Cyc, I, ONE, ParseError, ZERO, ZETA, approx_eq,
                            as_scalar, conjugate, exact_sqrt, format_scalar,
                            is_exact, is_zero, parse_scalar, scalar_sqrt,
                            scalar_to_json_text, to_complex)

ZETA_C = cmath.exp(1j * cmath.pi / 4)


def embed(c: Cyc) -> complex:
    return (complex(c.c0) + complex(c.c1) * ZETA_C
            + complex(c.c2) * ZETA_C ** 2 + complex(c.c3) * ZETA_C ** 3)


rationals = st.fractions(min_value=-50, max_value=50, max_denominator=12)
cycs = st.builds(Cyc, rationals, rationals, rationals, rationals)


class TestFieldAxioms:
    @given(cycs, cycs)
    def test_add_mul_match_embedding(self, a, b):
        assert cmath.isclose(embed(a + b), embed(a) + embed(b), abs_tol=1e-7)
        assert cmath.isclose(embed(a * b), embed(a) * embed(b), abs_tol=1e-6)

    @given(cycs, cycs, cycs)
    def test_distributive(self, a, b, c):
        assert a * (b + c) == a * b + a * c

    @given(cycs)
    def test_inverse(self, a):
        if not a:
            with pytest.raises(ZeroDivisionError):
                ONE / a
            return
        assert a * (ONE / a) == ONE

    @given(cycs)
    def test_conjugate_is_complex_conjugate(self, a):
        assert cmath.isclose(embed(conjugate(a)), embed(a).conjugate(),
                             abs_tol=1e-7)

    def test_zeta_powers(self):
        assert ZETA ** 8 == ONE
        assert ZETA ** 4 == Cyc(-1)
        assert ZETA ** 2 == I
        assert I * I == Cyc(-1)
        # sqrt(2) = zeta + zeta^-1
        rt2 = ZETA + ZETA ** 7
        assert rt2 * rt2 == Cyc(2)

    @given(cycs)
    def test_to_complex_matches_embedding(self, a):
        assert cmath.isclose(to_complex(a), embed(a), abs_tol=1e-7)


class TestMixedArithmetic:
    def test_cyc_plus_float_falls_backication(self):
        z = Cyc(2) + 1.5j
        assert isinstance(z, complex)
        assert z == 2 + 1.5j

    def test_float_times_cyc(self):
        z = 0.5 * Cyc(0, 1)
        assert cmath.isclose(z, 0.5 * ZETA_C)

    def test_int_and_fraction_stay_exact(self):
        assert is_exact(Cyc(2) + 1)
        assert is_exact(Cyc(2) * Fraction(1, 3))
        assert Cyc(2) * Fraction(1, 3) == Cyc(Fraction(2, 3))

    def test_as_scalar(self):
        assert as_scalar(3) == Cyc(3)
        assert as_scalar(Fraction(1, 2)) == Cyc(Fraction(1, 2))
        # floats and complexes stay approximate: no snap-to-exact recognizer
        assert as_scalar(1j) == 1j and not is_exact(as_scalar(1j))
        assert as_scalar(0.25) == 0.25 and not is_exact(as_scalar(0.25))
        with pytest.raises(TypeError):
            as_scalar("3")

    def test_is_zero_and_approx(self):
        assert is_zero(ZERO)
        assert is_zero(Cyc(0))
        assert not is_zero(Cyc(0, 1))
        assert is_zero(1e-12, tol=1e-9)
        assert approx_eq(Cyc(1), 1.0 + 1e-12)
        assert not approx_eq(Cyc(1), 1.01)


class TestExactSqrt:
    @given(cycs)
    @settings(max_examples=150)
    def test_square_then_sqrt(self, a):
        r = exact_sqrt(a * a)
        assert r is not None
        assert r * r == a * a

    def test_known_roots(self):
        assert exact_sqrt(Cyc(4)) == Cyc(2)
        assert exact_sqrt(Cyc(2)) == ZETA + ZETA ** 7
        assert exact_sqrt(Cyc(-1)) == I  # or -i; normalized sign
        assert exact_sqrt(I) in (ZETA, -ZETA)
        assert exact_sqrt(Cyc(Fraction(1, 2))) is not None

    def test_non_squares(self):
        assert exact_sqrt(Cyc(3)) is None
        assert exact_sqrt(Cyc(1, 1)) is None

    def test_scalar_sqrt_falls_back(self):
        r = scalar_sqrt(Cyc(3))
        assert isinstance(r, complex)
        assert cmath.isclose(r * r, 3)
        assert scalar_sqrt(Cyc(9)) == Cyc(3)


class TestParseFormat:
    @pytest.mark.parametrize("text,val", [
        ("3", Cyc(3)),
        ("-2/7", Cyc(Fraction(-2, 7))),
        ("i", I),
        ("-i", -I),
        ("2i", 2 * I),
        ("1+i", Cyc(1) + I),
        ("1/2-3i", Cyc(Fraction(1, 2)) - 3 * I),
        ("sqrt2", ZETA + ZETA ** 7),
        ("-1/sqrt2", -(ZETA + ZETA ** 7) * Cyc(Fraction(1, 2))),
    ])
    def test_string_grammar(self, text, val):
        assert parse_scalar(text) == val

    def test_json_number_conventions(self):
        # integer tokens parse exact, float tokens parse approximate
        assert parse_scalar(3) == Cyc(3)
        assert is_exact(parse_scalar(-7))
        v = parse_scalar(0.5)
        assert not is_exact(v) and v == 0.5

    def test_tagged_objects(self):
        assert parse_scalar({"zeta8": [1, 0, 0, 0]}) == ONE
        assert parse_scalar({"zeta8": ["1/2", 0, 1, 0]}) == Cyc(Fraction(1, 2), 0, 1, 0)
        v = parse_scalar({"re": 1.5, "im": -2.0})
        assert v == 1.5 - 2j

    @pytest.mark.parametrize("bad", ["", "sqrt3", "1+", {"zeta8": [1]}, True, None])
    def test_rejects(self, bad):
        with pytest.raises(ParseError):
            parse_scalar(bad)

    @given(cycs)
    @settings(max_examples=150)
    def test_format_parse_round_trip(self, a):
        assert parse_scalar(format_scalar(a)) == a

    def test_round_trip_floats(self):
        for z in (0.5, -1.25, 2.5 + 0.125j, complex(0, -3.5)):
            back = parse_scalar(json.loads(scalar_to_json_text(z)))
            assert to_complex(back) == complex(z)
