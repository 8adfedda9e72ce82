"""Belief algebra: worked examples and algebraic invariants."""

import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from heafusion.belief import (
    BinaryMass,
    combine,
    combine_all,
    conflict,
    discount,
    pignistic,
    vacuous,
)
from heafusion.errors import GammaOutOfRange, TotalConflict

from conftest import masses
from oracles import combine_exact


def approx_mass(m: BinaryMass, expected, tol=1e-9):
    assert m.m_first == pytest.approx(float(expected[0]), abs=tol)
    assert m.m_second == pytest.approx(float(expected[1]), abs=tol)
    assert m.m_both == pytest.approx(float(expected[2]), abs=tol)


class TestValidation:
    def test_rejects_negative_component(self):
        with pytest.raises(ValueError):
            BinaryMass(-0.1, 0.4, 0.7)

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            BinaryMass(0.5, 0.5, 0.5)

    def test_accepts_rounding_noise(self):
        BinaryMass(0.1, 0.2, 0.7 + 1e-12)


class TestVacuous:
    def test_definition(self):
        assert vacuous().as_tuple() == (0.0, 0.0, 1.0)

    def test_neutral_element(self):
        x = BinaryMass(0.3, 0.25, 0.45)
        approx_mass(combine(vacuous(), x), x.as_tuple(), tol=1e-12)

    def test_pignistic_is_half(self):
        assert pignistic(vacuous()) == 0.5


class TestCombine:
    def test_two_agreeing_pieces(self):
        got = combine(BinaryMass(0.1, 0, 0.9), BinaryMass(0.1, 0, 0.9))
        approx_mass(got, (0.19, 0.0, 0.81))

    def test_supplement_example_step(self):
        # fourth piece of the worked example, exact values from the
        # rational oracle
        expected = combine_exact(
            [("0.271", "0", "0.729"), ("0", "0.1", "0.9")]
        )
        got = combine(BinaryMass(0.271, 0, 0.729), BinaryMass(0, 0.1, 0.9))
        approx_mass(got, expected)
        approx_mass(got, (0.25069, 0.07493, 0.67437), tol=1e-5)

    def test_total_conflict(self):
        with pytest.raises(TotalConflict):
            combine(BinaryMass(1, 0, 0), BinaryMass(0, 1, 0))


class TestCombineAll:
    def test_worked_example(self):
        pieces = [(0.1, 0, 0.9)] * 3 + [(0, 0.1, 0.9)]
        expected = combine_exact([("0.1", "0", "0.9")] * 3 + [("0", "0.1", "0.9")])
        got = combine_all([BinaryMass(*p) for p in pieces])
        approx_mass(got, expected, tol=1e-12)
        # the published rounded triple is within 2e-3
        approx_mass(got, (0.25, 0.075, 0.675), tol=2e-3)

    def test_empty_list(self):
        assert combine_all([]).as_tuple() == (0.0, 0.0, 1.0)

    @given(st.permutations(list(range(4))))
    def test_permutation_invariance(self, order):
        pieces = [
            BinaryMass(0.1, 0, 0.9),
            BinaryMass(0, 0.2, 0.8),
            BinaryMass(0.3, 0.1, 0.6),
            BinaryMass(0.05, 0.05, 0.9),
        ]
        base = combine_all(pieces)
        shuffled = combine_all([pieces[i] for i in order])
        approx_mass(shuffled, base.as_tuple(), tol=1e-12)


class TestDiscount:
    def test_identity_at_one(self):
        m = BinaryMass(0.4, 0.2, 0.4)
        assert discount(m, 1.0) == m

    def test_vacuous_at_zero(self):
        assert discount(BinaryMass(0.4, 0.2, 0.4), 0.0).as_tuple() == (0.0, 0.0, 1.0)

    def test_half(self):
        approx_mass(discount(BinaryMass(0.4, 0.2, 0.4), 0.5), (0.2, 0.1, 0.7), tol=1e-12)

    @pytest.mark.parametrize("gamma", [-0.01, 1.01, math.nan])
    def test_out_of_range(self, gamma):
        with pytest.raises(GammaOutOfRange):
            discount(vacuous(), gamma)


class TestConflict:
    def test_vacuous_has_none(self):
        assert conflict(vacuous(), BinaryMass(0.9, 0.05, 0.05)) == 0.0

    def test_certain_contradiction(self):
        assert conflict(BinaryMass(1, 0, 0), BinaryMass(0, 1, 0)) == 1.0

    def test_worked_value(self):
        got = conflict(BinaryMass(0.271, 0, 0.729), BinaryMass(0, 0.1, 0.9))
        assert got == pytest.approx(0.0271, abs=1e-12)


class TestPignistic:
    @pytest.mark.parametrize(
        "mass,expected",
        [((0, 0, 1), 0.5), ((1, 0, 0), 1.0), ((0.25, 0.075, 0.675), 0.5875)],
    )
    def test_values(self, mass, expected):
        assert pignistic(BinaryMass(*mass)) == pytest.approx(expected, abs=1e-12)


class TestProperties:
    @given(masses(), masses())
    def test_normalization_and_bounds(self, x, y):
        assume(conflict(x, y) < 1.0 - 1e-12)
        z = combine(x, y)
        assert abs(z.m_first + z.m_second + z.m_both - 1.0) <= 1e-9
        assert z.m_first >= 0 and z.m_second >= 0 and z.m_both >= 0

    @given(masses(), masses())
    def test_commutativity_exact(self, x, y):
        assume(conflict(x, y) < 1.0 - 1e-12)
        assert combine(x, y) == combine(y, x)

    @given(masses(min_both=0.01), masses(min_both=0.01), masses(min_both=0.01))
    def test_associativity(self, x, y, z):
        left = combine(combine(x, y), z)
        right = combine(x, combine(y, z))
        approx_mass(left, right.as_tuple(), tol=1e-12)

    @given(masses())
    def test_vacuous_neutrality(self, x):
        approx_mass(combine(x, vacuous()), x.as_tuple(), tol=1e-12)

    @given(masses(), st.floats(0, 1), st.floats(0, 1))
    def test_discount_monotone_in_ignorance(self, m, g1, g2):
        lo, hi = min(g1, g2), max(g1, g2)
        assert discount(m, lo).m_both >= discount(m, hi).m_both - 1e-12

    @given(masses())
    def test_pignistic_between_belief_and_plausibility(self, m):
        assert m.m_first - 1e-12 <= pignistic(m) <= m.m_first + m.m_both + 1e-12

    @given(masses(min_both=0.001), masses(min_both=0.001))
    def test_matches_exact_oracle(self, x, y):
        expected = combine_exact([x.as_tuple(), y.as_tuple()])
        approx_mass(combine(x, y), expected, tol=1e-12)
