import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from heatmono.errors import CapExceeded, InvalidExponents, InvalidMeasure
from heatmono.measure import (
    DiscreteMeasure,
    ExponentPair,
    heat_evolve,
    is_even_integer,
    mu_hat,
    parse_exponent,
    tensor_power,
    three_atom_measure,
    tilde_measure,
)

DELTA0 = DiscreteMeasure.from_atoms([(0, 1.0)])
FAMILY_A = three_atom_measure(7, 9, 0.4)


@st.composite
def integer_measures(draw, max_atoms=5, max_loc=20, max_w=2.0):
    locs = draw(st.lists(st.integers(-max_loc, max_loc), min_size=1, max_size=max_atoms, unique=True))
    ws = draw(st.lists(st.floats(0.05, max_w), min_size=len(locs), max_size=len(locs)))
    return DiscreteMeasure.from_atoms(zip(locs, ws))


class TestConstruction:
    def test_rejects_nonpositive_weight(self):
        with pytest.raises(InvalidMeasure):
            DiscreteMeasure.from_atoms([(0, 1.0), (1, -0.5)])
        with pytest.raises(InvalidMeasure):
            DiscreteMeasure.from_atoms([(0, 0.0)])

    def test_rejects_duplicates_and_empty(self):
        with pytest.raises(InvalidMeasure):
            DiscreteMeasure.from_atoms([(3, 1.0), (3, 2.0)])
        with pytest.raises(InvalidMeasure):
            DiscreteMeasure.from_atoms([])

    def test_immutable_arrays(self):
        with pytest.raises(ValueError):
            FAMILY_A.weights[0] = 5.0

    def test_integer_support_flag(self):
        assert FAMILY_A.integer_supported
        assert DiscreteMeasure.from_atoms([(0, 1), (1 + 1e-11, 1)]).integer_supported
        assert not DiscreteMeasure.from_atoms([(0, 1), (0.5, 1)]).integer_supported

    def test_json_round_trip(self, tmp_path):
        mu = DiscreteMeasure.from_atoms([((0, 1), 1.0), ((2.5, -1), 0.3)])
        back = DiscreteMeasure.from_json(mu.to_json())
        assert back == mu
        path = tmp_path / "mu.json"
        path.write_text(FAMILY_A.to_json())
        assert DiscreteMeasure.load(path) == FAMILY_A
        assert FAMILY_A.to_dict() == {"dim": 1, "atoms": [
            {"x": [0.0], "w": 1.0}, {"x": [7.0], "w": 0.4}, {"x": [9.0], "w": 0.4}]}

    def test_json_malformed(self):
        with pytest.raises(InvalidMeasure):
            DiscreteMeasure.from_json('{"dim": 2, "atoms": [{"x": [1], "w": 1}]}')
        with pytest.raises(InvalidMeasure):
            DiscreteMeasure.from_json("not json")


class TestExponents:
    def test_parse(self):
        assert parse_exponent("4/3") == Fraction(4, 3)
        assert parse_exponent("2.5") == Fraction(5, 2)
        assert parse_exponent(3) == Fraction(3)
        assert isinstance(parse_exponent(2.5), float)

    def test_dual_exponent(self):
        assert ExponentPair("4/3", 4).p_dual == 4
        assert ExponentPair(1, 3).p_dual == math.inf
        assert ExponentPair(1.5, 3.0).p_dual == pytest.approx(3.0)

    @pytest.mark.parametrize("p,q", [(0.5, 3), (2.5, 2), (1, 1.5), ("3/2", 4)])
    def test_invalid(self, p, q):
        with pytest.raises(InvalidExponents):
            ExponentPair(p, q)

    def test_boundary_float_q_equals_dual(self):
        # 4/3 as a float has dual 4.000000000000001 or so; the boundary must be accepted
        ExponentPair(4 / 3, 4.0)
        ExponentPair(1.2, 6.0)

    @pytest.mark.parametrize("q,expected", [
        (Fraction(4), True), (Fraction(3), False), (Fraction(5, 2), False),
        (4.0, True), (4.0 + 1e-13, True), (4.0 + 1e-9, False), (2, True), (6.3, False),
    ])
    def test_even_integer(self, q, expected):
        assert is_even_integer(q) is expected


class TestMuHat:
    def test_examples(self):
        assert mu_hat(DELTA0, 0.37) == pytest.approx(1 + 0j, abs=1e-15)
        assert mu_hat(FAMILY_A, 0.0) == pytest.approx(1.8 + 0j, abs=1e-15)
        expected = 1 + 0.4 * cmath.exp(-7j * math.pi) + 0.4 * cmath.exp(-9j * math.pi)
        assert mu_hat(FAMILY_A, 0.5) == pytest.approx(expected, abs=1e-14)
        assert mu_hat(FAMILY_A, 0.5) == pytest.approx(0.2 + 0j, abs=1e-14)

    def test_vectorized_shape(self):
        xi = np.linspace(0, 1, 11)
        assert mu_hat(FAMILY_A, xi).shape == (11,)

    @given(integer_measures(), st.floats(-3, 3))
    def test_conjugate_symmetry_and_mass(self, mu, xi):
        assert mu_hat(mu, -xi) == pytest.approx(np.conj(mu_hat(mu, xi)), abs=1e-12)
        assert mu_hat(mu, 0.0).real == pytest.approx(mu.mass, rel=1e-15)

    def test_lower_bound_for_dominant_atom(self):
        xi = np.linspace(0, 1, 20001)
        for r in (0.1, 0.25, 0.4, 0.49):
            mu = three_atom_measure(13, 29, r)
            assert np.min(np.abs(mu_hat(mu, xi))) >= 1 - 2 * r - 1e-12

    @given(st.lists(st.integers(-5, 5), min_size=1, max_size=3, unique=True), st.integers(2, 3),
           st.lists(st.floats(-1, 1), min_size=3, max_size=3))
    @settings(max_examples=30)
    def test_tensor_commutes_with_transform(self, locs, d, xis):
        mu = DiscreteMeasure.from_atoms((x, 0.3 + 0.1 * i) for i, x in enumerate(locs))
        prod = tensor_power(mu, d)
        xi = np.array(xis[:d])
        expected = np.prod([mu_hat(mu, v) for v in xi])
        assert mu_hat(prod, xi) == pytest.approx(expected, abs=1e-12)


class TestHeatEvolve:
    def test_examples(self):
        assert heat_evolve(DELTA0, 1.0, 0.0) == pytest.approx(1.0, rel=1e-15)
        assert heat_evolve(DELTA0, 4.0, 2.0) == pytest.approx(0.5 * math.exp(-math.pi), rel=1e-15)
        assert heat_evolve(DiscreteMeasure.from_atoms([(3, 2.0)]), 1.0, 3.0) == pytest.approx(2.0)

    @pytest.mark.parametrize("t", [0.05, 1.0, 7.0])
    def test_mass_preserved(self, t):
        half = 9 * math.sqrt(t) + 1
        pts = [0, 7, 9]
        val, _ = integrate.quad(lambda x: heat_evolve(FAMILY_A, t, x), -half, 9 + half,
                                points=pts, limit=400, epsabs=1e-13)
        assert val == pytest.approx(FAMILY_A.mass, rel=1e-10)

    def test_positive(self):
        x = np.linspace(-5, 15, 101)
        assert np.all(heat_evolve(FAMILY_A, 0.3, x) > 0)

    def test_two_dimensional(self):
        mu = tensor_power(DiscreteMeasure.from_atoms([(0, 1.0), (1, 0.5)]), 2)
        val = heat_evolve(mu, 2.0, np.array([0.3, -0.2]))
        one_d = DiscreteMeasure.from_atoms([(0, 1.0), (1, 0.5)])
        assert val == pytest.approx(heat_evolve(one_d, 2.0, 0.3) * heat_evolve(one_d, 2.0, -0.2))


class TestDerivedMeasures:
    def test_tilde(self):
        mu = three_atom_measure(13, 29, 0.25)
        assert tilde_measure(mu, 2) == three_atom_measure(13, 29, 0.5)
        assert tilde_measure(DELTA0, 1.7) == DELTA0
        single = tilde_measure(DiscreteMeasure.from_atoms([(7, 0.4)]), 2)
        assert single.weights[0] == pytest.approx(0.6324555320336759, rel=1e-15)
        with pytest.raises(InvalidExponents):
            tilde_measure(mu, 1)

    def test_tensor_examples(self):
        two = tensor_power(DiscreteMeasure.from_atoms([(0, 1.0), (1, 1.0)]), 2)
        assert {tuple(x) for x in two.locations} == {(0, 0), (0, 1), (1, 0), (1, 1)}
        assert np.all(two.weights == 1)
        three = tensor_power(DELTA0, 3)
        assert three.natoms == 1 and three.dim == 3
        w = tensor_power(DiscreteMeasure.from_atoms([(0, 1.0), (7, 0.4)]), 2).weights
        assert sorted(w) == pytest.approx([0.16, 0.4, 0.4, 1.0])

    def test_tensor_cap(self):
        with pytest.raises(CapExceeded):
            tensor_power(FAMILY_A, 12, cap=10**5)
        with pytest.raises(InvalidMeasure):
            tensor_power(tensor_power(FAMILY_A, 2), 2)
