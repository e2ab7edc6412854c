"""Fuzzy-number core: construction, arithmetic, metric, order, gH-difference."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuzzyvar.levels import (
    FuzzyNumber,
    GridMismatchError,
    InvalidFuzzyNumberError,
    LevelGrid,
    NonexistenceReport,
    OrderRelation,
    add,
    compare,
    crisp,
    fuzzy_zero,
    gh_difference,
    hausdorff,
    multiply,
    scalar_mul,
    triangular,
    validate,
)

GRID = LevelGrid.uniform(11)

coord = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)


@st.composite
def triangles(draw):
    x, y, z = sorted(draw(st.tuples(coord, coord, coord)))
    return triangular(x, y, z, GRID)


class TestGrid:
    def test_uniform(self):
        assert len(GRID) == 11
        assert GRID.levels[0] == 0.0 and GRID.levels[-1] == 1.0

    @pytest.mark.parametrize(
        "levels", [[0.0], [0.1, 1.0], [0.0, 0.9], [0.0, 0.5, 0.5, 1.0], [0.0, 0.7, 0.4, 1.0]]
    )
    def test_rejects_bad_levels(self, levels):
        with pytest.raises(ValueError):
            LevelGrid(levels)

    def test_equality_by_content(self):
        assert LevelGrid([0.0, 0.5, 1.0]) == LevelGrid([0.0, 0.5, 1.0])
        assert LevelGrid([0.0, 0.5, 1.0]) != LevelGrid([0.0, 0.4, 1.0])


class TestTriangular:
    def test_level_formula_0_1_2(self):
        a = triangular(0.0, 1.0, 2.0, GRID)
        # r = 0.5 sits at grid index 5
        assert a.level(5) == (0.5, 1.5)

    def test_crisp_degenerate(self):
        k = crisp(3.5, GRID)
        np.testing.assert_allclose(k.lower, 3.5, rtol=1e-15)
        np.testing.assert_allclose(k.upper, 3.5, rtol=1e-15)

    def test_level_formula_1_2_4(self):
        a = triangular(1.0, 2.0, 4.0, GRID)
        assert a.level(0) == (1.0, 4.0)
        assert a.level(10) == (2.0, 2.0)

    def test_rejects_unordered(self):
        with pytest.raises(ValueError):
            triangular(2.0, 1.0, 3.0, GRID)
        with pytest.raises(ValueError):
            triangular(0.0, 4.0, 3.0, GRID)


class TestValidate:
    GRID3 = LevelGrid([0.0, 0.5, 1.0])

    def test_valid_triangular_endpoints(self):
        assert validate([0.0, 0.5, 1.0], [2.0, 1.5, 1.0], self.GRID3).ok

    def test_non_monotone_lower(self):
        res = validate([0.0, 1.0, 0.5], [2.0, 2.0, 2.0], self.GRID3)
        assert not res.ok
        assert res.condition == "lower endpoints not non-decreasing"
        assert res.index == 2

    def test_crossing_at_top(self):
        res = validate([0.0, 0.0, 2.0], [1.0, 1.0, 1.0], self.GRID3)
        assert not res.ok
        assert res.condition == "lower exceeds upper at level 1"

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            validate([0.0, 1.0], [2.0, 1.0], self.GRID3)

    def test_constructor_enforces(self):
        with pytest.raises(InvalidFuzzyNumberError):
            FuzzyNumber(self.GRID3, [0.0, 1.0, 0.5], [2.0, 2.0, 2.0])


class TestArithmetic:
    def test_add_triangulars(self):
        c = triangular(0.0, 1.0, 2.0, GRID) + triangular(1.0, 2.0, 3.0, GRID)
        expected = triangular(1.0, 3.0, 5.0, GRID)
        np.testing.assert_allclose(c.lower, expected.lower)
        np.testing.assert_allclose(c.upper, expected.upper)

    def test_zero_identity(self):
        a = triangular(-1.0, 0.5, 2.0, GRID)
        c = fuzzy_zero(GRID) + a
        np.testing.assert_array_equal(c.lower, a.lower)
        np.testing.assert_array_equal(c.upper, a.upper)

    def test_negative_scalar_swaps(self):
        c = scalar_mul(-1.0, triangular(0.0, 1.0, 2.0, GRID))
        expected = triangular(-2.0, -1.0, 0.0, GRID)
        np.testing.assert_allclose(c.lower, expected.lower)
        np.testing.assert_allclose(c.upper, expected.upper)

    def test_grid_mismatch(self):
        other = LevelGrid([0.0, 1.0])
        with pytest.raises(GridMismatchError):
            add(triangular(0, 1, 2, GRID), triangular(0, 1, 2, other))

    @given(a=triangles(), b=triangles())
    @settings(max_examples=150, deadline=None)
    def test_add_commutes(self, a, b):
        ab, ba = add(a, b), add(b, a)
        np.testing.assert_allclose(ab.lower, ba.lower, atol=1e-12)
        np.testing.assert_allclose(ab.upper, ba.upper, atol=1e-12)

    @given(a=triangles(), b=triangles(), c=triangles())
    @settings(max_examples=150, deadline=None)
    def test_add_associates(self, a, b, c):
        left = add(add(a, b), c)
        right = add(a, add(b, c))
        np.testing.assert_allclose(left.lower, right.lower, atol=1e-12)
        np.testing.assert_allclose(left.upper, right.upper, atol=1e-12)

    @given(a=triangles(), lam=coord, mu=coord)
    @settings(max_examples=150, deadline=None)
    def test_scalar_composition_mixed_signs(self, a, lam, mu):
        left = scalar_mul(lam, scalar_mul(mu, a))
        right = scalar_mul(lam * mu, a)
        np.testing.assert_allclose(left.lower, right.lower, atol=1e-10)
        np.testing.assert_allclose(left.upper, right.upper, atol=1e-10)


class TestMultiply:
    def test_crisp_two_times_triangular(self):
        c = multiply(crisp(2.0, GRID), triangular(0.0, 1.0, 2.0, GRID))
        expected = triangular(0.0, 2.0, 4.0, GRID)
        np.testing.assert_allclose(c.lower, expected.lower)
        np.testing.assert_allclose(c.upper, expected.upper)

    def test_one_identity(self):
        a = triangular(-2.0, 0.5, 1.0, GRID)
        c = a.product(crisp(1.0, GRID))
        np.testing.assert_allclose(c.lower, a.lower)
        np.testing.assert_allclose(c.upper, a.upper)

    def test_sign_straddling_square(self):
        a = triangular(-1.0, 0.0, 1.0, GRID)
        c = multiply(a, a)
        assert c.level(0) == (-1.0, 1.0)

    @given(a=triangles(), b=triangles())
    @settings(max_examples=100, deadline=None)
    def test_matches_four_product_enumeration(self, a, b):
        c = multiply(a, b)
        for i in range(len(GRID)):
            prods = [
                a.lower[i] * b.lower[i],
                a.lower[i] * b.upper[i],
                a.upper[i] * b.lower[i],
                a.upper[i] * b.upper[i],
            ]
            assert c.lower[i] == min(prods)
            assert c.upper[i] == max(prods)


class TestGHDifference:
    def test_self_difference_is_zero(self):
        a = triangular(0.0, 1.0, 3.0, GRID)
        c = gh_difference(a, a)
        assert isinstance(c, FuzzyNumber)
        np.testing.assert_array_equal(c.lower, 0.0)
        np.testing.assert_array_equal(c.upper, 0.0)

    def test_shifted_triangulars_give_crisp(self):
        c = gh_difference(triangular(1, 2, 3, GRID), triangular(0, 1, 2, GRID))
        assert isinstance(c, FuzzyNumber)
        np.testing.assert_allclose(c.lower, 1.0)
        np.testing.assert_allclose(c.upper, 1.0)

    def test_nonexistence_reported(self):
        # a is left-spread, b right-spread: both candidate endpoint families
        # come out increasing in r, so no valid ordering exists
        a = triangular(-2.0, 0.0, 0.0, GRID)
        b = triangular(0.0, 0.0, 2.0, GRID)
        c = gh_difference(a, b)
        assert isinstance(c, NonexistenceReport)
        assert c.condition == "upper endpoints not non-increasing"

    @given(a=triangles(), b=triangles())
    @settings(max_examples=200, deadline=None)
    def test_definitional_identity(self, a, b):
        s = add(a, b)
        c = gh_difference(s, b)
        assert isinstance(c, FuzzyNumber)
        np.testing.assert_allclose(c.lower, a.lower, atol=1e-12)
        np.testing.assert_allclose(c.upper, a.upper, atol=1e-12)

    @given(a=triangles(), b=triangles())
    @settings(max_examples=200, deadline=None)
    def test_reconstruction_when_exists(self, a, b):
        c = gh_difference(a, b)
        if isinstance(c, NonexistenceReport):
            return
        bc = add(b, c)
        amc = add(a, scalar_mul(-1.0, c))
        first = max(np.max(np.abs(bc.lower - a.lower)), np.max(np.abs(bc.upper - a.upper)))
        second = max(np.max(np.abs(amc.lower - b.lower)), np.max(np.abs(amc.upper - b.upper)))
        assert min(first, second) <= 1e-12


class TestHausdorff:
    def test_identity(self):
        a = triangular(0.0, 1.0, 2.0, GRID)
        assert hausdorff(a, a) == 0.0

    def test_triangular_vs_crisp_core(self):
        # endpoint gaps are 1-r on both sides, so the max over r sits at r=0
        assert hausdorff(triangular(0, 1, 2, GRID), crisp(1.0, GRID)) == 1.0

    @given(a=triangles(), b=triangles())
    @settings(max_examples=200, deadline=None)
    def test_symmetry(self, a, b):
        assert hausdorff(a, b) == hausdorff(b, a)

    @given(a=triangles(), b=triangles(), c=triangles())
    @settings(max_examples=200, deadline=None)
    def test_triangle_inequality(self, a, b, c):
        assert hausdorff(a, c) <= hausdorff(a, b) + hausdorff(b, c) + 1e-12

    @given(a=triangles(), b=triangles())
    @settings(max_examples=200, deadline=None)
    def test_identity_of_indiscernibles(self, a, b):
        d = hausdorff(a, b)
        assert d >= 0.0
        if d == 0.0:
            np.testing.assert_array_equal(a.lower, b.lower)
            np.testing.assert_array_equal(a.upper, b.upper)


class TestCompare:
    def test_self_equivalent(self):
        a = triangular(0.0, 1.0, 2.0, GRID)
        assert compare(a, a) is OrderRelation.EQUIVALENT

    def test_strict_precedence(self):
        rel = compare(triangular(0, 1, 2, GRID), triangular(1, 2, 3, GRID))
        assert rel is OrderRelation.STRICTLY_PRECEDES

    def test_noncomparable(self):
        rel = compare(triangular(0, 3, 3, GRID), triangular(1, 2, 4, GRID))
        assert rel is OrderRelation.NONCOMPARABLE

    def test_weak_precedence_without_strict_pair(self):
        # lower endpoints strictly grow, upper endpoints agree everywhere:
        # no level is strict on both sides at once
        a = triangular(0.0, 2.0, 2.0, GRID)
        b = triangular(1.0, 2.0, 2.0, GRID)
        assert compare(a, b) is OrderRelation.PRECEDES
        assert compare(b, a) is OrderRelation.SUCCEEDS

    @given(a=triangles(), b=triangles())
    @settings(max_examples=200, deadline=None)
    def test_mirror_consistency(self, a, b):
        rel = compare(a, b)
        mirror = compare(b, a)
        expected = {
            OrderRelation.EQUIVALENT: OrderRelation.EQUIVALENT,
            OrderRelation.PRECEDES: OrderRelation.SUCCEEDS,
            OrderRelation.STRICTLY_PRECEDES: OrderRelation.STRICTLY_SUCCEEDS,
            OrderRelation.SUCCEEDS: OrderRelation.PRECEDES,
            OrderRelation.STRICTLY_SUCCEEDS: OrderRelation.STRICTLY_PRECEDES,
            OrderRelation.NONCOMPARABLE: OrderRelation.NONCOMPARABLE,
        }[rel]
        assert mirror is expected


@given(a=triangles())
@settings(max_examples=200, deadline=None)
def test_constructors_always_valid(a):
    assert validate(a.lower, a.upper, GRID).ok
