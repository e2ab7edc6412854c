"""Fuzzy trajectories: gH-differentiation with classification, integration."""

import numpy as np
import pytest
from scipy.integrate import cumulative_trapezoid

from fuzzyvar import _accel
from fuzzyvar.calculus import (
    FuzzyTrajectory,
    GHKind,
    derivative_matrix,
    fuzzy_integral,
    gh_derivative,
)
from fuzzyvar.levels import LevelGrid, OrderRelation, compare, triangular

GRID = LevelGrid.uniform(11)


def crisp_traj(xs, f):
    return FuzzyTrajectory.from_endpoint_functions(GRID, xs, lambda r, x: f(x), lambda r, x: f(x))


class TestGHDerivative:
    def test_crisp_square_is_both(self):
        xs = np.linspace(0.0, 1.0, 101)
        d, kinds = gh_derivative(crisp_traj(xs, lambda x: x**2))
        assert set(kinds) == {GHKind.BOTH}
        expected = np.broadcast_to(2.0 * xs, d.lower.shape)
        np.testing.assert_allclose(d.lower, expected, atol=1e-12)
        np.testing.assert_allclose(d.upper, expected, atol=1e-12)

    def test_translated_triangular_is_both(self):
        xs = np.linspace(0.0, 1.0, 101)
        traj = FuzzyTrajectory.from_endpoint_functions(
            GRID, xs, lambda r, x: x - (1 - r), lambda r, x: x + (1 - r)
        )
        d, kinds = gh_derivative(traj)
        assert set(kinds) == {GHKind.BOTH}
        np.testing.assert_allclose(d.lower, 1.0, atol=1e-12)
        np.testing.assert_allclose(d.upper, 1.0, atol=1e-12)

    def test_spreading_triangular_is_kind1(self):
        xs = np.linspace(0.1, 1.0, 91)
        traj = FuzzyTrajectory.from_endpoint_functions(
            GRID, xs, lambda r, x: x * r, lambda r, x: x * (2 - r)
        )
        d, kinds = gh_derivative(traj)
        assert set(kinds) == {GHKind.KIND1}
        for li, r in enumerate(GRID.levels):
            np.testing.assert_allclose(d.lower[li], r, atol=1e-12)
            np.testing.assert_allclose(d.upper[li], 2 - r, atol=1e-12)

    def test_widening_both_ways_is_none(self):
        # levels [r*x, 2 - r*x]: endpoint derivatives [r, -r] cross at r* > 0
        # in one ordering and lose monotonicity in the other
        xs = np.linspace(0.2, 0.8, 61)
        traj = FuzzyTrajectory.from_endpoint_functions(
            GRID, xs, lambda r, x: r * x, lambda r, x: 2 - r * x
        )
        _, kinds = gh_derivative(traj)
        assert set(kinds) == {GHKind.NONE}

    def test_second_order_accuracy(self):
        # endpoint families are smooth but cubic, so the stencils are inexact
        def run(n):
            xs = np.linspace(0.0, 1.0, n)
            traj = FuzzyTrajectory.from_endpoint_functions(
                GRID, xs, lambda r, x: x**3 + r, lambda r, x: x**3 + 2 - r
            )
            d, kinds = gh_derivative(traj)
            assert GHKind.NONE not in kinds
            return np.max(np.abs(d.lower - 3.0 * xs**2))

        coarse, fine = run(51), run(101)
        assert coarse / fine >= 3.5

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            FuzzyTrajectory.from_endpoint_functions(
                GRID, [0.0, 1.0], lambda r, x: x, lambda r, x: x + 1
            )


class TestIntegral:
    def test_constant_crisp_one(self):
        xs = np.linspace(0.0, 1.0, 101)
        result = fuzzy_integral(crisp_traj(xs, lambda x: np.ones_like(x)))
        np.testing.assert_allclose(result.lower, 1.0, atol=1e-12)
        np.testing.assert_allclose(result.upper, 1.0, atol=1e-12)

    def test_constant_triangular(self):
        xs = np.linspace(0.0, 2.0, 201)
        traj = FuzzyTrajectory.from_endpoint_functions(
            GRID, xs, lambda r, x: 0 * x + r, lambda r, x: 0 * x + (2 - r)
        )
        result = fuzzy_integral(traj)
        expected = triangular(0.0, 2.0, 4.0, GRID)
        np.testing.assert_allclose(result.lower, expected.lower, atol=1e-12)
        np.testing.assert_allclose(result.upper, expected.upper, atol=1e-12)

    def test_linear_crisp_exact(self):
        xs = np.linspace(0.0, 1.0, 1001)
        result = fuzzy_integral(crisp_traj(xs, lambda x: x))
        np.testing.assert_allclose(result.lower, 0.5, atol=1e-6)

    def test_monotone_in_order(self):
        rng = np.random.default_rng(7)
        xs = np.linspace(0.0, 1.0, 41)
        for _ in range(20):
            base = rng.uniform(-2, 2)
            f = FuzzyTrajectory.from_endpoint_functions(
                GRID,
                xs,
                lambda r, x: base + np.sin(3 * x) + r,
                lambda r, x: base + np.sin(3 * x) + 2 - r,
            )
            shift = rng.uniform(0.0, 1.0)
            g = FuzzyTrajectory.from_endpoint_functions(
                GRID,
                xs,
                lambda r, x: base + shift + np.sin(3 * x) + r,
                lambda r, x: base + shift + np.sin(3 * x) + 2 - r,
            )
            rel = compare(fuzzy_integral(f), fuzzy_integral(g))
            assert rel in (
                OrderRelation.PRECEDES,
                OrderRelation.STRICTLY_PRECEDES,
                OrderRelation.EQUIVALENT,
            )

    def test_nonuniform_grid(self):
        xs = np.concatenate([np.linspace(0.0, 0.5, 30), np.linspace(0.52, 1.0, 25)])
        result = fuzzy_integral(crisp_traj(xs, lambda x: 2 * x))
        np.testing.assert_allclose(result.lower, 1.0, atol=1e-3)


class TestFundamentalTheorem:
    def test_integral_of_derivative_roundtrip(self):
        def run(n):
            xs = np.linspace(0.0, 2.0, n)
            traj = crisp_traj(xs, np.sin)
            d, _ = gh_derivative(traj)
            running = cumulative_trapezoid(d.lower[0], xs, initial=0.0)
            return np.max(np.abs(running - (np.sin(xs) - np.sin(0.0))))

        coarse, fine = run(101), run(201)
        assert coarse <= 1e-3
        assert coarse / fine >= 3.5


class TestDerivativeOperator:
    def test_matrix_matches_kernel(self):
        rng = np.random.default_rng(3)
        xs = np.sort(rng.uniform(0.0, 1.0, 40))
        f = rng.normal(size=(5, 40))
        D = derivative_matrix(xs)
        np.testing.assert_allclose(
            (D @ f.T).T, _accel.gradient(f, xs), rtol=1e-12, atol=1e-12
        )

    def test_matches_numpy_gradient(self):
        rng = np.random.default_rng(4)
        xs = np.sort(rng.uniform(0.0, 1.0, 37))
        f = rng.normal(size=37)
        np.testing.assert_allclose(
            _accel.gradient(f, xs), np.gradient(f, xs, edge_order=2), rtol=1e-9, atol=1e-12
        )

    def test_backends_agree(self):
        if not _accel.HAS_NUMBA:
            pytest.skip("numba unavailable")
        rng = np.random.default_rng(5)
        xs = np.sort(rng.uniform(0.0, 2.0, 33))
        f = rng.normal(size=(4, 33))
        np.testing.assert_allclose(
            _accel._gradient_numba(f, xs), _accel._gradient_numpy(f, xs), rtol=1e-13
        )
