import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dispersa.errors import SpectralSymmetryError, ValidationError
from dispersa.spectral import (
    LP,
    Grid1D,
    SpectralField,
    antiderivative,
    dealias_mask,
    derivative,
    dyadic_shells,
    forward_transform,
    fractional_derivative,
    hermitian_defect,
    hilbert_transform,
    inverse_transform,
    linear_propagate,
    lp_project,
    lp_symbol,
    mean_mode,
    parseval_constant,
)

from conftest import gaussian, tone


class TestGrid:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValidationError):
            Grid1D(100, 10.0)

    def test_rejects_bad_length(self):
        with pytest.raises(ValidationError):
            Grid1D(64, -1.0)

    def test_centered(self, grid):
        assert grid.x[0] == pytest.approx(-20.0)
        assert grid.x[grid.n // 2] == pytest.approx(0.0, abs=1e-14)

    def test_nonfinite_field_rejected(self, grid):
        v = np.zeros(grid.n)
        v[3] = np.nan
        with pytest.raises(ValidationError):
            grid.field(v)


class TestTransforms:
    def test_round_trip(self, grid, rng):
        f = grid.field(rng.standard_normal(grid.n))
        back = inverse_transform(forward_transform(f))
        assert np.max(np.abs(back.values - f.values)) < 1e-12

    def test_parseval(self, grid, rng):
        f = grid.field(rng.standard_normal(grid.n))
        F = forward_transform(f)
        lhs = grid.dx * np.sum(f.values ** 2)
        rhs = parseval_constant(grid) * np.sum(np.abs(F.coefficients) ** 2)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_gaussian_transform_matches_continuum(self):
        g = Grid1D(512, 60.0)
        F = forward_transform(gaussian(g))
        exact = np.exp(-g.xi ** 2 / 4) / np.sqrt(2)
        assert np.max(np.abs(F.coefficients - exact)) < 1e-12

    def test_non_hermitian_rejected(self, grid):
        c = np.zeros(grid.n, dtype=complex)
        c[3] = 1.0
        F = SpectralField(grid, c)
        assert hermitian_defect(F) > 0.5
        with pytest.raises(SpectralSymmetryError):
            inverse_transform(F)


class TestMultipliers:
    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_derivative_of_tone(self, grid, k):
        # Physical-space error is measured against the operator norm
        # sup|xi|^k, the scale at which rounding in idle modes is amplified.
        xi, f = tone(grid, 5, 0.3)
        expected = np.real((1j * xi) ** k * np.exp(1j * (xi * grid.x + 0.3)))
        err = np.max(np.abs(derivative(f, k).values - expected))
        assert err < 1e-12 * grid.nyquist ** k

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_derivative_tone_coefficient(self, grid, k):
        xi, f = tone(grid, 5, 0.3)
        F = forward_transform(f)
        D = forward_transform(derivative(f, k))
        assert D.coefficients[5] / F.coefficients[5] == pytest.approx((1j * xi) ** k, rel=1e-12)

    def test_fractional_and_hilbert(self, grid):
        xi, f = tone(grid, 7)
        half = fractional_derivative(f, 0.5)
        assert np.max(np.abs(half.values - np.sqrt(xi) * f.values)) < 1e-12
        h = hilbert_transform(f)
        assert np.max(np.abs(h.values - np.sin(xi * grid.x))) < 1e-12

    def test_antiderivative_requires_mean_zero(self, grid):
        with pytest.raises(ValidationError):
            antiderivative(grid.field(np.ones(grid.n)))
        xi, f = tone(grid, 4)
        a = antiderivative(f)
        assert np.max(np.abs(a.values - np.sin(xi * grid.x) / xi)) < 1e-12

    def test_negative_power_requires_mean_zero(self, grid):
        with pytest.raises(ValidationError):
            fractional_derivative(gaussian(grid), -0.5)

    def test_mean_mode(self, grid):
        f = gaussian(grid)
        assert mean_mode(f) == pytest.approx(np.sqrt(np.pi) / np.sqrt(2 * np.pi), rel=1e-12)

    def test_derivative_order_validated(self, grid):
        with pytest.raises(ValidationError):
            derivative(gaussian(grid), 6)


class TestLittlewoodPaley:
    def test_partition_of_unity(self, grid, rng):
        f = grid.field(rng.standard_normal(grid.n))
        low = lp_project(f, grid.dxi, LP.LT)
        total = low.values.copy()
        N = grid.dxi
        while N < 4 * grid.nyquist:
            total += lp_project(f, N, LP.AT).values
            N *= 2
        assert np.max(np.abs(total - f.values)) < 1e-10

    def test_le_ge_complement(self, grid):
        xi = grid.xi
        a = lp_symbol(2.0, LP.LT).evaluate(grid).real
        b = lp_symbol(2.0, LP.GE).evaluate(grid).real
        assert np.max(np.abs(a + b - 1)) < 1e-15
        shell = lp_symbol(2.0, LP.AT).evaluate(grid).real
        assert np.all(shell[(np.abs(xi) < 0.5) | (np.abs(xi) > 4.0)] == 0)

    def test_shells_fit_grid(self, grid):
        for j in dyadic_shells(grid):
            assert 2.0 ** (j - 1) >= grid.dxi
            assert 2.0 ** (j + 1) <= grid.nyquist


class TestPropagation:
    def test_group_property(self, grid):
        f = gaussian(grid)
        a = linear_propagate(linear_propagate(f, 0.3), 0.4)
        b = linear_propagate(f, 0.7)
        assert np.max(np.abs(a.values - b.values)) < 1e-12
        assert b.time == pytest.approx(0.7)

    def test_tone_phase(self, grid):
        xi, f = tone(grid, 3)
        u = linear_propagate(f, 0.2)
        assert np.max(np.abs(u.values - np.cos(xi * grid.x + xi ** 5 * 0.2))) < 1e-12

    def test_dealias_mask(self, grid):
        m = dealias_mask(grid, 2 / 3)
        assert m[0] and not m[grid.n // 2]
        assert np.all(np.abs(grid.xi[m]) <= 2 / 3 * grid.nyquist)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 60), st.floats(0, 2 * np.pi), st.integers(1, 5))
def test_derivative_tone_property(k, phase, order):
    g = Grid1D(128, 2 * np.pi)
    xi, f = tone(g, k, phase)
    expected = np.real((1j * xi) ** order * np.exp(1j * (xi * g.x + phase)))
    assert np.max(np.abs(derivative(f, order).values - expected)) <= 1e-12 * g.nyquist ** order


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=16, max_size=16))
def test_round_trip_property(vals):
    g = Grid1D(16, 3.0)
    f = g.field(np.array(vals))
    assert np.allclose(inverse_transform(forward_transform(f)).values, f.values,
                       atol=1e-12, rtol=0)
