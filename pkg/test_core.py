#!/usr/bin/env python3
"""
Tests for parameters, normalization and equilibria.

Project: delaylab
Version: 1.0.0
License: MIT
"""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import bisect_equilibrium
from delaylab.core import (
    DelayLabError, NormalizedParameters, ParameterError, Parameters, comparison_equilibrium, equilibrium,
    equilibrium_of, fixed_point_residual, normalize
)


class TestParameters:
    @pytest.mark.parametrize("A,B,m,p", [(2.0, 2.0, 1, 0.5), (1.0, 7.0, 3, 7.0), (3.0, 4.5, 2, 0.5)])
    def test_normalize(self, A, B, m, p):
        assert normalize(Parameters(A=A, B=B, m=m)) == NormalizedParameters(p=p, m=m)

    @pytest.mark.parametrize("A,B,m", [(0.0, 1.0, 1), (-1.0, 1.0, 1), (1.0, 0.0, 1), (1.0, 1.0, 0),
                                       (1.0, float('nan'), 1), (1.0, 1.0, 1.5), (1.0, 1.0, True)])
    def test_invalid_parameters_rejected(self, A, B, m):
        with pytest.raises(ParameterError):
            Parameters(A=A, B=B, m=m)

    def test_parameter_error_is_value_error(self):
        with pytest.raises(ValueError):
            NormalizedParameters(p=-0.5, m=1)

    def test_parameter_error_carries_details(self):
        error = ParameterError("bad", details={'p': -1})
        assert isinstance(error, DelayLabError)
        assert error.details == {'p': -1}


class TestEquilibrium:
    @pytest.mark.parametrize("p,y_bar", [(2.0, 2.0), (0.75, 1.5), (6.0, 3.0)])
    def test_exact_values(self, p, y_bar):
        eq = equilibrium(p)
        assert eq.y_bar == pytest.approx(y_bar, abs=1e-15)
        assert eq.x_bar == eq.y_bar

    def test_matches_bisection_at_point_three(self):
        assert abs(equilibrium(0.3).y_bar - bisect_equilibrium(0.3)) <= 1e-12

    def test_log_grid_residual_and_bisection(self):
        grid = np.logspace(-6, 3, 1000)
        previous = 1.0
        for p in grid:
            eq = equilibrium(float(p))
            assert abs(eq.y_bar ** 2 - eq.y_bar - p) <= 1e-12 * max(1.0, p)
            assert eq.y_bar > 1.0
            assert abs(eq.y_bar - bisect_equilibrium(float(p))) <= 1e-12 * eq.y_bar
            assert eq.y_bar > previous
            previous = eq.y_bar

    @pytest.mark.parametrize("p", [0.0, -1.0, float('inf'), float('nan')])
    def test_rejects_non_positive(self, p):
        with pytest.raises(ParameterError):
            equilibrium(p)

    def test_scaled_equilibrium(self):
        eq = equilibrium_of(Parameters(A=2.0, B=8.0, m=1))
        assert eq.y_bar == pytest.approx(2.0)
        assert eq.x_bar == pytest.approx(4.0)

    @given(A=st.floats(0.1, 10.0), B=st.floats(0.01, 50.0), m=st.integers(1, 8))
    def test_unnormalized_fixed_point(self, A, B, m):
        params = Parameters(A=A, B=B, m=m)
        x_bar = equilibrium_of(params).x_bar
        assert fixed_point_residual(params) <= 1e-9 * x_bar


class TestComparisonEquilibrium:
    @pytest.mark.parametrize("p,expected", [(0.5, 2.0), (0.9, 10.0)])
    def test_values(self, p, expected):
        assert comparison_equilibrium(p) == pytest.approx(expected, rel=1e-12)

    def test_small_p_limit(self):
        assert abs(comparison_equilibrium(1e-12) - 1.0) <= 1e-9

    @pytest.mark.parametrize("p", [1.0, 1.5, 0.0, -0.2])
    def test_rejects_outside_unit_interval(self, p):
        with pytest.raises(ParameterError):
            comparison_equilibrium(p)

    def test_error_details(self):
        with pytest.raises(ParameterError) as info:
            comparison_equilibrium(2.0)
        assert info.value.details['p'] == 2.0
        assert math.isfinite(info.value.details['p'])
