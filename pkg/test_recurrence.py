#!/usr/bin/env python3
"""
Tests for the recurrence engine.

Project: delaylab
Version: 1.0.0
License: MIT
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delaylab.config_models import IterationGuard
from delaylab.core import NormalizedParameters, ParameterError, Parameters, equilibrium, normalize
from delaylab.recurrence import (
    InitialConditions, Trajectory, TrajectoryStatus, comparison_simulate, simulate, simulate_x_form, step
)


def run(p, m, init, steps, **guard):
    return simulate(NormalizedParameters(p=p, m=m), InitialConditions.for_delay(init, m),
                    IterationGuard(max_steps=steps, **guard))


class TestInitialConditions:
    def test_delay_from_length(self):
        assert InitialConditions((1.0, 2.0, 3.0)).m == 2

    @pytest.mark.parametrize("values", [(), (1.0, 0.0), (1.0, -2.0), (float('nan'),)])
    def test_rejects_invalid(self, values):
        with pytest.raises(ParameterError):
            InitialConditions(values)

    def test_length_must_match_delay(self):
        with pytest.raises(ParameterError):
            InitialConditions.for_delay([1.0, 1.0], 2)

    def test_uniform_draw_is_seeded(self):
        a = InitialConditions.uniform(3, 0.5, 5.0, np.random.default_rng(7))
        b = InitialConditions.uniform(3, 0.5, 5.0, np.random.default_rng(7))
        assert a == b
        assert all(0.5 <= v <= 5.0 for v in a.values)


class TestStep:
    @pytest.mark.parametrize("y_n,y_lag,p,expected", [(1.0, 1.0, 1.0, 2.0), (2.0, 2.0, 2.0, 2.0),
                                                      (1.0, 2.0, 0.5, 2.0)])
    def test_values(self, y_n, y_lag, p, expected):
        assert step(y_n, y_lag, p) == expected

    def test_rejects_non_positive_current_value(self):
        with pytest.raises(ParameterError):
            step(0.0, 1.0, 1.0)


class TestSimulate:
    def test_equilibrium_orbit(self):
        traj = run(2.0, 1, [2.0, 2.0], 10)
        assert traj.completed
        assert np.all(traj.values == 2.0)

    def test_hand_iteration(self):
        traj = run(1.0, 1, [1.0, 1.0], 6)
        expected = [1.0, 1.0]
        for _ in range(6):
            expected.append(1.0 + expected[-2] / expected[-1] ** 2)
        np.testing.assert_allclose(traj.values, expected[2:], rtol=0, atol=1e-15)
        assert traj.values[:3] == pytest.approx([2.0, 1.25, 2.28])

    def test_converges_in_global_stability_range(self, rng):
        init = InitialConditions.uniform(2, 0.5, 5.0, rng)
        traj = simulate(NormalizedParameters(p=0.3, m=2), init, IterationGuard(max_steps=500))
        assert traj.status == TrajectoryStatus.COMPLETED
        assert abs(traj.values[-1] - equilibrium(0.3).y_bar) <= 1e-6

    def test_indices_and_full_orbit(self):
        traj = run(0.3, 2, [1.0, 1.5, 2.0], 5)
        assert list(traj.indices()) == [-2, -1, 0, 1, 2, 3, 4, 5]
        assert traj.full_orbit()[:3].tolist() == [1.0, 1.5, 2.0]
        assert len(traj) == 5

    def test_values_are_read_only(self):
        traj = run(0.3, 1, [1.0, 1.0], 5)
        with pytest.raises(ValueError):
            traj.values[0] = 3.0

    def test_wrong_initial_length(self):
        with pytest.raises(ParameterError):
            simulate(NormalizedParameters(p=0.3, m=2), InitialConditions((1.0, 1.0)))

    def test_overflow_is_recorded_not_raised(self):
        traj = run(1e6, 1, [1e-3, 1e-3], 50, overflow_bound=1e8)
        assert traj.status == TrajectoryStatus.OVERFLOWED
        assert traj.halted_at == 1
        assert len(traj) == 0

    def test_underflow_is_recorded(self):
        traj = run(0.3, 1, [1.0, 1e-9], 5, underflow_bound=1e-6)
        assert traj.status == TrajectoryStatus.UNDERFLOWED
        assert traj.halted_at == 1

    def test_deterministic(self):
        a = run(0.45, 3, [0.7, 3.1, 1.2, 2.2], 1000)
        b = run(0.45, 3, [0.7, 3.1, 1.2, 2.2], 1000)
        assert np.array_equal(a.values, b.values)

    @settings(max_examples=50, deadline=None)
    @given(p=st.floats(0.01, 0.95), m=st.integers(1, 5),
           init=st.lists(st.floats(0.05, 20.0), min_size=6, max_size=6))
    def test_iterates_exceed_one(self, p, m, init):
        traj = run(p, m, init[:m + 1], 200)
        assert traj.completed
        assert np.all(traj.values > 1.0)

    def test_equilibrium_persistence(self):
        y_bar = equilibrium(0.6).y_bar
        traj = run(0.6, 4, [y_bar] * 5, 300)
        assert np.max(np.abs(traj.values - y_bar)) <= 1e-12


class TestXForm:
    def test_unit_additive_matches_normalized(self):
        x = simulate_x_form(Parameters(A=1.0, B=0.4, m=2), [1.0, 2.0, 3.0], IterationGuard(max_steps=100))
        y = run(0.4, 2, [1.0, 2.0, 3.0], 100)
        assert np.array_equal(x.values, y.values)

    def test_constant_fixed_point(self):
        traj = simulate_x_form(Parameters(A=2.0, B=8.0, m=1), [4.0, 4.0], IterationGuard(max_steps=20))
        assert np.all(traj.values == 4.0)
        assert traj.p == 2.0
        assert traj.scale == 2.0

    @given(A=st.floats(0.2, 5.0), p=st.floats(0.05, 0.45), m=st.integers(1, 4))
    @settings(max_examples=40, deadline=None)
    def test_scaling_consistency(self, A, p, m):
        params = Parameters(A=A, B=p * A * A, m=m)
        y_init = [0.8 + 0.3 * k for k in range(m + 1)]
        guard = IterationGuard(max_steps=200)
        x_traj = simulate_x_form(params, [A * v for v in y_init], guard)
        y_traj = simulate(normalize(params), InitialConditions(tuple(y_init)), guard)
        np.testing.assert_allclose(x_traj.values, A * y_traj.values, rtol=1e-12)
        np.testing.assert_allclose(x_traj.to_normalized().values, y_traj.values, rtol=1e-12)

    def test_to_normalized_of_y_orbit_is_identity(self):
        traj = run(0.3, 1, [1.0, 1.0], 5)
        assert traj.to_normalized() is traj


class TestComparison:
    def test_hand_iteration(self):
        u = comparison_simulate(0.5, 1, [1.0, 1.0], 3)
        np.testing.assert_allclose(u, [1.5, 1.5, 1.75])

    def test_equilibrium_is_fixed(self):
        u = comparison_simulate(0.25, 3, [4.0 / 3.0] * 4, 50)
        np.testing.assert_allclose(u, 4.0 / 3.0, rtol=1e-15)

    def test_converges(self):
        u = comparison_simulate(0.5, 1, [7.0, 0.2], 200)
        assert abs(u[-1] - 2.0) <= 1e-9

    @pytest.mark.parametrize("p", [0.0, 1.0, 3.0])
    def test_rejects_p_outside_unit_interval(self, p):
        with pytest.raises(ParameterError):
            comparison_simulate(p, 1, [1.0, 1.0], 5)


class TestSynthetic:
    def test_default_initial_segment(self):
        traj = Trajectory.synthetic([1.5, 2.5, 1.5], NormalizedParameters(p=0.3, m=2))
        assert traj.initial.values == (1.5, 1.5, 1.5)
        assert traj.completed
        assert traj.provenance == {'synthetic': True}
