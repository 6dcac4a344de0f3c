#!/usr/bin/env python3
"""
Tests for parameter sweeps, attractor scans and the stability boundary.

Project: delaylab
Version: 1.0.0
License: MIT
"""

import dataclasses
import math

import numpy as np
import pytest

from delaylab.config_models import IterationGuard, SweepConfig
from delaylab.core import ParameterError, equilibrium
from delaylab.linearization import spectral_radius
from delaylab.recurrence import TrajectoryStatus
from delaylab.sweep import (
    SweepCell, attractor_scan, conjecture_evidence, run_cell, stability_boundary, stability_sweep, trial_rng
)


def assert_same_grid(a, b):
    """Cell-by-cell equality where nan medians compare equal."""
    assert len(a) == len(b)
    for left, right in zip(a, b):
        np.testing.assert_equal(dataclasses.astuple(left), dataclasses.astuple(right))


class TestSweepConfig:
    def test_grid_includes_endpoints(self):
        cfg = SweepConfig(p_min=0.05, p_max=0.45, p_steps=9, seed=1)
        grid = cfg.p_grid()
        assert len(grid) == 9
        assert grid[0] == 0.05 and grid[-1] == 0.45
        assert grid[4] == pytest.approx(0.25)

    def test_single_point(self):
        assert SweepConfig(p_min=0.3, p_max=0.3, seed=1).p_grid() == [0.3]


class TestStabilitySweep:
    def test_global_stability_range_converges(self):
        cfg = SweepConfig(p_min=0.05, p_max=0.45, p_steps=9, m_values=[1, 2, 3], trials=50,
                          seed=42, steps=5000, tol=1e-6)
        cells = stability_sweep(cfg)
        assert [(c.p, c.m) for c in cells][:4] == [(0.05, 1), (0.05, 2), (0.05, 3), (cfg.p_grid()[1], 1)]
        for cell in cells:
            assert cell.trials == 50
            assert cell.n_converged == 50, cell
            assert cell.n_diverged == 0
            assert cell.median_err <= 1e-6
            assert 0.0 < cell.median_rate < 1.0

    def test_rerun_is_identical(self):
        cfg = SweepConfig(p_min=0.1, p_max=0.6, p_steps=3, m_values=[1, 2], trials=8, seed=7, steps=2000)
        assert_same_grid(stability_sweep(cfg), stability_sweep(cfg))

    def test_worker_pool_matches_in_process(self):
        cfg = SweepConfig(p_min=0.2, p_max=0.4, p_steps=2, m_values=[1, 3], trials=5, seed=99, steps=1000)
        assert_same_grid(stability_sweep(cfg, workers=1), stability_sweep(cfg, workers=2))

    def test_seed_changes_draws(self):
        a = trial_rng(1, 0, 0).uniform(size=3)
        b = trial_rng(2, 0, 0).uniform(size=3)
        c = trial_rng(1, 0, 1).uniform(size=3)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)
        assert np.array_equal(a, trial_rng(1, 0, 0).uniform(size=3))

    def test_counts_sum_to_trials(self):
        cfg = SweepConfig(p_min=0.74, p_max=0.74, m_values=[2], trials=6, seed=3, steps=50, tol=1e-12)
        cell = run_cell(cfg, 0, 0.74, 2)
        assert cell.n_converged + cell.n_diverged + cell.n_undetermined == 6
        assert cell.n_undetermined == 6

    def test_guard_trip_counts_as_diverged(self):
        cfg = SweepConfig(p_min=50.0, p_max=50.0, m_values=[1], trials=4, seed=3, steps=100,
                          overflow_bound=10.0, init={'low': 0.5, 'high': 0.6})
        cell = run_cell(cfg, 0, 50.0, 1)
        assert cell.n_diverged == 4
        assert math.isnan(cell.median_err)
        assert math.isnan(cell.median_rate)


class TestConjecture:
    def test_evidence_is_recorded_and_deterministic(self):
        cfg = SweepConfig(p_min=0.50, p_max=0.70, p_steps=5, m_values=[1, 2, 3], trials=5, seed=2024,
                          steps=20000)
        first = stability_sweep(cfg)
        evidence = conjecture_evidence(first)
        assert len(evidence) == 15
        assert all(0.0 <= fraction <= 1.0 for _, _, fraction in evidence)
        assert_same_grid(first, stability_sweep(cfg))

    def test_empty_cell_fraction_is_nan(self):
        cell = SweepCell(p=0.6, m=1, n_converged=0, n_diverged=0, n_undetermined=0,
                         median_err=float('nan'), median_rate=float('nan'))
        assert math.isnan(conjecture_evidence([cell])[0][2])


class TestAttractorScan:
    def test_converged_tails(self):
        grid = [0.1, 0.25, 0.45]
        summaries = attractor_scan(grid, 2, [1.0, 3.0, 0.7], steps=3000, tail=100)
        for summary, p in zip(summaries, grid):
            y_bar = equilibrium(p).y_bar
            assert summary.status == TrajectoryStatus.COMPLETED
            assert abs(summary.tail_min - y_bar) <= 1e-6
            assert abs(summary.tail_max - y_bar) <= 1e-6
            assert summary.period == 1

    def test_unstable_equilibrium_oscillates(self):
        y_bar = equilibrium(0.9).y_bar
        summary = attractor_scan([0.9], 1, [y_bar - 0.01, y_bar + 0.01], steps=5000, tail=200)[0]
        assert summary.status == TrajectoryStatus.COMPLETED
        assert summary.tail_min < summary.tail_max

    def test_equilibrium_init_per_p(self):
        summaries = attractor_scan([0.3, 2.0], 1, lambda p: [equilibrium(p).y_bar] * 2, steps=200, tail=50)
        for summary in summaries:
            y_bar = equilibrium(summary.p).y_bar
            assert summary.tail_min == pytest.approx(y_bar, abs=1e-12)
            assert summary.tail_max == pytest.approx(y_bar, abs=1e-12)

    def test_guard_trip_recorded(self):
        summary = attractor_scan([1e6], 1, [1e-3, 1e-3], steps=10, tail=5,
                                 guard=IterationGuard(overflow_bound=1e8))[0]
        assert summary.status == TrajectoryStatus.OVERFLOWED
        assert math.isnan(summary.tail_min)
        assert summary.period is None

    def test_rejects_empty_tail(self):
        with pytest.raises(ParameterError):
            attractor_scan([0.3], 1, [1.0, 1.0], steps=10, tail=0)


class TestStabilityBoundary:
    @pytest.mark.parametrize("m", [1, 3, 5])
    def test_odd_delay_boundary_is_three_quarters(self, m):
        assert stability_boundary(m) == pytest.approx(0.75, abs=1e-8)

    @pytest.mark.parametrize("m", [2, 4])
    def test_even_delay_boundary_lies_above(self, m):
        boundary = stability_boundary(m)
        assert 0.75 < boundary < 10.0
        assert spectral_radius(boundary * (1 - 1e-6), m) < 1.0 < spectral_radius(boundary * (1 + 1e-6), m)

    def test_no_crossing_raises(self):
        with pytest.raises(ParameterError):
            stability_boundary(1, p_lo=0.1, p_hi=0.5)
