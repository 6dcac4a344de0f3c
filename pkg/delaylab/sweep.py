#!/usr/bin/env python3
"""
delaylab Parameter Sweeps

Empirical exploration of the (p, m) plane:

- stability_sweep: random-trial convergence counts per grid cell, the evidence
  format for global stability and for the range 1/2 <= p < 3/4 where it is only
  conjectured
- attractor_scan: tail min/max and detected period for one orbit per p
- stability_boundary: bisection for the p at which the spectral radius reaches 1

Every trial draws its initial values from its own generator seeded with
(seed, cell index, trial index), so results are identical whether cells run
in-process or in a worker pool, and in whatever order the pool finishes them.

Classes:
    TrialOutcome: Converged / Diverged / Undetermined
    SweepCell: Counts and medians for one (p, m) cell
    AttractorSummary: Tail summary of one orbit

Project: delaylab
Version: 1.0.0
License: MIT
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .analysis import (
    EquilibriumOrbitError, NotConvergingError, ShortErrorSeriesError, WindowTooShortError, detect_period, estimate_rate
)
from .config_models import IterationGuard, SweepConfig
from .core import DelayLabError, NormalizedParameters, ParameterError, _require_delay, equilibrium
from .linearization import RootSet, characteristic_polynomial, find_roots, linearize, spectral_radius
from .recurrence import InitialConditions, TrajectoryStatus, simulate
from .utils import get_logger

logger = get_logger("delaylab.sweep")


class TrialOutcome(str, Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True, slots=True)
class SweepCell:
    """
    Outcome counts for one (p, m) grid cell.

    Attributes:
        p (float): Normalized parameter
        m (int): Delay
        n_converged (int): Trials with final error <= tol
        n_diverged (int): Trials that tripped the iteration guard
        n_undetermined (int): Completed trials still farther than tol from y_bar
        median_err (float): Median |y_N - y_bar| over completed trials (nan if none)
        median_rate (float): Median nth-root rate over trials where it was measurable (nan if none)
    """
    p: float
    m: int
    n_converged: int
    n_diverged: int
    n_undetermined: int
    median_err: float
    median_rate: float

    @property
    def trials(self) -> int:
        return self.n_converged + self.n_diverged + self.n_undetermined


def trial_rng(seed: int, cell_index: int, trial_index: int) -> np.random.Generator:
    """Independent generator for one trial, derived from the master seed and both indices."""
    return np.random.default_rng([seed, cell_index, trial_index])


def _median(values: List[float]) -> float:
    return float(np.median(values)) if values else float('nan')


def _cell_roots(p: float, m: int) -> Optional[RootSet]:
    try:
        return find_roots(characteristic_polynomial(linearize(p, m)))
    except DelayLabError as e:
        logger.warning(f"No characteristic roots for p={p}, m={m}: {e}")
        return None


def run_cell(cfg: SweepConfig, cell_index: int, p: float, m: int) -> SweepCell:
    """
    Run every trial of one cell.

    A trial is Converged when it completed with |y_N - y_bar| <= tol, Diverged when
    the guard tripped, and Undetermined otherwise.
    """
    params = NormalizedParameters(p=p, m=m)
    y_bar = equilibrium(p).y_bar
    guard = cfg.guard()
    roots = _cell_roots(p, m)

    counts = {outcome: 0 for outcome in TrialOutcome}
    errors: List[float] = []
    rates: List[float] = []

    for trial_index in range(cfg.trials):
        rng = trial_rng(cfg.seed, cell_index, trial_index)
        init = InitialConditions.uniform(m, cfg.init.low, cfg.init.high, rng)
        traj = simulate(params, init, guard,
                        provenance={'seed': cfg.seed, 'cell': cell_index, 'trial': trial_index})

        if not traj.completed:
            counts[TrialOutcome.DIVERGED] += 1
            logger.debug(f"Trial {trial_index} of cell {cell_index} {traj.status.value} at step {traj.halted_at}")
            continue

        final_error = abs(float(traj.values[-1]) - y_bar)
        errors.append(final_error)
        outcome = TrialOutcome.CONVERGED if final_error <= cfg.tol else TrialOutcome.UNDETERMINED
        counts[outcome] += 1

        if roots is not None:
            try:
                rates.append(estimate_rate(traj, y_bar, roots).nth_root_estimate)
            except (EquilibriumOrbitError, NotConvergingError, ShortErrorSeriesError) as e:
                logger.debug(f"No rate for trial {trial_index} of cell {cell_index}: {e}")

    cell = SweepCell(p=p, m=m,
                     n_converged=counts[TrialOutcome.CONVERGED],
                     n_diverged=counts[TrialOutcome.DIVERGED],
                     n_undetermined=counts[TrialOutcome.UNDETERMINED],
                     median_err=_median(errors),
                     median_rate=_median(rates))
    if cell.n_diverged:
        logger.warning(f"{cell.n_diverged}/{cfg.trials} trials diverged at p={p}, m={m}")
    logger.debug(f"Cell {cell_index} (p={p}, m={m}): {cell.n_converged} converged, "
                 f"{cell.n_diverged} diverged, {cell.n_undetermined} undetermined")
    return cell


def _run_cell_task(task: Tuple[SweepConfig, int, float, int]) -> SweepCell:
    return run_cell(*task)


def stability_sweep(cfg: SweepConfig, workers: Optional[int] = None) -> List[SweepCell]:
    """
    Evaluate every (p, m) cell of the sweep grid.

    Cells are ordered by p, then by m in the order m_values lists them; the cell
    index used for seeding is the position in that order. With more than one
    worker, cells run in a process pool and are merged back in the same order.

    Args:
        cfg (SweepConfig): Grid, trials, seed and tolerances
        workers (Optional[int]): Overrides cfg.workers

    Returns:
        List[SweepCell]: One cell per (p, m), deterministic for a given cfg

    Example:
        ```python
        cfg = SweepConfig(p_min=0.1, p_max=0.4, p_steps=4, m_values=[1, 2], trials=10, seed=42)
        cells = stability_sweep(cfg)
        all(c.n_converged == c.trials for c in cells)   # True
        ```
    """
    workers = cfg.workers if workers is None else workers
    tasks = [(cfg, index, p, m)
             for index, (p, m) in enumerate((p, m) for p in cfg.p_grid() for m in cfg.m_values)]
    logger.info(f"Sweeping {len(tasks)} cells x {cfg.trials} trials "
                f"({cfg.steps} steps each, seed {cfg.seed}, {workers} worker(s))")

    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            cells = list(executor.map(_run_cell_task, tasks))
    else:
        cells = [_run_cell_task(task) for task in tasks]

    converged = sum(c.n_converged for c in cells)
    total = sum(c.trials for c in cells)
    logger.info(f"Sweep finished: {converged}/{total} trials converged")
    return cells


@dataclass(frozen=True, slots=True)
class AttractorSummary:
    """
    Tail of one orbit.

    Attributes:
        p (float): Normalized parameter
        m (int): Delay
        status (TrajectoryStatus): How the iteration ended
        halted_at (Optional[int]): Guard trip index
        tail_min (float): Smallest tail value (nan after a guard trip)
        tail_max (float): Largest tail value (nan after a guard trip)
        period (Optional[int]): Detected tail period
    """
    p: float
    m: int
    status: TrajectoryStatus
    halted_at: Optional[int]
    tail_min: float
    tail_max: float
    period: Optional[int]


InitSource = Union[InitialConditions, Sequence[float], Callable[[float], Sequence[float]]]


def _resolve_init(init: InitSource, p: float, m: int) -> InitialConditions:
    if isinstance(init, InitialConditions):
        return init
    values = init(p) if callable(init) else init
    return InitialConditions.for_delay(values, m)


def attractor_scan(p_grid: Sequence[float], m: int, init: InitSource, steps: int, tail: int,
                   period_tol: float = 1e-8, guard: Optional[IterationGuard] = None) -> List[AttractorSummary]:
    """
    Simulate once per p and summarize the last ``tail`` iterates.

    Args:
        p_grid (Sequence[float]): Values of p
        m (int): Delay
        init (InitSource): Initial values, or a function of p returning them
        steps (int): Iterates per orbit
        tail (int): Tail length summarized; clamped to steps
        period_tol (float): Tolerance for period detection
        guard (Optional[IterationGuard]): Bounds; max_steps is replaced by ``steps``

    Returns:
        List[AttractorSummary]: One summary per p, in grid order
    """
    _require_delay(m)
    if tail < 1:
        raise ParameterError(f"tail must be >= 1, got {tail}")
    base = guard or IterationGuard()
    run_guard = IterationGuard(max_steps=steps, overflow_bound=base.overflow_bound,
                               underflow_bound=base.underflow_bound)

    summaries = []
    for p in p_grid:
        traj = simulate(NormalizedParameters(p=p, m=m), _resolve_init(init, p, m), run_guard)
        if not traj.completed:
            logger.warning(f"Attractor scan: orbit {traj.status.value} at step {traj.halted_at} for p={p}")
            summaries.append(AttractorSummary(p=p, m=m, status=traj.status, halted_at=traj.halted_at,
                                              tail_min=float('nan'), tail_max=float('nan'), period=None))
            continue

        window = traj.values[-min(tail, len(traj)):]
        period = None
        max_period = min(64, len(window) // 4)
        if max_period >= 1:
            try:
                period = detect_period(window, max_period=max_period, tol=period_tol).period
            except WindowTooShortError:
                period = None
        summaries.append(AttractorSummary(p=p, m=m, status=traj.status, halted_at=None,
                                          tail_min=float(window.min()), tail_max=float(window.max()),
                                          period=period))
    return summaries


def stability_boundary(m: int, p_lo: float = 0.05, p_hi: float = 10.0, tol: float = 1e-10) -> float:
    """
    Bisect for the p at which the spectral radius of the linearization crosses 1.

    For odd m the crossing is at exactly p = 3/4, where lam = -1 becomes a root.
    For even m it lies above 3/4.

    Raises:
        ParameterError: If the radius does not change sides between p_lo and p_hi
    """
    _require_delay(m)
    lo_radius = spectral_radius(p_lo, m)
    hi_radius = spectral_radius(p_hi, m)
    if not lo_radius < 1.0 < hi_radius:
        raise ParameterError(
            f"Spectral radius does not cross 1 on [{p_lo}, {p_hi}] for m={m} "
            f"(radii {lo_radius:.6g}, {hi_radius:.6g})"
        )

    while p_hi - p_lo > tol * max(1.0, p_lo):
        mid = 0.5 * (p_lo + p_hi)
        if spectral_radius(mid, m) < 1.0:
            p_lo = mid
        else:
            p_hi = mid

    boundary = 0.5 * (p_lo + p_hi)
    logger.debug(f"Stability boundary for m={m}: p = {boundary:.12g}")
    return boundary


def conjecture_evidence(cells: Sequence[SweepCell]) -> List[Tuple[float, int, float]]:
    """Fraction of converged trials per cell as (p, m, fraction); recorded, never asserted."""
    return [(c.p, c.m, c.n_converged / c.trials if c.trials else math.nan) for c in cells]
