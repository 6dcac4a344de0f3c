#!/usr/bin/env python3
"""
delaylab Trajectory Analysis

Analyses of computed orbits of y_{n+1} = 1 + p * y_{n-m} / y_n**2:

- Semi-cycles: maximal runs on one side of y_bar, with the "at most m terms" bound
  and the length-one alternation pattern for odd m
- Period detection over a tail window, and the algebraic 2-cycle system solved by
  multi-start Newton
- The boundedness envelope from the linear comparison equation, iteratively and in
  closed form
- Convergence rate against the dominant characteristic root, plus the exact error
  identity e_{n+1} = p_n * e_n + q_n * e_{n-m}

Sign judgements near y_bar are limited by rounding: a converged orbit sits within
an ulp of y_bar, where the computed sign of y_n - y_bar says nothing about the
exact orbit. Checks that depend on signs only judge terms whose deviation exceeds
``sign_resolution`` and report how many they had to skip.

Classes:
    SemiCycleSign, SemiCycle, SemiCycleDecomposition, SemiCycleCheck
    AlternationCheck, PeriodReport, TwoCycleReport, EnvelopeReport,
    ConvergenceRateReport

Project: delaylab
Version: 1.0.0
License: MIT
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .core import DelayLabError, ParameterError, _require_delay, _require_positive, comparison_equilibrium, equilibrium
from .linearization import RootSet
from .recurrence import Trajectory, comparison_simulate
from .utils import get_logger

logger = get_logger("delaylab.analysis")

DEFAULT_SIGN_RESOLUTION = 1e-10
DEFAULT_MAX_PERIOD = 64
DEFAULT_PERIOD_TOL = 1e-8
# Errors at or below this are rounding noise, not dynamics
RATE_ERROR_FLOOR = 1e-13
RATE_REFINEMENTS = 20
ENVELOPE_SLACK = 1e-12
CLOSED_FORM_IMAG_TOL = 1e-9


# Exception Classes

class PatternMismatchError(DelayLabError):
    """Initial values do not follow the alternation pattern the check requires."""
    pass


class WindowTooShortError(DelayLabError):
    """Too few values for the requested period-detection window."""
    pass


class SingularSystemError(DelayLabError):
    """The closed-form envelope constants could not be solved for."""
    pass


class EquilibriumOrbitError(DelayLabError):
    """The orbit never leaves y_bar measurably, so no rate can be estimated."""
    pass


class NotConvergingError(DelayLabError):
    """The error does not decay over the tail of the orbit."""
    pass


class ShortErrorSeriesError(DelayLabError):
    """Too few errors above the noise floor to measure a decay rate."""
    pass


def _completed_orbit(traj: Trajectory) -> Trajectory:
    """Normalized view of a completed trajectory."""
    if not traj.completed:
        raise ParameterError(
            f"Analysis needs a completed trajectory, got status '{traj.status.value}' at step {traj.halted_at}",
            details={'status': traj.status.value, 'halted_at': traj.halted_at}
        )
    return traj.to_normalized()


# ==================== SEMI-CYCLES ====================

class SemiCycleSign(str, Enum):
    POSITIVE = "positive"   # terms >= y_bar
    NEGATIVE = "negative"   # terms < y_bar


@dataclass(frozen=True, slots=True)
class SemiCycle:
    sign: SemiCycleSign
    start_index: int
    length: int

    @property
    def end_index(self) -> int:
        return self.start_index + self.length - 1


@dataclass(frozen=True)
class SemiCycleDecomposition:
    """
    Partition of iterates 1..N into maximal same-side runs.

    Attributes:
        cycles (Tuple[SemiCycle, ...]): Runs in order; signs alternate
        y_bar (float): Equilibrium the terms were compared with
        has_initial_partial (bool): True unless y_0 lies on the other side of y_1,
            in which case the first run has a predecessor and is judged like any other
        deviations (np.ndarray): y_n - y_bar for n = 0..N (y_0 first)
    """
    cycles: Tuple[SemiCycle, ...]
    y_bar: float
    has_initial_partial: bool
    deviations: np.ndarray = field(repr=False)

    @property
    def n_terms(self) -> int:
        return sum(c.length for c in self.cycles)

    def lengths(self) -> List[int]:
        return [c.length for c in self.cycles]


@dataclass(frozen=True, slots=True)
class SemiCycleCheck:
    """
    Outcome of the "every semi-cycle has at most m terms" check.

    Attributes:
        holds (bool): No judged cycle is longer than m
        offending (Tuple[SemiCycle, ...]): Judged cycles longer than m
        n_judged (int): Cycles that were judged
        n_exempt (int): Initial partial cycle (0 or 1)
        n_unresolved (int): Cycles skipped because a term sits within sign_resolution of y_bar
    """
    holds: bool
    offending: Tuple[SemiCycle, ...]
    n_judged: int
    n_exempt: int
    n_unresolved: int


def _side(deviation: float) -> SemiCycleSign:
    return SemiCycleSign.POSITIVE if deviation >= 0.0 else SemiCycleSign.NEGATIVE


def decompose_semicycles(traj: Trajectory, y_bar: Optional[float] = None) -> SemiCycleDecomposition:
    """
    Split iterates y_1..y_N into maximal runs of terms >= y_bar and terms < y_bar.

    Ties go to the positive side. Lengths sum to N and signs alternate.

    Args:
        traj (Trajectory): Completed trajectory with at least one iterate
        y_bar (Optional[float]): Equilibrium; computed from traj.p when None

    Raises:
        ParameterError: If the trajectory is empty or did not complete
    """
    orbit = _completed_orbit(traj)
    if len(orbit) == 0:
        raise ParameterError("Semi-cycle decomposition needs at least one iterate")
    if y_bar is None:
        y_bar = equilibrium(orbit.p).y_bar

    deviations = np.concatenate([[orbit.initial.values[-1]], orbit.values]) - y_bar
    deviations.setflags(write=False)

    signs = np.where(deviations[1:] >= 0.0, 1, -1)
    # Run boundaries: positions where the side changes
    breaks = np.flatnonzero(np.diff(signs)) + 1
    starts = np.concatenate([[0], breaks])
    ends = np.concatenate([breaks, [len(signs)]])

    cycles = tuple(
        SemiCycle(sign=_side(float(deviations[s + 1])), start_index=int(s) + 1, length=int(e - s))
        for s, e in zip(starts, ends)
    )
    has_initial_partial = _side(float(deviations[0])) == cycles[0].sign
    return SemiCycleDecomposition(cycles=cycles, y_bar=float(y_bar),
                                  has_initial_partial=has_initial_partial, deviations=deviations)


def check_max_semicycle_length(dec: SemiCycleDecomposition, m: int,
                               sign_resolution: float = DEFAULT_SIGN_RESOLUTION) -> SemiCycleCheck:
    """
    Check that every semi-cycle with an opposite-side predecessor has at most m terms.

    A cycle is judged only when its predecessor term and all of its own terms are
    farther than ``sign_resolution`` from y_bar. The initial partial cycle is exempt.

    Returns:
        SemiCycleCheck: Verdict, offending cycles and judged/skipped counts
    """
    _require_delay(m)
    resolved = np.abs(dec.deviations) > sign_resolution

    offending = []
    judged = exempt = unresolved = 0
    for position, cycle in enumerate(dec.cycles):
        if position == 0 and dec.has_initial_partial:
            exempt += 1
            continue
        # deviations[0] is y_0, so index n lives at position n
        if not resolved[cycle.start_index - 1:cycle.end_index + 1].all():
            unresolved += 1
            continue
        judged += 1
        if cycle.length > m:
            offending.append(cycle)

    if offending:
        logger.warning(f"{len(offending)} semi-cycle(s) longer than m={m}, first at index {offending[0].start_index}")
    elif unresolved:
        logger.debug(f"{unresolved} semi-cycle(s) within {sign_resolution:g} of y_bar were not judged")
    return SemiCycleCheck(holds=not offending, offending=tuple(offending), n_judged=judged,
                          n_exempt=exempt, n_unresolved=unresolved)


@dataclass(frozen=True, slots=True)
class AlternationCheck:
    """
    Outcome of the length-one alternation check.

    Attributes:
        holds (bool): Every judged term is on its expected side
        first_violation (Optional[int]): Index of the first misplaced term
        n_judged (int): Terms checked
        n_unresolved (int): Terms from the first one within sign_resolution of y_bar onward
    """
    holds: bool
    first_violation: Optional[int]
    n_judged: int
    n_unresolved: int


def check_alternation(traj: Trajectory, y_bar: Optional[float] = None, m: Optional[int] = None,
                      sign_resolution: float = DEFAULT_SIGN_RESOLUTION) -> AlternationCheck:
    """
    Check y_n < y_bar for odd n and y_n > y_bar for even n >= 1.

    The pattern is guaranteed for odd m when the initial values interleave the same
    way: y_0, y_{-2}, ... > y_bar and y_{-1}, y_{-3}, ..., y_{-m} <= y_bar.

    Raises:
        ParameterError: If m is even
        PatternMismatchError: If the initial values do not interleave as required
    """
    orbit = _completed_orbit(traj)
    m = orbit.m if m is None else _require_delay(m)
    if m % 2 == 0:
        raise ParameterError(f"Alternation check needs an odd delay, got m={m}")
    if y_bar is None:
        y_bar = equilibrium(orbit.p).y_bar

    # initial.values[k] is y_{k-m}
    for k, value in enumerate(orbit.initial.values):
        index = k - m
        if index % 2 == 0 and not value > y_bar:
            raise PatternMismatchError(
                f"Initial value y_{index} = {value} must exceed y_bar = {y_bar}",
                details={'index': index, 'value': value, 'y_bar': y_bar}
            )
        if index % 2 != 0 and not value <= y_bar:
            raise PatternMismatchError(
                f"Initial value y_{index} = {value} must not exceed y_bar = {y_bar}",
                details={'index': index, 'value': value, 'y_bar': y_bar}
            )

    judged = 0
    for n, value in enumerate(orbit.values, start=1):
        deviation = float(value) - y_bar
        if abs(deviation) <= sign_resolution:
            unresolved = len(orbit) - n + 1
            logger.debug(f"Alternation judged {judged} terms; {unresolved} from index {n} sit at y_bar")
            return AlternationCheck(holds=True, first_violation=None, n_judged=judged, n_unresolved=unresolved)
        judged += 1
        on_side = deviation < 0.0 if n % 2 else deviation > 0.0
        if not on_side:
            logger.warning(f"Alternation broken at index {n}: y_n - y_bar = {deviation:.3e}")
            return AlternationCheck(holds=False, first_violation=n, n_judged=judged, n_unresolved=0)

    return AlternationCheck(holds=True, first_violation=None, n_judged=judged, n_unresolved=0)


# ==================== PERIODS AND 2-CYCLES ====================

@dataclass(frozen=True, slots=True)
class PeriodReport:
    """
    Smallest shift k under which the tail window repeats.

    Attributes:
        period (Optional[int]): Smallest k <= max_period, None when none fits
        tol (float): Max |y_{n+k} - y_n| accepted
        window (int): Tail length examined
        max_period (int): Largest k tried
        cycle_values (Tuple[float, ...]): Last ``period`` values of the series
    """
    period: Optional[int]
    tol: float
    window: int
    max_period: int
    cycle_values: Tuple[float, ...] = ()

    @property
    def is_two_distinct_cycle(self) -> bool:
        """Period 2 with two values farther apart than tol."""
        return (self.period == 2 and len(self.cycle_values) == 2
                and abs(self.cycle_values[0] - self.cycle_values[1]) > self.tol)


def detect_period(series: Union[Trajectory, Sequence[float]], max_period: int = DEFAULT_MAX_PERIOD,
                  tol: float = DEFAULT_PERIOD_TOL, window: Optional[int] = None) -> PeriodReport:
    """
    Find the smallest k <= max_period with max |y_{n+k} - y_n| <= tol over the tail.

    Args:
        series (Union[Trajectory, Sequence[float]]): Completed trajectory or raw values
        max_period (int): Largest period tried
        tol (float): Shift discrepancy accepted
        window (Optional[int]): Tail length; defaults to 4 * max_period

    Raises:
        WindowTooShortError: If the series is shorter than the window
        ParameterError: If the window is not larger than max_period

    Example:
        ```python
        detect_period([1.5, 2.5] * 200, max_period=8).period   # 2
        ```
    """
    if isinstance(series, Trajectory):
        values = _completed_orbit(series).values
    else:
        values = np.asarray(series, dtype=np.float64)

    if max_period < 1:
        raise ParameterError(f"max_period must be >= 1, got {max_period}")
    window = 4 * max_period if window is None else window
    if window <= max_period:
        raise ParameterError(f"Window ({window}) must exceed max_period ({max_period})")
    if len(values) < window:
        raise WindowTooShortError(
            f"Period detection needs {window} values, got {len(values)}",
            details={'window': window, 'available': len(values)}
        )

    tail = values[-window:]
    for k in range(1, max_period + 1):
        if float(np.max(np.abs(tail[k:] - tail[:-k]))) <= tol:
            return PeriodReport(period=k, tol=tol, window=window, max_period=max_period,
                                cycle_values=tuple(float(v) for v in tail[-k:]))
    return PeriodReport(period=None, tol=tol, window=window, max_period=max_period)


class NewtonOutcome(str, Enum):
    SYMMETRIC = "symmetric"
    ASYMMETRIC = "asymmetric"
    LEFT_QUADRANT = "left_quadrant"
    NO_CONVERGENCE = "no_convergence"


@dataclass(frozen=True, slots=True)
class TwoCycleReport:
    """
    Positive solutions (alpha, beta) of the period-two system.

    For even m (or m unset) the system is alpha = 1 + p / beta, beta = 1 + p / alpha,
    whose only positive solution is alpha = beta = y_bar. For odd m the lagged term
    has the opposite parity: alpha = 1 + p * alpha / beta**2, beta = 1 + p * beta / alpha**2.

    Attributes:
        p (float): Normalized parameter
        m (Optional[int]): Delay, None for the even-delay system
        odd_system (bool): Which system was solved
        y_bar (float): Symmetric solution
        solutions (Tuple[Tuple[float, float], ...]): Distinct positive solutions, alpha <= beta,
            symmetric one first
        outcomes (Dict[str, int]): How the Newton starts ended
        starts (int): Number of Newton starts
    """
    p: float
    m: Optional[int]
    odd_system: bool
    y_bar: float
    solutions: Tuple[Tuple[float, float], ...]
    outcomes: Dict[str, int]
    starts: int

    @property
    def asymmetric(self) -> Tuple[Tuple[float, float], ...]:
        return tuple(s for s in self.solutions if not math.isclose(s[0], s[1], rel_tol=1e-8))

    @property
    def only_symmetric(self) -> bool:
        return not self.asymmetric


def _two_cycle_system(p: float, odd: bool):
    """Residual and Jacobian of the period-two system."""
    if odd:
        def residual(a: float, b: float) -> Tuple[float, float]:
            return a - 1.0 - p * a / (b * b), b - 1.0 - p * b / (a * a)

        def jacobian(a: float, b: float) -> Tuple[float, float, float, float]:
            return (1.0 - p / (b * b), 2.0 * p * a / b ** 3,
                    2.0 * p * b / a ** 3, 1.0 - p / (a * a))
    else:
        def residual(a: float, b: float) -> Tuple[float, float]:
            return a - 1.0 - p / b, b - 1.0 - p / a

        def jacobian(a: float, b: float) -> Tuple[float, float, float, float]:
            return 1.0, p / (b * b), p / (a * a), 1.0
    return residual, jacobian


def _newton(residual, jacobian, a: float, b: float, tol: float = 1e-13,
            max_iterations: int = 100) -> Tuple[Optional[NewtonOutcome], float, float]:
    """
    2-d Newton from (a, b). Returns None as the outcome when it converged inside
    the positive quadrant; leaving the quadrant ends the run.
    """
    for _ in range(max_iterations):
        f1, f2 = residual(a, b)
        j11, j12, j21, j22 = jacobian(a, b)
        det = j11 * j22 - j12 * j21
        if det == 0.0 or not math.isfinite(det):
            return NewtonOutcome.NO_CONVERGENCE, a, b
        da = (f1 * j22 - f2 * j12) / det
        db = (j11 * f2 - j21 * f1) / det
        a, b = a - da, b - db
        if not (math.isfinite(a) and math.isfinite(b)) or a <= 0.0 or b <= 0.0:
            return NewtonOutcome.LEFT_QUADRANT, a, b
        if abs(da) <= tol * max(1.0, abs(a)) and abs(db) <= tol * max(1.0, abs(b)):
            return None, a, b
    return NewtonOutcome.NO_CONVERGENCE, a, b


def two_cycle_analysis(p: float, m: Optional[int] = None, starts: int = 20,
                       seed: int = 0) -> TwoCycleReport:
    """
    Search the period-two system for positive solutions by multi-start Newton.

    Starts are drawn log-uniformly from [y_bar / 10, 10 * y_bar] with alpha != beta.
    The symmetric solution (y_bar, y_bar) is always reported. For even m any other
    solution would contradict (alpha - beta) * (1 - p / (alpha * beta)) = 0 with
    alpha * beta = p impossible; for odd m whatever Newton finds is reported as
    evidence.

    Example:
        ```python
        two_cycle_analysis(2.0).solutions   # ((2.0, 2.0),)
        ```
    """
    p = _require_positive("p", p)
    odd = m is not None and _require_delay(m) % 2 == 1
    y_bar = equilibrium(p).y_bar
    residual, jacobian = _two_cycle_system(p, odd)

    rng = np.random.default_rng(seed)
    found: List[Tuple[float, float]] = [(y_bar, y_bar)]
    outcomes: Counter = Counter()

    for _ in range(starts):
        a, b = np.exp(rng.uniform(math.log(y_bar / 10.0), math.log(10.0 * y_bar), size=2))
        if math.isclose(a, b, rel_tol=1e-6):
            b *= 1.5
        outcome, a, b = _newton(residual, jacobian, float(a), float(b))
        if outcome is None:
            if math.isclose(a, b, rel_tol=1e-8) and math.isclose(a, y_bar, rel_tol=1e-8):
                outcome = NewtonOutcome.SYMMETRIC
            else:
                outcome = NewtonOutcome.ASYMMETRIC
                pair = (min(a, b), max(a, b))
                if not any(math.isclose(pair[0], s[0], rel_tol=1e-8) and math.isclose(pair[1], s[1], rel_tol=1e-8)
                           for s in found):
                    found.append(pair)
        outcomes[outcome.value] += 1

    report = TwoCycleReport(p=p, m=m, odd_system=odd, y_bar=y_bar, solutions=tuple(found),
                            outcomes=dict(outcomes), starts=starts)
    if report.asymmetric:
        level = logger.warning if not odd else logger.info
        level(f"Period-two system (m={m}, p={p}) has asymmetric solutions {report.asymmetric}")
    return report


# ==================== BOUNDEDNESS ENVELOPE ====================

@dataclass(frozen=True)
class EnvelopeReport:
    """
    Comparison-equation envelope u_n over an orbit.

    u_n solves u_{n+1} = 1 + p * u_{n-m} with m + 1 values matched to the orbit at
    indices match_start..match_start + m. Its closed form is

        u_n = 1 / (1 - p) + sum_j c_j * lam_j**n,   lam_j = p**(1/(m+1)) * exp(2*pi*i*(j-1)/(m+1))

    Attributes:
        p (float): Normalized parameter in (0, 1)
        m (int): Delay
        match_start (int): First matched index (-m, or 1 when y_0 < 1)
        indices (np.ndarray): match_start..N
        u_iterative (np.ndarray): u by iteration
        u_closed_form (np.ndarray): Real part of the closed form
        constants (Tuple[complex, ...]): c_1 .. c_{m+1}
        lambdas (Tuple[complex, ...]): lam_1 .. lam_{m+1}
        max_discrepancy (float): max |u_iterative - u_closed_form|
        max_imag (float): Largest imaginary part of the closed form
        violations (Tuple[int, ...]): n >= 1 with y_n <= 1 or y_n > u_n
    """
    p: float
    m: int
    match_start: int
    indices: np.ndarray = field(repr=False)
    u_iterative: np.ndarray = field(repr=False)
    u_closed_form: np.ndarray = field(repr=False)
    constants: Tuple[complex, ...]
    lambdas: Tuple[complex, ...]
    max_discrepancy: float
    max_imag: float
    violations: Tuple[int, ...]

    @property
    def holds(self) -> bool:
        return not self.violations


def envelope(traj: Trajectory, p: Optional[float] = None, m: Optional[int] = None,
             slack: float = ENVELOPE_SLACK) -> EnvelopeReport:
    """
    Bound an orbit by the comparison equation and check 1 < y_n <= u_n.

    The bound y_{n+1} <= 1 + p * y_{n-m} needs y_n >= 1, which every iterate has.
    Matching on the initial segment therefore only needs y_0 >= 1; otherwise the
    envelope is matched on y_1..y_{m+1}.

    Args:
        traj (Trajectory): Completed trajectory (x-form orbits are normalized first)
        p (Optional[float]): Must be in (0, 1); defaults to traj.p
        m (Optional[int]): Defaults to traj.m
        slack (float): Relative tolerance on y_n <= u_n

    Raises:
        ParameterError: If p is outside (0, 1), or the orbit is too short to match
        SingularSystemError: If the constants c_j cannot be solved for
    """
    orbit = _completed_orbit(traj)
    p = orbit.p if p is None else p
    m = orbit.m if m is None else _require_delay(m)
    u_bar = comparison_equilibrium(p)

    full = orbit.full_orbit()
    n_last = len(orbit)
    if orbit.initial.values[-1] >= 1.0:
        match_start = -m
    else:
        match_start = 1
        if n_last < m + 1:
            raise ParameterError(f"Orbit too short to match the envelope on y_1..y_{m + 1}")

    # full[k] is y_{k-m}
    offset = match_start + m
    matched = full[offset:offset + m + 1]
    u_iterative = np.concatenate([matched, comparison_simulate(p, m, matched, n_last - (match_start + m))])
    indices = np.arange(match_start, n_last + 1)

    lambdas = p ** (1.0 / (m + 1)) * np.exp(2j * np.pi * np.arange(m + 1) / (m + 1))
    match_indices = indices[:m + 1]
    system = lambdas[np.newaxis, :] ** match_indices[:, np.newaxis]
    try:
        constants = np.linalg.solve(system, matched - u_bar)
    except np.linalg.LinAlgError as e:
        raise SingularSystemError(f"Envelope constants could not be solved: {e}",
                                  details={'p': p, 'm': m, 'match_start': match_start})
    if not np.all(np.isfinite(constants)):
        raise SingularSystemError("Envelope constants are not finite", details={'p': p, 'm': m})

    closed = u_bar + (lambdas[np.newaxis, :] ** indices[:, np.newaxis]) @ constants
    max_imag = float(np.max(np.abs(closed.imag)))
    if max_imag > CLOSED_FORM_IMAG_TOL:
        logger.warning(f"Closed-form envelope has imaginary part {max_imag:.3e}")
    u_closed_form = closed.real
    max_discrepancy = float(np.max(np.abs(u_iterative - u_closed_form)))

    # match_start <= 1, so u covers every iterate 1..N
    y_iter = orbit.values
    upper = np.flatnonzero(y_iter > u_iterative[indices >= 1] * (1.0 + slack)) + 1
    lower = np.flatnonzero(y_iter <= 1.0) + 1
    violations = tuple(sorted(set(int(n) for n in upper) | set(int(n) for n in lower)))

    if violations:
        logger.warning(f"Envelope violated at {len(violations)} indices, first {violations[0]} (p={p}, m={m})")
    return EnvelopeReport(p=p, m=m, match_start=match_start, indices=indices,
                          u_iterative=u_iterative, u_closed_form=u_closed_form,
                          constants=tuple(complex(c) for c in constants),
                          lambdas=tuple(complex(v) for v in lambdas),
                          max_discrepancy=max_discrepancy, max_imag=max_imag, violations=violations)


# ==================== RATE OF CONVERGENCE ====================

@dataclass(frozen=True, slots=True)
class ConvergenceRateReport:
    """
    Decay rate of e_n = y_n - y_bar compared with the dominant characteristic root.

    Attributes:
        nth_root_estimate (float): Asymptotic decay rate lim sup |e_n|**(1/n) with the transient
            amplitude removed; ``ratio_estimate`` when the ratio is assertable, else ``fitted_rate``
        fitted_rate (float): exp(slope) of a least-squares line through the log of a
            rate-weighted running max of |e_n| over the second half of the usable indices
        raw_nth_root (float): The literal |e_L|**(1/L) at the last usable index L
        ratio_estimate (float): Mean |e_{n+1} / e_n| over the last 20% of usable indices
        dominant_modulus (float): Spectral radius of the characteristic roots
        ratio_assertable (bool): Dominant root is real and simple, so the ratio has a limit
        method (str): ``ratio`` or ``envelope_fit``, whichever produced nth_root_estimate
        last_usable_index (int): Last n with |e_n| above the noise floor
        fit_start (int): First index of the least-squares fit
    """
    nth_root_estimate: float
    fitted_rate: float
    raw_nth_root: float
    ratio_estimate: float
    dominant_modulus: float
    ratio_assertable: bool
    method: str
    last_usable_index: int
    fit_start: int

    @property
    def nth_root_error(self) -> float:
        return abs(self.nth_root_estimate - self.dominant_modulus)

    @property
    def ratio_error(self) -> float:
        return abs(self.ratio_estimate - self.dominant_modulus)


def _envelope_slope(magnitudes: np.ndarray, window: int, rate: float,
                    fit_start: int, floor: float) -> float:
    """
    Least-squares slope of log max_{k < window} |e_{n-k}| * rate**k over n >= fit_start.

    ``magnitudes[i]`` is |e_{i+1}|.
    """
    padded = np.concatenate([np.zeros(window - 1), magnitudes])
    # Row i holds |e| at n-window+1..n for n = i+1; the last column is k = 0
    rows = np.lib.stride_tricks.sliding_window_view(padded, window)
    weights = rate ** np.arange(window - 1, -1, -1, dtype=np.float64)
    envelope_values = (rows * weights).max(axis=1)

    n = np.arange(1, len(magnitudes) + 1)
    keep = (n >= fit_start) & (envelope_values > floor)
    if np.count_nonzero(keep) < 2:
        keep = envelope_values > floor
    return float(np.polyfit(n[keep].astype(np.float64), np.log(envelope_values[keep]), 1)[0])


def estimate_rate(traj: Trajectory, y_bar: Optional[float], roots: RootSet,
                  floor: float = RATE_ERROR_FLOOR, tail_fraction: float = 0.2) -> ConvergenceRateReport:
    """
    Estimate how fast |y_n - y_bar| decays and compare with roots.spectral_radius.

    ``nth_root_estimate`` is not the literal |e_N|**(1/N): that value carries the
    transient amplitude as C**(1/N), which is still visible when the error reaches
    the noise floor after a hundred steps, and is kept as ``raw_nth_root``. When the
    dominant root is real and simple the tail ratio converges to its modulus
    geometrically in the gap to the next root, and it is used directly. Otherwise
    (a complex dominant pair, where the ratio oscillates) the estimate fits the
    slope of log |e_n|: a running maximum over 2(m+1)+1 terms flattens the
    oscillation, refined by weighting each older term with the current rate
    estimate until the estimate settles.

    Raises:
        EquilibriumOrbitError: If every error is at or below the floor
        ShortErrorSeriesError: If only one or two errors exceed the floor
        NotConvergingError: If the orbit did not complete or its error envelope is not decreasing
    """
    if not traj.completed:
        raise NotConvergingError(f"Trajectory {traj.status.value} at step {traj.halted_at}")
    orbit = traj.to_normalized()
    if y_bar is None:
        y_bar = equilibrium(orbit.p).y_bar

    magnitudes = np.abs(orbit.values - y_bar)
    usable = magnitudes > floor
    n_usable = int(np.count_nonzero(usable))
    if n_usable == 0:
        raise EquilibriumOrbitError(f"Orbit stays within {floor:g} of y_bar; no rate to estimate")
    if n_usable < 3:
        raise ShortErrorSeriesError(
            f"Only {n_usable} error(s) above {floor:g}; at least 3 are needed",
            details={'usable_terms': n_usable}
        )

    last = int(np.flatnonzero(usable)[-1]) + 1
    window = 2 * (orbit.m + 1) + 1
    fit_start = max(1, last // 2)

    # First pass is a plain running max; later passes weight older terms by the
    # current rate so the decay inside the window no longer biases the maximum
    rate = 1.0
    for attempt in range(RATE_REFINEMENTS):
        slope = _envelope_slope(magnitudes[:last], window, rate, fit_start, floor)
        if attempt == 0 and slope >= 0.0:
            raise NotConvergingError(
                f"Error envelope is not decreasing over indices {fit_start}..{last} (slope {slope:.3e})",
                details={'slope': slope, 'fit_start': fit_start, 'last_usable_index': last}
            )
        refined = min(math.exp(slope), 1.0)
        if abs(refined - rate) <= 1e-12:
            break
        rate = refined

    raw_nth_root = float(magnitudes[last - 1] ** (1.0 / last))

    tail_start = max(1, int(math.floor(last * (1.0 - tail_fraction))))
    numerators = magnitudes[tail_start:last]
    denominators = magnitudes[tail_start - 1:last - 1]
    pairs = (numerators > floor) & (denominators > floor)
    ratio_estimate = float(np.mean(numerators[pairs] / denominators[pairs])) if pairs.any() else float('nan')

    ratio_assertable = roots.dominant_is_real_simple()
    use_ratio = ratio_assertable and math.isfinite(ratio_estimate)
    report = ConvergenceRateReport(
        nth_root_estimate=ratio_estimate if use_ratio else rate,
        fitted_rate=rate,
        raw_nth_root=raw_nth_root,
        ratio_estimate=ratio_estimate,
        dominant_modulus=roots.spectral_radius,
        ratio_assertable=ratio_assertable,
        method="ratio" if use_ratio else "envelope_fit",
        last_usable_index=last,
        fit_start=fit_start,
    )
    logger.debug(f"Rate estimate {report.nth_root_estimate:.6g} ({report.method}) against dominant modulus "
                 f"{report.dominant_modulus:.6g} (fit {rate:.6g}, raw {raw_nth_root:.6g}, ratio {ratio_estimate:.6g})")
    return report


def error_recurrence_coeffs(y_n: float, p: float, y_bar: float) -> Tuple[float, float]:
    """
    Coefficients of the exact error identity e_{n+1} = p_n * e_n + q_n * e_{n-m}.

    p_n = -p * (y_n + y_bar) / (y_bar * y_n**2) and q_n = p / y_n**2; at y_n = y_bar
    they equal the linearization's q0 and q_m.
    """
    if not y_n > 0.0:
        raise ParameterError(f"y_n must be positive, got {y_n}")
    y_sq = y_n * y_n
    return -p * (y_n + y_bar) / (y_bar * y_sq), p / y_sq


def error_recurrence_residuals(traj: Trajectory, y_bar: Optional[float] = None,
                               relative: bool = False) -> np.ndarray:
    """
    |e_{n+1} - p_n * e_n - q_n * e_{n-m}| for n = 0..N-1.

    The identity is algebraically exact, so the residuals measure rounding only.
    With ``relative`` each residual is divided by max(1, largest term), which
    keeps the check meaningful when a small initial value makes p_n and q_n large.
    """
    orbit = traj.to_normalized()
    p, m = orbit.p, orbit.m
    if y_bar is None:
        y_bar = equilibrium(p).y_bar

    full = orbit.full_orbit()
    errors = full - y_bar
    # y_n for n = 0..N-1 sits at full[m:-1]
    y_n = full[m:-1]
    y_sq = y_n * y_n
    p_n = -p * (y_n + y_bar) / (y_bar * y_sq)
    q_n = p / y_sq
    ahead = errors[m + 1:]
    current = p_n * errors[m:-1]
    lagged = q_n * errors[:len(full) - m - 1]
    residuals = np.abs(ahead - current - lagged)
    if relative:
        terms = np.maximum.reduce([np.ones_like(ahead), np.abs(ahead), np.abs(current), np.abs(lagged)])
        residuals = residuals / terms
    return residuals
