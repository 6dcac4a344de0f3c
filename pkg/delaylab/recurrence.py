#!/usr/bin/env python3
"""
delaylab Recurrence Engine

This module iterates the three recurrences the rest of the package analyzes:

    y_{n+1} = 1 + p * y_{n-m} / y_n**2        (normalized equation)
    x_{n+1} = A + B * x_{n-m} / x_n**2        (unnormalized equation)
    u_{n+1} = 1 + p * u_{n-m}                 (linear comparison equation)

The nonlinear equations are exact recurrences, so iteration is a plain loop over
Python floats; the whole orbit is kept because the semi-cycle, envelope and rate
analyses all need it. A guard halts the loop when a value leaves
(underflow_bound, overflow_bound). Guard trips are recorded in the trajectory
status, never raised, so a sweep can count them.

Initial conditions are stored oldest first: values[0] is y_{-m} and values[-1] is
y_0. Iterates are y_1 ... y_N.

Classes:
    InitialConditions: The m + 1 positive starting values
    TrajectoryStatus: Completed / Overflowed / Underflowed
    Trajectory: A finite orbit with its provenance

Project: delaylab
Version: 1.0.0
License: MIT
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from .config_models import IterationGuard
from .core import NormalizedParameters, ParameterError, Parameters, comparison_equilibrium, normalize
from .utils import get_logger

logger = get_logger("delaylab.recurrence")


# Domain Types

@dataclass(frozen=True, slots=True)
class InitialConditions:
    """
    Initial segment y_{-m}, y_{-m+1}, ..., y_0 (oldest first).

    Attributes:
        values (Tuple[float, ...]): m + 1 positive reals

    Raises:
        ParameterError: If the segment is empty or holds a non-positive value
    """
    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ParameterError("Initial conditions cannot be empty")
        if any(not v > 0.0 for v in values):
            raise ParameterError(f"Initial conditions must be positive, got {values}")
        object.__setattr__(self, 'values', values)

    @property
    def m(self) -> int:
        """Delay implied by the segment length."""
        return len(self.values) - 1

    @classmethod
    def for_delay(cls, values: Sequence[float], m: int) -> 'InitialConditions':
        """Build and check that exactly m + 1 values were given."""
        if len(values) != m + 1:
            raise ParameterError(f"Expected m+1 = {m + 1} initial values, got {len(values)}")
        return cls(tuple(values))

    @classmethod
    def constant(cls, value: float, m: int) -> 'InitialConditions':
        return cls((value,) * (m + 1))

    @classmethod
    def uniform(cls, m: int, low: float, high: float,
                rng: np.random.Generator) -> 'InitialConditions':
        """Draw m + 1 values uniformly from [low, high]."""
        return cls(tuple(float(v) for v in rng.uniform(low, high, size=m + 1)))


class TrajectoryStatus(str, Enum):
    COMPLETED = "completed"
    OVERFLOWED = "overflowed"
    UNDERFLOWED = "underflowed"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Finite orbit of the normalized (or unnormalized) equation.

    Attributes:
        params (NormalizedParameters): (p, m) the orbit was computed for
        initial (InitialConditions): Initial segment, in the orbit's coordinates
        values (np.ndarray): Iterates 1..N (read-only float64)
        status (TrajectoryStatus): How the iteration ended
        halted_at (Optional[int]): Index of the iterate that tripped the guard
        guard (IterationGuard): Guard settings used
        scale (float): 1 for y coordinates, A for x coordinates
        source (Optional[Parameters]): Unnormalized parameters for x-form orbits
        provenance (Dict[str, Any]): Free-form origin data such as seeds

    Note:
        When status is COMPLETED every iterate satisfies y_n > 1 (x_n > A); the
        initial segment carries no such guarantee.
    """
    params: NormalizedParameters
    initial: InitialConditions
    values: np.ndarray
    status: TrajectoryStatus = TrajectoryStatus.COMPLETED
    halted_at: Optional[int] = None
    guard: IterationGuard = field(default_factory=IterationGuard)
    scale: float = 1.0
    source: Optional[Parameters] = None
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @property
    def completed(self) -> bool:
        return self.status == TrajectoryStatus.COMPLETED

    @property
    def m(self) -> int:
        return self.params.m

    @property
    def p(self) -> float:
        return self.params.p

    def full_orbit(self) -> np.ndarray:
        """Initial segment followed by the iterates, indices -m..N."""
        return np.concatenate([np.asarray(self.initial.values), self.values])

    def indices(self) -> np.ndarray:
        """Orbit indices -m..N matching full_orbit()."""
        return np.arange(-self.m, len(self) + 1)

    def to_normalized(self) -> 'Trajectory':
        """Divide an x-form orbit by A to obtain the y-form orbit."""
        if self.scale == 1.0:
            return self
        return Trajectory(
            params=self.params,
            initial=InitialConditions(tuple(v / self.scale for v in self.initial.values)),
            values=self.values / self.scale,
            status=self.status,
            halted_at=self.halted_at,
            guard=self.guard,
            provenance=dict(self.provenance),
        )

    @classmethod
    def synthetic(cls, values: Sequence[float], params: NormalizedParameters,
                  initial: Optional[Sequence[float]] = None) -> 'Trajectory':
        """
        Wrap a hand-built sequence as a completed trajectory.

        Useful for feeding constructed inputs (exact 2-cycles, violating runs) into
        the analyses. The initial segment defaults to copies of the first value.
        """
        values = list(values)
        if initial is None:
            initial = [values[0] if values else 1.0] * (params.m + 1)
        return cls(params=params,
                   initial=InitialConditions.for_delay(initial, params.m),
                   values=np.asarray(values, dtype=np.float64),
                   provenance={'synthetic': True})


# Operations

def step(y_n: float, y_n_minus_m: float, p: float) -> float:
    """
    One step of the normalized equation: 1 + p * y_{n-m} / y_n**2.

    The result exceeds 1 whenever the inputs are positive.

    Raises:
        ParameterError: If y_n <= 0
    """
    if not y_n > 0.0:
        raise ParameterError(f"y_n must be positive, got {y_n}")
    return 1.0 + p * y_n_minus_m / (y_n * y_n)


def _iterate(additive: float, coefficient: float, m: int, start: Sequence[float],
             guard: IterationGuard) -> Tuple[list, TrajectoryStatus, Optional[int]]:
    """
    Iterate x_{n+1} = additive + coefficient * x_{n-m} / x_n**2.

    Returns the full orbit list (initial segment included), the status and the
    index of the iterate that tripped the guard.
    """
    over = guard.overflow_bound
    under = guard.underflow_bound
    orbit = list(start)
    lag = -1 - m

    for k in range(1, guard.max_steps + 1):
        x_n = orbit[-1]
        if x_n <= under:
            return orbit, TrajectoryStatus.UNDERFLOWED, k
        nxt = additive + coefficient * orbit[lag] / (x_n * x_n)
        # NaN fails both comparisons and is treated as a blow-up
        if not nxt < over:
            return orbit, TrajectoryStatus.OVERFLOWED, k
        if nxt <= under:
            return orbit, TrajectoryStatus.UNDERFLOWED, k
        orbit.append(nxt)

    return orbit, TrajectoryStatus.COMPLETED, None


def simulate(params: NormalizedParameters, init: InitialConditions,
             guard: Optional[IterationGuard] = None,
             provenance: Optional[Dict[str, Any]] = None) -> Trajectory:
    """
    Iterate y_{n+1} = 1 + p * y_{n-m} / y_n**2 for guard.max_steps steps.

    Args:
        params (NormalizedParameters): (p, m)
        init (InitialConditions): y_{-m}, ..., y_0
        guard (Optional[IterationGuard]): Step budget and bounds (defaults when None)
        provenance (Optional[Dict[str, Any]]): Extra origin data stored on the result

    Returns:
        Trajectory: Deterministic orbit; halts early with OVERFLOWED/UNDERFLOWED

    Raises:
        ParameterError: If the initial segment length is not m + 1

    Example:
        ```python
        traj = simulate(NormalizedParameters(p=1.0, m=1),
                        InitialConditions((1.0, 1.0)), IterationGuard(max_steps=3))
        traj.values    # array([2.  , 1.25, 2.28])
        ```
    """
    guard = guard or IterationGuard()
    if init.m != params.m:
        raise ParameterError(f"Expected m+1 = {params.m + 1} initial values, got {len(init.values)}")

    orbit, status, halted_at = _iterate(1.0, params.p, params.m, init.values, guard)
    if status != TrajectoryStatus.COMPLETED:
        logger.debug(f"Guard tripped ({status.value}) at step {halted_at} for p={params.p}, m={params.m}")

    return Trajectory(
        params=params,
        initial=init,
        values=np.asarray(orbit[params.m + 1:], dtype=np.float64),
        status=status,
        halted_at=halted_at,
        guard=guard,
        provenance=dict(provenance or {}),
    )


def simulate_x_form(params: Parameters, init_x: Sequence[float],
                    guard: Optional[IterationGuard] = None,
                    provenance: Optional[Dict[str, Any]] = None) -> Trajectory:
    """
    Iterate the unnormalized x_{n+1} = A + B * x_{n-m} / x_n**2.

    The result is in x coordinates (scale = A). Its to_normalized() agrees with
    simulate(normalize(params), init_x / A) up to rounding.

    Raises:
        ParameterError: If init_x does not hold m + 1 positive values
    """
    guard = guard or IterationGuard()
    init = InitialConditions.for_delay(init_x, params.m)

    orbit, status, halted_at = _iterate(params.A, params.B, params.m, init.values, guard)
    if status != TrajectoryStatus.COMPLETED:
        logger.debug(f"Guard tripped ({status.value}) at step {halted_at} for A={params.A}, B={params.B}")

    return Trajectory(
        params=normalize(params),
        initial=init,
        values=np.asarray(orbit[params.m + 1:], dtype=np.float64),
        status=status,
        halted_at=halted_at,
        guard=guard,
        scale=params.A,
        source=params,
        provenance=dict(provenance or {}),
    )


def comparison_simulate(p: float, m: int, init: Sequence[float], n_steps: int) -> np.ndarray:
    """
    Iterate the linear comparison equation u_{n+1} = 1 + p * u_{n-m}.

    Args:
        p (float): Coefficient in (0, 1)
        m (int): Delay
        init (Sequence[float]): u_{-m}, ..., u_0
        n_steps (int): Number of iterates

    Returns:
        np.ndarray: u_1, ..., u_{n_steps}; converges to 1 / (1 - p)

    Raises:
        ParameterError: If p is outside (0, 1) or init has the wrong length
    """
    comparison_equilibrium(p)
    if len(init) != m + 1:
        raise ParameterError(f"Expected m+1 = {m + 1} initial values, got {len(init)}")
    if n_steps < 0:
        raise ParameterError(f"n_steps must be >= 0, got {n_steps}")

    orbit = [float(u) for u in init]
    lag = -1 - m
    for _ in range(n_steps):
        orbit.append(1.0 + p * orbit[lag])
    return np.asarray(orbit[m + 1:], dtype=np.float64)
