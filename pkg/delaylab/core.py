#!/usr/bin/env python3
"""
delaylab Core Parameter Models

This module holds the model inputs and the closed-form quantities everything else
is built on. The unnormalized equation

    x_{n+1} = A + B * x_{n-m} / x_n**2,        A, B > 0, m >= 1

reduces through y_n = x_n / A to the one-parameter equation

    y_{n+1} = 1 + p * y_{n-m} / y_n**2,        p = B / A**2

whose unique positive equilibrium is y_bar = (1 + sqrt(1 + 4p)) / 2. The linear
comparison equation u_{n+1} = 1 + p * u_{n-m} used for the boundedness envelope has
equilibrium 1 / (1 - p) when 0 < p < 1.

All values here are immutable and every function is pure, so they can be shared
freely between threads and sweep worker processes.

Classes:
    DelayLabError: Base exception for the package
    ParameterError: Invalid model inputs or violated preconditions
    Parameters: Unnormalized (A, B, m)
    NormalizedParameters: Normalized (p, m)
    Equilibrium: Equilibrium of the normalized equation and its unnormalized image

Project: delaylab
Version: 1.0.0
License: MIT
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Optional


# Exception Classes

class DelayLabError(Exception):
    """Base exception for delaylab errors."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details = details or {}


class ParameterError(DelayLabError, ValueError):
    """Model inputs are invalid or an operation's precondition does not hold."""
    pass


# Residual bound required of the closed-form equilibrium
EQUILIBRIUM_RESIDUAL_TOL = 1e-12


def _require_delay(m: Any) -> int:
    """Validate the delay: an integer >= 1 (booleans are rejected)."""
    if isinstance(m, bool) or not isinstance(m, int):
        raise ParameterError(f"Delay m must be an integer, got {m!r}")
    if m < 1:
        raise ParameterError(f"Delay m must be >= 1, got {m}")
    return m


def _require_positive(name: str, value: Any) -> float:
    """Validate a strictly positive finite real."""
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ParameterError(f"{name} must be a real number, got {value!r}")
    if not math.isfinite(value) or value <= 0.0:
        raise ParameterError(f"{name} must be a positive finite real, got {value}")
    return value


# Domain Types

@dataclass(frozen=True, slots=True)
class Parameters:
    """
    Parameters of the unnormalized equation x_{n+1} = A + B * x_{n-m} / x_n**2.

    Attributes:
        A (float): Additive constant, > 0
        B (float): Coefficient of the rational term, > 0
        m (int): Delay, >= 1. The equation has order m + 1.

    Raises:
        ParameterError: If A <= 0, B <= 0 or m < 1
    """
    A: float
    B: float
    m: int

    def __post_init__(self) -> None:
        object.__setattr__(self, 'A', _require_positive("A", self.A))
        object.__setattr__(self, 'B', _require_positive("B", self.B))
        _require_delay(self.m)


@dataclass(frozen=True, slots=True)
class NormalizedParameters:
    """
    Parameters of the normalized equation y_{n+1} = 1 + p * y_{n-m} / y_n**2.

    Attributes:
        p (float): Normalized coefficient B / A**2, > 0
        m (int): Delay, >= 1
    """
    p: float
    m: int

    def __post_init__(self) -> None:
        object.__setattr__(self, 'p', _require_positive("p", self.p))
        _require_delay(self.m)


@dataclass(frozen=True, slots=True)
class Equilibrium:
    """
    Unique positive equilibrium.

    Attributes:
        y_bar (float): Equilibrium of the normalized equation, root of y**2 - y - p = 0
        x_bar (float): Equilibrium of the unnormalized equation, A * y_bar
            (equal to y_bar when no scale is known)
        residual (float): |y_bar**2 - y_bar - p| as evaluated in double precision
    """
    y_bar: float
    x_bar: float
    residual: float


# Operations

def normalize(params: Parameters) -> NormalizedParameters:
    """
    Reduce (A, B, m) to (p, m) with p = B / A**2.

    Example:
        ```python
        normalize(Parameters(A=2.0, B=2.0, m=1))   # NormalizedParameters(p=0.5, m=1)
        ```
    """
    return NormalizedParameters(p=params.B / (params.A * params.A), m=params.m)


def equilibrium(p: float, scale: float = 1.0) -> Equilibrium:
    """
    Closed-form positive equilibrium y_bar = (1 + sqrt(1 + 4p)) / 2.

    The closed form is followed by one Newton step on f(y) = y**2 - y - p, which
    removes the last-ulp error of the square root for large p. The residual is
    checked against EQUILIBRIUM_RESIDUAL_TOL scaled by max(1, p) so a transcription
    error cannot slip through silently.

    Args:
        p (float): Normalized parameter, > 0
        scale (float): A, to obtain x_bar = A * y_bar. Defaults to 1.

    Returns:
        Equilibrium: y_bar, x_bar and the residual

    Raises:
        ParameterError: If p <= 0 or scale <= 0
    """
    p = _require_positive("p", p)
    scale = _require_positive("scale", scale)

    y = (1.0 + math.sqrt(1.0 + 4.0 * p)) / 2.0
    y -= (y * y - y - p) / (2.0 * y - 1.0)

    residual = abs(y * y - y - p)
    if residual > EQUILIBRIUM_RESIDUAL_TOL * max(1.0, p):
        raise DelayLabError(
            f"Equilibrium residual {residual:.3e} exceeds tolerance for p={p}",
            details={'p': p, 'y_bar': y, 'residual': residual}
        )
    return Equilibrium(y_bar=y, x_bar=scale * y, residual=residual)


def equilibrium_of(params: Parameters) -> Equilibrium:
    """Equilibrium of the unnormalized equation: y_bar of normalize(params), x_bar = A * y_bar."""
    return equilibrium(normalize(params).p, scale=params.A)


def fixed_point_residual(params: Parameters) -> float:
    """
    Residual |x_bar - A - B * x_bar / x_bar**2| of the unnormalized fixed point.

    Used to confirm that un-normalizing the equilibrium reproduces a fixed point
    of the x equation.
    """
    x_bar = equilibrium_of(params).x_bar
    return abs(x_bar - params.A - params.B * x_bar / (x_bar * x_bar))


def comparison_equilibrium(p: float) -> float:
    """
    Equilibrium 1 / (1 - p) of the comparison equation u_{n+1} = 1 + p * u_{n-m}.

    Raises:
        ParameterError: If p is outside (0, 1); for p >= 1 the comparison
            equation has no positive equilibrium
    """
    p = _require_positive("p", p)
    if p >= 1.0:
        raise ParameterError(
            f"Comparison equation needs 0 < p < 1, got p={p}",
            details={'p': p}
        )
    return 1.0 / (1.0 - p)
