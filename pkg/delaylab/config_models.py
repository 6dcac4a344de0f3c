#!/usr/bin/env python3
"""
delaylab Configuration Models and Validation

This module contains the Pydantic configuration models and the configuration
loading logic for delaylab. Every knob that changes a numerical result (guard
bounds, step counts, seeds, tolerances, grids) lives in a validated model so a run
can be echoed back verbatim into its JSON report and reproduced later.

**Configuration Sources (lowest to highest precedence):**
    1. Model defaults (in the code), plus the conjecture grid in conjecture mode
    2. A JSON (or YAML) run file carrying ``"schema": 1``
    3. Environment variables, for logging only (LOG_LEVEL, LOG_DIR)
    4. Command line flags

Seeds are never taken from the environment: a run that uses randomness must name
its seed in the file or on the command line.

Classes:
    Configuration Models:
        IterationGuard: Step budget and blow-up bounds for the recurrence
        InitDistribution: Uniform distribution for random initial values
        InitSpec: Explicit or seeded-random initial conditions
        SweepConfig: Parameter-space sweep grid, trials and seeds
        AnalysisConfig: Tolerances for the theorem-facing analyses
        LoggingConfig: Logger level, directory and color settings
        OutputConfig: Output destination and format
        RunConfig: Top-level run configuration

    Validation:
        ConfigurationValidator: Loading, merging and validation with error reporting

Project: delaylab
Version: 1.0.0
License: MIT
"""

import copy
import json
import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .core import ParameterError
from .utils import VALID_LOG_LEVELS, get_logger

CONFIG_SCHEMA_VERSION = 1


class ConfigurationError(ParameterError):
    """Run configuration could not be loaded or failed validation."""

    def __init__(self, message: str, errors: Optional[List[str]] = None):
        super().__init__(message, details={'errors': errors or []})
        self.errors = errors or []


# ==================== RECURRENCE CONFIGURATION ====================

class IterationGuard(BaseModel):
    """
    Step budget and blow-up bounds for iterating the recurrence.

    A value leaving the open interval (underflow_bound, overflow_bound) halts the
    iteration; the trajectory records where it stopped instead of raising.

    Attributes:
        max_steps (int): Number of iterates to compute, >= 1
        overflow_bound (float): Upper bound for iterates (default 1e150)
        underflow_bound (float): Lower bound for the divisor y_n (default 1e-150)

    Example:
        ```python
        guard = IterationGuard(max_steps=500)
        IterationGuard(max_steps=10, underflow_bound=2.0)  # ValidationError: needs underflow < 1
        ```
    """
    model_config = ConfigDict(extra='forbid', frozen=True)

    max_steps: int = Field(default=1000, ge=1)
    overflow_bound: float = Field(default=1e150, gt=0)
    underflow_bound: float = Field(default=1e-150, gt=0)

    @model_validator(mode='after')
    def validate_bounds(self) -> 'IterationGuard':
        """Require underflow_bound < 1 < overflow_bound."""
        if not self.underflow_bound < 1.0 < self.overflow_bound:
            raise ValueError(
                f"Guard bounds must satisfy underflow_bound < 1 < overflow_bound, "
                f"got {self.underflow_bound} and {self.overflow_bound}"
            )
        return self


# ==================== INITIAL CONDITIONS ====================

class InitDistribution(BaseModel):
    """
    Uniform distribution over [low, high] for random initial values.

    The default [0.5, 5.0] brackets the equilibrium for every p <= 6, so random
    orbits exercise both semi-cycle signs.
    """
    model_config = ConfigDict(extra='forbid', frozen=True)

    low: float = Field(default=0.5, gt=0)
    high: float = Field(default=5.0, gt=0)

    @model_validator(mode='after')
    def validate_range(self) -> 'InitDistribution':
        """Require 0 < low < high."""
        if not self.low < self.high:
            raise ValueError(f"Init distribution needs low < high, got [{self.low}, {self.high}]")
        return self


class InitSpec(BaseModel):
    """
    Initial conditions: either an explicit list or a seeded random draw.

    Attributes:
        values (Optional[List[float]]): Explicit y_{-m}, ..., y_0 (oldest first)
        random (Optional[InitDistribution]): Distribution for a random draw
        seed (Optional[int]): Seed for the random draw, required with ``random``
    """
    model_config = ConfigDict(extra='forbid')

    values: Optional[List[float]] = None
    random: Optional[InitDistribution] = None
    seed: Optional[int] = Field(default=None, ge=0, lt=2 ** 64)

    # noinspection PyDecorator
    @field_validator('values')
    @classmethod
    def validate_values(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        """Explicit initial values must be positive."""
        if v is not None:
            if not v:
                raise ValueError("Initial values cannot be empty")
            if any(x <= 0 for x in v):
                raise ValueError(f"Initial values must be positive, got {v}")
        return v

    @model_validator(mode='after')
    def validate_source(self) -> 'InitSpec':
        """Exactly one source; a random draw needs an explicit seed."""
        if self.values is not None and self.random is not None:
            raise ValueError("Give either explicit initial values or a random spec, not both")
        if self.random is not None and self.seed is None:
            raise ValueError("Random initial conditions need an explicit seed")
        return self

    @property
    def is_empty(self) -> bool:
        return self.values is None and self.random is None


# ==================== SWEEP CONFIGURATION ====================

class SweepConfig(BaseModel):
    """
    Parameter-space sweep over a (p, m) grid.

    The p grid is ``p_steps`` evenly spaced values from p_min to p_max inclusive.
    Each (p, m) cell runs ``trials`` simulations from random initial conditions;
    trial RNG streams are derived from (seed, cell index, trial index) so results
    do not depend on evaluation order or on the number of workers.

    Attributes:
        p_min (float): Smallest p, > 0
        p_max (float): Largest p, >= p_min
        p_steps (int): Number of grid points, >= 1
        m_values (List[int]): Delays to sweep
        trials (int): Random trials per cell, >= 1
        init (InitDistribution): Distribution of initial values
        seed (int): 64-bit master seed (required)
        steps (int): Iterates per trial
        tol (float): Final-error threshold for a trial to count as converged
        workers (int): Worker processes; 1 evaluates in-process
    """
    model_config = ConfigDict(extra='forbid', frozen=True)

    p_min: float = Field(..., gt=0)
    p_max: float = Field(..., gt=0)
    p_steps: int = Field(default=1, ge=1)
    m_values: List[int] = Field(default_factory=lambda: [1])
    trials: int = Field(default=10, ge=1)
    init: InitDistribution = Field(default_factory=InitDistribution)
    seed: int = Field(..., ge=0, lt=2 ** 64)
    steps: int = Field(default=5000, ge=1)
    tol: float = Field(default=1e-6, gt=0)
    workers: int = Field(default=1, ge=1)
    overflow_bound: float = Field(default=1e150, gt=1)
    underflow_bound: float = Field(default=1e-150, gt=0, lt=1)

    # noinspection PyDecorator
    @field_validator('m_values')
    @classmethod
    def validate_m_values(cls, v: List[int]) -> List[int]:
        """Delays must be a non-empty list of integers >= 1."""
        if not v:
            raise ValueError("m_values cannot be empty")
        if any(m < 1 for m in v):
            raise ValueError(f"Every delay must be >= 1, got {v}")
        return v

    @model_validator(mode='after')
    def validate_grid(self) -> 'SweepConfig':
        """Require p_min <= p_max."""
        if self.p_max < self.p_min:
            raise ValueError(f"p_max ({self.p_max}) must be >= p_min ({self.p_min})")
        return self

    def p_grid(self) -> List[float]:
        """Evenly spaced p values, endpoints included."""
        if self.p_steps == 1:
            return [self.p_min]
        step = (self.p_max - self.p_min) / (self.p_steps - 1)
        return [self.p_min + i * step for i in range(self.p_steps - 1)] + [self.p_max]

    def guard(self) -> IterationGuard:
        return IterationGuard(max_steps=self.steps,
                              overflow_bound=self.overflow_bound,
                              underflow_bound=self.underflow_bound)


# ==================== ANALYSIS / LOGGING / OUTPUT ====================

class AnalysisConfig(BaseModel):
    """Tolerances for the theorem-facing analyses."""
    model_config = ConfigDict(extra='forbid')

    max_period: int = Field(default=64, ge=1)
    period_tol: float = Field(default=1e-8, gt=0)
    sign_resolution: float = Field(default=1e-10, ge=0)


class LoggingConfig(BaseModel):
    """Logger settings; LOG_LEVEL and LOG_DIR override these from the environment."""
    model_config = ConfigDict(extra='forbid')

    level: str = Field(default="INFO")
    log_dir: Optional[str] = Field(default=None, description="Directory for delaylab.log (none = console only)")
    color: Optional[bool] = Field(default=None, description="Force colors on/off; auto-detect when unset")

    # noinspection PyDecorator
    @field_validator('level')
    @classmethod
    def validate_level(cls, v: str) -> str:
        """Validate and normalize a Python logging level name."""
        v = v.upper()
        if v not in VALID_LOG_LEVELS:
            raise ValueError(f"Invalid log level. Must be one of: {VALID_LOG_LEVELS}")
        return v


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class OutputConfig(BaseModel):
    """
    Output destination.

    Attributes:
        path (str): File path, or ``-`` for stdout
        format (Optional[OutputFormat]): csv or json; the mode's natural format when unset
        report (Optional[str]): Extra JSON summary path for CSV-producing modes
    """
    model_config = ConfigDict(extra='forbid')

    path: str = Field(default="-")
    format: Optional[OutputFormat] = None
    report: Optional[str] = None


# ==================== TOP-LEVEL RUN CONFIGURATION ====================

class RunMode(str, Enum):
    SIMULATE = "simulate"
    ANALYZE = "analyze"
    ROOTS = "roots"
    ENVELOPE = "envelope"
    SWEEP = "sweep"
    CONJECTURE = "conjecture"


SWEEP_MODES = (RunMode.SWEEP, RunMode.CONJECTURE)

# Grid sampled by the conjecture mode unless the run file or flags say otherwise;
# the seed is deliberately absent
CONJECTURE_SWEEP_DEFAULTS: Dict[str, Any] = {
    'sweep': {
        'p_min': 0.50,
        'p_max': 0.70,
        'p_steps': 5,
        'm_values': [1, 2, 3],
        'trials': 50,
        'steps': 20000,
    }
}


class RunConfig(BaseModel):
    """
    Top-level run configuration.

    Exactly one of (A, B) or p describes the model for the single-orbit modes; when
    A and B are given, p is derived by normalization and the trajectory is produced
    in x coordinates. Sweep modes take their grid from ``sweep`` instead.

    Example:
        ```python
        config = RunConfig(mode="simulate", p=0.3, m=2,
                           init={"values": [1, 1, 1]}, steps=100)
        config.model_dump(mode="json", by_alias=True)   # echo-back for reports
        ```
    """
    model_config = ConfigDict(extra='forbid', populate_by_name=True)

    schema_version: int = Field(default=CONFIG_SCHEMA_VERSION, alias="schema")
    mode: RunMode
    A: Optional[float] = Field(default=None, gt=0)
    B: Optional[float] = Field(default=None, gt=0)
    p: Optional[float] = Field(default=None, gt=0)
    m: Optional[int] = Field(default=None, ge=1)
    init: InitSpec = Field(default_factory=InitSpec)
    steps: int = Field(default=1000, ge=1)
    overflow_bound: float = Field(default=1e150, gt=1)
    underflow_bound: float = Field(default=1e-150, gt=0, lt=1)
    sweep: Optional[SweepConfig] = None
    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    # noinspection PyDecorator
    @field_validator('schema_version')
    @classmethod
    def validate_schema(cls, v: int) -> int:
        """Only schema 1 is understood."""
        if v != CONFIG_SCHEMA_VERSION:
            raise ValueError(f"Unsupported config schema {v}; expected {CONFIG_SCHEMA_VERSION}")
        return v

    @model_validator(mode='after')
    def validate_parameters(self) -> 'RunConfig':
        """Exactly one of (A, B) or p for single-orbit modes; a grid for sweeps."""
        if self.mode in SWEEP_MODES:
            if self.mode == RunMode.SWEEP and self.sweep is None:
                raise ValueError("Sweep mode needs a sweep grid")
            return self

        has_ab = self.A is not None or self.B is not None
        if has_ab and (self.A is None or self.B is None):
            raise ValueError("A and B must be given together")
        if has_ab == (self.p is not None):
            raise ValueError("Give exactly one of (A, B) or p")
        if self.m is None:
            raise ValueError(f"Mode '{self.mode.value}' needs a delay m")
        return self

    @property
    def normalized_p(self) -> float:
        """p as given, or B / A**2 when the unnormalized form was given."""
        if self.p is not None:
            return self.p
        return self.B / (self.A * self.A)

    def guard(self) -> IterationGuard:
        return IterationGuard(max_steps=self.steps,
                              overflow_bound=self.overflow_bound,
                              underflow_bound=self.underflow_bound)


# ==================== CONFIGURATION VALIDATION ====================

def _deep_merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Merge ``overrides`` into a copy of ``base``; nested dicts merge, other values replace."""
    merged = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


class ConfigurationValidator:
    """
    Configuration loader with environment and command line overrides.

    **The Validation Process:**
        1. Load the run file (JSON, or YAML by extension)
        2. Apply environment overrides (logging only)
        3. Apply command line overrides (flags override file)
        4. Create the Pydantic model (type checking and conversion)
        5. Mode-specific checks; collect errors and warnings
        6. Report results through the ``delaylab.config`` logger

    Errors are collected rather than raised one at a time so a broken run file is
    reported in full.

    Attributes:
        logger (logging.Logger): Logger for reporting validation progress
        errors (List[str]): Validation errors that prevent the run
        warnings (List[str]): Validation warnings that do not prevent the run

    Example:
        ```python
        validator = ConfigurationValidator()
        config = validator.load_and_validate_config("run.json", {"p": 0.4})
        ```
    """

    ENV_MAPPINGS = {
        'LOG_LEVEL': ['logging', 'level'],
        'LOG_DIR': ['logging', 'log_dir'],
    }

    def __init__(self):
        self.logger = get_logger("delaylab.config")
        self.errors: List[str] = []
        self.warnings: List[str] = []

    def load_and_validate_config(self, config_path: Optional[str] = None,
                                 overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
        """
        Load, merge and validate a run configuration.

        Args:
            config_path (Optional[str]): Path to a JSON/YAML run file, or None for defaults
            overrides (Optional[Dict[str, Any]]): Nested values from command line flags

        Returns:
            RunConfig: Fully validated run configuration

        Raises:
            ConfigurationError: If loading or validation fails
        """
        self.errors = []
        self.warnings = []

        config_data: Dict[str, Any] = {}
        if config_path:
            self.logger.info(f"Loading configuration from {config_path}")
            config_data = self._load_config_file(config_path)

        mode = (overrides or {}).get('mode', config_data.get('mode'))
        if mode == RunMode.CONJECTURE.value:
            config_data = _deep_merge(CONJECTURE_SWEEP_DEFAULTS, config_data)

        self._apply_env_overrides(config_data)
        config_data = _deep_merge(config_data, overrides or {})

        try:
            config = RunConfig(**config_data)
        except ValidationError as e:
            self.logger.error("Configuration model validation failed:")
            for error in e.errors():
                field_path = " -> ".join(str(x) for x in error['loc']) or "config"
                self.logger.error(f"  {field_path}: {error['msg']}")
                self.errors.append(f"{field_path}: {error['msg']}")
            raise ConfigurationError("Configuration model validation failed", list(self.errors))

        self._validate_mode_requirements(config)
        self._report_validation_results()

        self.logger.debug(f"Configuration validated for mode '{config.mode.value}'")
        return config

    def _load_config_file(self, config_path: str) -> Dict[str, Any]:
        """
        Load configuration data from a JSON or YAML file.

        Raises:
            ConfigurationError: If the file is missing, unreadable or malformed
        """
        path = Path(config_path)
        try:
            with open(path, 'r', encoding='utf-8') as f:
                if path.suffix.lower() in ('.yaml', '.yml'):
                    data = yaml.safe_load(f) or {}
                else:
                    data = json.load(f) or {}
        except FileNotFoundError:
            raise ConfigurationError(f"Configuration file not found: {config_path}")
        except (json.JSONDecodeError, yaml.YAMLError) as e:
            raise ConfigurationError(f"Invalid configuration file format: {e}")
        except OSError as e:
            raise ConfigurationError(f"Error reading configuration file: {e}")

        if not isinstance(data, dict):
            raise ConfigurationError(f"Configuration file must contain an object, got {type(data).__name__}")
        if 'schema' not in data:
            self.warnings.append(f"{config_path} has no 'schema' field; assuming schema {CONFIG_SCHEMA_VERSION}")
        return data

    def _apply_env_overrides(self, config_data: Dict[str, Any]) -> None:
        """
        Apply environment variable overrides. Only logging settings are read from the
        environment; numerical settings, seeds in particular, never are.
        """
        for env_var, path in self.ENV_MAPPINGS.items():
            value = os.environ.get(env_var)
            if value:
                current = config_data
                for key in path[:-1]:
                    current = current.setdefault(key, {})
                current[path[-1]] = value
                self.logger.debug(f"Applied environment override: {env_var}")

    def _validate_mode_requirements(self, config: RunConfig) -> None:
        """Checks that depend on the mode and cannot be expressed per field."""
        if config.mode in (RunMode.SIMULATE, RunMode.ANALYZE, RunMode.ENVELOPE):
            if config.init.is_empty:
                self.errors.append(f"Mode '{config.mode.value}' needs initial conditions (values or random + seed)")
            elif config.init.values is not None and len(config.init.values) != config.m + 1:
                self.errors.append(
                    f"Expected m+1 = {config.m + 1} initial values, got {len(config.init.values)}"
                )

        if config.mode == RunMode.ENVELOPE and config.normalized_p >= 1.0:
            self.errors.append(f"Envelope mode needs 0 < p < 1, got p={config.normalized_p}")

        if config.mode not in SWEEP_MODES and config.sweep is not None:
            self.warnings.append(f"Sweep grid is ignored in mode '{config.mode.value}'")
        if config.mode in (RunMode.ANALYZE, RunMode.SIMULATE) and config.normalized_p >= 0.75:
            self.warnings.append(
                f"p={config.normalized_p} is outside the proven local-stability range (0, 3/4); "
                f"results are recorded without theorem claims"
            )

    def _report_validation_results(self) -> None:
        """
        Report validation results; raise if there are errors.

        Raises:
            ConfigurationError: If any validation errors occurred
        """
        if self.warnings:
            self.logger.warning("Configuration warnings:")
            for warning in self.warnings:
                self.logger.warning(f"  - {warning}")

        if self.errors:
            self.logger.error("Configuration errors:")
            for error in self.errors:
                self.logger.error(f"  - {error}")
            raise ConfigurationError("Configuration validation failed", list(self.errors))
