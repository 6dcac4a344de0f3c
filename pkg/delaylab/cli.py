#!/usr/bin/env python3
"""
delaylab Command Line Interface

Front end for simulations, analyses and sweeps. A run is described by a
RunConfig assembled from an optional JSON/YAML run file and command line flags
(flags win), then dispatched on its mode:

    simulate    Iterate one orbit and write it as CSV (n,y or n,x,y)
    analyze     Run every orbit analysis and write a JSON report
    roots       Characteristic roots and local stability as JSON
    envelope    Comparison-equation envelope of one orbit
    sweep       Convergence counts over a (p, m) grid as CSV
    conjecture  The sweep for 1/2 <= p < 3/4; counts are recorded, never asserted

Exit codes:
    0  success
    1  invalid arguments or configuration
    2  numerical failure: guard trip, root finder or envelope solve failure
    3  a proven property was violated during analysis (regression alarm)

Standard output carries only machine-readable output (``--out -``); diagnostics
go to standard error through the ``delaylab`` logger. CSV columns:

    trajectory  n,y   or  n,x,y   (initial segment at indices -m..0)
    envelope    n,y,u,u_closed
    roots       re,im,modulus,residual
    sweep       p,m,n_converged,n_diverged,n_undetermined,median_err,median_rate

Floats are written with 17 significant digits, independent of the locale.

Functions:
    build_parser: argparse parser for all modes
    args_to_overrides: Map parsed flags onto the RunConfig layout
    run: Execute a validated RunConfig and return the exit code
    main: Parse, configure logging, validate and run

Project: delaylab
Version: 1.0.0
License: MIT
"""

import argparse
import csv
import json
import math
import os
import sys
from contextlib import contextmanager
from enum import Enum
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, TextIO

import numpy as np

from . import __version__
from .analysis import (
    EquilibriumOrbitError, NotConvergingError, PatternMismatchError, ShortErrorSeriesError, SingularSystemError,
    WindowTooShortError, check_alternation, check_max_semicycle_length, decompose_semicycles, detect_period,
    envelope, error_recurrence_residuals, estimate_rate, two_cycle_analysis
)
from .config_models import SWEEP_MODES, ConfigurationError, ConfigurationValidator, OutputFormat, RunConfig, RunMode
from .core import DelayLabError, NormalizedParameters, ParameterError, Parameters, equilibrium
from .linearization import (
    NonConvergenceError, StabilityClass, StabilityReport, characteristic_polynomial, classify_stability,
    companion_cross_check, flip_root, linearize
)
from .recurrence import InitialConditions, Trajectory, simulate, simulate_x_form
from .sweep import SweepCell, conjecture_evidence, stability_sweep
from .utils import format_float, get_logger, setup_logging

logger = get_logger("delaylab.cli")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2
EXIT_VIOLATION = 3

# Bound on the exact error identity, relative to its largest term
IDENTITY_TOL = 1e-12
# Closed-form and iterative envelopes must agree to this
ENVELOPE_AGREEMENT_TOL = 1e-9
COMPANION_AGREEMENT_TOL = 1e-6
# Cells this far below p = 1/2 must converge in every trial
GLOBAL_STABILITY_MARGIN = 1e-3

TRAJECTORY_COLUMNS = ['n', 'y']
X_TRAJECTORY_COLUMNS = ['n', 'x', 'y']
ENVELOPE_COLUMNS = ['n', 'y', 'u', 'u_closed']
ROOT_COLUMNS = ['re', 'im', 'modulus', 'residual']
SWEEP_COLUMNS = ['p', 'm', 'n_converged', 'n_diverged', 'n_undetermined', 'median_err', 'median_rate']


# ==================== ARGUMENT PARSING ====================

class _ArgumentParser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad input; invalid arguments here exit with 1."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        raise ConfigurationError(f"{self.prog}: {message}")


def _float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got '{text}'")


def _int_list(text: str) -> List[int]:
    try:
        return [int(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    """Parser for every mode; flags not relevant to a mode are ignored by it."""
    parser = _ArgumentParser(
        prog="delaylab",
        description="Simulate and analyze y(n+1) = 1 + p*y(n-m)/y(n)^2 and its unnormalized form",
    )
    parser.add_argument('mode', choices=[mode.value for mode in RunMode])
    parser.add_argument('--config', help="JSON or YAML run file (schema 1)")
    parser.add_argument('--version', action='version', version=f"delaylab {__version__}")

    model = parser.add_argument_group('model')
    model.add_argument('--p', type=float, help="Normalized parameter p > 0")
    model.add_argument('--A', dest='A', type=float, help="Additive constant of the unnormalized form")
    model.add_argument('--B', dest='B', type=float, help="Coefficient of the unnormalized form")
    model.add_argument('--m', type=_int_list, help="Delay; a comma separated list in sweep modes")

    init = parser.add_argument_group('initial conditions')
    init.add_argument('--init', type=_float_list, help="y(-m),...,y(0), oldest first")
    init.add_argument('--init-random', action='store_true', help="Draw initial values uniformly (needs --seed)")
    init.add_argument('--init-low', type=float)
    init.add_argument('--init-high', type=float)
    init.add_argument('--seed', type=int, help="Seed for random initial values and sweeps")

    iteration = parser.add_argument_group('iteration')
    iteration.add_argument('--steps', type=int)
    iteration.add_argument('--overflow-bound', type=float)
    iteration.add_argument('--underflow-bound', type=float)

    sweep = parser.add_argument_group('sweep')
    sweep.add_argument('--p-min', type=float)
    sweep.add_argument('--p-max', type=float)
    sweep.add_argument('--p-steps', type=int)
    sweep.add_argument('--trials', type=int)
    sweep.add_argument('--tol', type=float, help="Final error counted as converged")
    sweep.add_argument('--workers', type=int)

    analysis = parser.add_argument_group('analysis')
    analysis.add_argument('--max-period', type=int)
    analysis.add_argument('--period-tol', type=float)
    analysis.add_argument('--sign-resolution', type=float)

    output = parser.add_argument_group('output')
    output.add_argument('--out', help="Output path, '-' for stdout")
    output.add_argument('--format', choices=[fmt.value for fmt in OutputFormat])
    output.add_argument('--report', help="Extra JSON summary for CSV-producing modes")

    logs = parser.add_argument_group('logging')
    logs.add_argument('--log-level')
    logs.add_argument('--log-dir')
    logs.add_argument('--color', action=argparse.BooleanOptionalAction, default=None)
    return parser


def _set(target: Dict[str, Any], key: str, value: Any) -> None:
    if value is not None:
        target[key] = value


def args_to_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """
    Translate parsed flags into nested RunConfig overrides.

    Flags that pick an alternative (p versus A and B, explicit versus random
    initial values) clear the other alternative so they replace what the run file
    says instead of clashing with it.

    Raises:
        ConfigurationError: If flags contradict each other
    """
    mode = RunMode(args.mode)
    overrides: Dict[str, Any] = {'mode': mode.value}

    if args.p is not None:
        overrides.update({'p': args.p, 'A': None, 'B': None})
    if args.A is not None or args.B is not None:
        if args.p is not None:
            raise ConfigurationError("Give either --p or --A/--B, not both")
        overrides.update({'A': args.A, 'B': args.B, 'p': None})

    if args.init is not None and args.init_random:
        raise ConfigurationError("Give either --init or --init-random, not both")

    sweep: Dict[str, Any] = {}
    if mode in SWEEP_MODES:
        if args.m is not None:
            sweep['m_values'] = args.m
        for key in ('p_min', 'p_max', 'p_steps', 'trials', 'tol', 'workers', 'seed', 'steps',
                    'overflow_bound', 'underflow_bound'):
            _set(sweep, key, getattr(args, key))
        distribution: Dict[str, Any] = {}
        _set(distribution, 'low', args.init_low)
        _set(distribution, 'high', args.init_high)
        if distribution:
            sweep['init'] = distribution
        if sweep:
            overrides['sweep'] = sweep
    else:
        if args.m is not None:
            if len(args.m) != 1:
                raise ConfigurationError(f"Mode '{mode.value}' takes a single delay, got --m {args.m}")
            overrides['m'] = args.m[0]
        for key in ('steps', 'overflow_bound', 'underflow_bound'):
            _set(overrides, key, getattr(args, key))
        if args.init is not None:
            overrides['init'] = {'values': args.init, 'random': None}
        elif args.init_random:
            distribution = {}
            _set(distribution, 'low', args.init_low)
            _set(distribution, 'high', args.init_high)
            overrides['init'] = {'values': None, 'random': distribution, 'seed': args.seed}

    analysis: Dict[str, Any] = {}
    _set(analysis, 'max_period', args.max_period)
    _set(analysis, 'period_tol', args.period_tol)
    _set(analysis, 'sign_resolution', args.sign_resolution)
    if analysis:
        overrides['analysis'] = analysis

    output: Dict[str, Any] = {}
    _set(output, 'path', args.out)
    _set(output, 'format', args.format)
    _set(output, 'report', args.report)
    if output:
        overrides['output'] = output

    logging_section: Dict[str, Any] = {}
    _set(logging_section, 'level', args.log_level)
    _set(logging_section, 'log_dir', args.log_dir)
    _set(logging_section, 'color', args.color)
    if logging_section:
        overrides['logging'] = logging_section
    return overrides


# ==================== OUTPUT ====================

@contextmanager
def open_output(path: str) -> Iterator[TextIO]:
    """Yield stdout for '-', otherwise a UTF-8 file opened for CSV-safe writing."""
    if path == '-':
        yield sys.stdout
        sys.stdout.flush()
    else:
        with open(path, 'w', encoding='utf-8', newline='') as handle:
            yield handle


def _jsonable(value: Any) -> Any:
    """Convert report values to JSON types; non-finite floats become null."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {'re': _jsonable(float(value.real)), 'im': _jsonable(float(value.imag))}
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_json(payload: Dict[str, Any], handle: TextIO) -> None:
    json.dump(_jsonable(payload), handle, indent=2, allow_nan=False)
    handle.write('\n')


def _csv_writer(handle: TextIO):
    return csv.writer(handle, lineterminator='\n')


def write_trajectory_csv(traj: Trajectory, handle: TextIO) -> None:
    """``n,y`` rows, or ``n,x,y`` for orbits of the unnormalized equation."""
    writer = _csv_writer(handle)
    orbit = traj.full_orbit()
    indices = traj.indices()
    if traj.scale != 1.0:
        writer.writerow(X_TRAJECTORY_COLUMNS)
        for n, x in zip(indices, orbit):
            writer.writerow([int(n), format_float(x), format_float(x / traj.scale)])
    else:
        writer.writerow(TRAJECTORY_COLUMNS)
        for n, y in zip(indices, orbit):
            writer.writerow([int(n), format_float(y)])


def write_sweep_csv(cells: Sequence[SweepCell], handle: TextIO) -> None:
    writer = _csv_writer(handle)
    writer.writerow(SWEEP_COLUMNS)
    for cell in cells:
        writer.writerow([format_float(cell.p), cell.m, cell.n_converged, cell.n_diverged,
                         cell.n_undetermined, format_float(cell.median_err), format_float(cell.median_rate)])


def _config_echo(config: RunConfig) -> Dict[str, Any]:
    return config.model_dump(mode="json", by_alias=True)


def trajectory_summary(traj: Trajectory) -> Dict[str, Any]:
    summary = {
        'p': traj.p,
        'm': traj.m,
        'status': traj.status,
        'halted_at': traj.halted_at,
        'steps_computed': len(traj),
        'final_value': float(traj.values[-1]) if len(traj) else None,
        'provenance': traj.provenance,
    }
    if traj.source is not None:
        summary.update({'A': traj.source.A, 'B': traj.source.B, 'scale': traj.scale})
    return summary


def stability_summary(report: StabilityReport) -> Dict[str, Any]:
    return {
        'clark_sum': report.clark_sum,
        'clark_holds': report.clark_holds,
        'spectral_radius': report.spectral_radius,
        'classification': report.classification,
        'roots': [{'re': r.real, 'im': r.imag, 'modulus': abs(r), 'residual': res}
                  for r, res in zip(report.roots.roots, report.roots.residuals)],
        'vieta_error': report.roots.vieta_error,
    }


# ==================== MODES ====================

def resolve_initial(config: RunConfig) -> List[float]:
    """Explicit initial values, or m + 1 values drawn with the configured seed."""
    if config.init.values is not None:
        return list(config.init.values)
    distribution = config.init.random
    rng = np.random.default_rng(config.init.seed)
    return [float(v) for v in rng.uniform(distribution.low, distribution.high, size=config.m + 1)]


def build_trajectory(config: RunConfig) -> Trajectory:
    """Simulate the configured orbit, in x coordinates when A and B were given."""
    init = resolve_initial(config)
    guard = config.guard()
    provenance = {'seed': config.init.seed} if config.init.random is not None else {}
    if config.A is not None:
        return simulate_x_form(Parameters(A=config.A, B=config.B, m=config.m), init, guard, provenance)
    return simulate(NormalizedParameters(p=config.p, m=config.m),
                    InitialConditions.for_delay(init, config.m), guard, provenance)


def _write_report(path: Optional[str], payload: Dict[str, Any]) -> None:
    if path:
        with open_output(path) as handle:
            write_json(payload, handle)


def _guard_tripped(traj: Trajectory) -> int:
    logger.warning(f"Iteration stopped: {traj.status.value} at step {traj.halted_at} "
                   f"(bounds {traj.guard.underflow_bound:g}, {traj.guard.overflow_bound:g})")
    return EXIT_NUMERICAL


def run_simulate(config: RunConfig) -> int:
    traj = build_trajectory(config)
    fmt = config.output.format or OutputFormat.CSV
    summary = {'config': _config_echo(config), 'trajectory': trajectory_summary(traj)}

    with open_output(config.output.path) as handle:
        if fmt == OutputFormat.CSV:
            write_trajectory_csv(traj, handle)
        else:
            write_json({**summary, 'indices': traj.indices(), 'values': traj.full_orbit()}, handle)
    _write_report(config.output.report, summary)

    if not traj.completed:
        return _guard_tripped(traj)
    logger.info(f"Simulated {len(traj)} steps for p={traj.p}, m={traj.m}")
    return EXIT_OK


def run_roots(config: RunConfig) -> int:
    p, m = config.normalized_p, config.m
    report = classify_stability(p, m)
    poly = characteristic_polynomial(linearize(p, m))
    companion, companion_method = companion_cross_check(poly)
    coeffs = linearize(p, m)

    violations = []
    if report.clark_holds and report.classification != StabilityClass.LOCALLY_STABLE:
        violations.append(f"Clark test holds but spectral radius is {report.spectral_radius}")
    if abs(companion - report.spectral_radius) > COMPANION_AGREEMENT_TOL:
        violations.append(f"Companion iteration gives {companion}, roots give {report.spectral_radius}")

    payload = {
        'config': _config_echo(config),
        'p': p,
        'm': m,
        'y_bar': coeffs.y_bar,
        'q0': coeffs.q0,
        'q_m': coeffs.q_m,
        'polynomial': list(poly.coefficients),
        **stability_summary(report),
        'companion_spectral_radius': companion,
        'companion_method': companion_method,
        'flip_root_value': flip_root(p, m),
    }
    fmt = config.output.format or OutputFormat.JSON
    with open_output(config.output.path) as handle:
        if fmt == OutputFormat.CSV:
            writer = _csv_writer(handle)
            writer.writerow(ROOT_COLUMNS)
            for root, residual in zip(report.roots.roots, report.roots.residuals):
                writer.writerow([format_float(root.real), format_float(root.imag),
                                 format_float(abs(root)), format_float(residual)])
        else:
            write_json(payload, handle)
    if fmt == OutputFormat.CSV:
        _write_report(config.output.report, payload)

    logger.info(f"p={p}, m={m}: spectral radius {report.spectral_radius:.12g} "
                f"({report.classification.value}), Clark sum {report.clark_sum:.12g}")
    return _finish(violations)


def _envelope_payload(env) -> Dict[str, Any]:
    return {
        'match_start': env.match_start,
        'constants': list(env.constants),
        'lambdas': list(env.lambdas),
        'max_discrepancy': env.max_discrepancy,
        'max_imag': env.max_imag,
        'violations': list(env.violations),
        'holds': env.holds,
    }


def _envelope_violations(env) -> List[str]:
    violations = []
    if env.violations:
        violations.append(f"1 < y_n <= u_n fails at {len(env.violations)} indices, first n={env.violations[0]}")
    if env.max_discrepancy > ENVELOPE_AGREEMENT_TOL:
        violations.append(f"Closed-form envelope differs from iteration by {env.max_discrepancy:.3e}")
    return violations


def run_envelope(config: RunConfig) -> int:
    traj = build_trajectory(config)
    if not traj.completed:
        return _guard_tripped(traj)

    orbit = traj.to_normalized()
    env = envelope(orbit)
    payload = {'config': _config_echo(config), 'trajectory': trajectory_summary(traj),
               'envelope': _envelope_payload(env)}

    fmt = config.output.format or OutputFormat.CSV
    with open_output(config.output.path) as handle:
        if fmt == OutputFormat.CSV:
            writer = _csv_writer(handle)
            writer.writerow(ENVELOPE_COLUMNS)
            full = orbit.full_orbit()
            for k, n in enumerate(env.indices):
                writer.writerow([int(n), format_float(full[n + orbit.m]),
                                 format_float(env.u_iterative[k]), format_float(env.u_closed_form[k])])
        else:
            write_json(payload, handle)
    if fmt == OutputFormat.CSV:
        _write_report(config.output.report, payload)
    return _finish(_envelope_violations(env))


def run_analyze(config: RunConfig) -> int:
    """Every orbit analysis in one JSON report; proven properties are checked, not assumed."""
    traj = build_trajectory(config)
    if not traj.completed:
        _write_report(config.output.report, {'config': _config_echo(config), 'trajectory': trajectory_summary(traj)})
        return _guard_tripped(traj)

    orbit = traj.to_normalized()
    p, m = orbit.p, orbit.m
    y_bar = equilibrium(p).y_bar
    settings = config.analysis
    violations: List[str] = []

    stability = classify_stability(p, m)
    if stability.clark_holds and stability.classification != StabilityClass.LOCALLY_STABLE:
        violations.append(f"Clark test holds but spectral radius is {stability.spectral_radius}")

    decomposition = decompose_semicycles(orbit, y_bar)
    semicycles = check_max_semicycle_length(decomposition, m, settings.sign_resolution)
    if not semicycles.holds:
        violations.append(f"{len(semicycles.offending)} semi-cycle(s) longer than m={m}, "
                          f"first at n={semicycles.offending[0].start_index}")

    alternation: Dict[str, Any] = {'applicable': False}
    if m % 2 == 1:
        try:
            result = check_alternation(orbit, y_bar, m, settings.sign_resolution)
            alternation = {'applicable': True, 'holds': result.holds, 'first_violation': result.first_violation,
                           'n_judged': result.n_judged, 'n_unresolved': result.n_unresolved}
            if not result.holds:
                violations.append(f"Alternation broken at n={result.first_violation}")
        except PatternMismatchError as e:
            alternation['reason'] = str(e)

    try:
        period_report = detect_period(orbit, settings.max_period, settings.period_tol)
        period: Dict[str, Any] = {'period': period_report.period, 'window': period_report.window,
                                  'tol': period_report.tol, 'cycle_values': list(period_report.cycle_values)}
        if m % 2 == 0 and period_report.is_two_distinct_cycle:
            violations.append(f"Orbit settled on a 2-cycle {period_report.cycle_values} with even m={m}")
    except WindowTooShortError as e:
        period = {'period': None, 'reason': str(e)}

    two_cycle = two_cycle_analysis(p, m)
    if m % 2 == 0 and not two_cycle.only_symmetric:
        violations.append(f"Asymmetric period-two solutions {two_cycle.asymmetric} with even m={m}")

    residuals = error_recurrence_residuals(orbit, y_bar, relative=True)
    max_residual = float(np.max(residuals)) if len(residuals) else 0.0
    if max_residual > IDENTITY_TOL:
        violations.append(f"Error identity residual {max_residual:.3e} exceeds {IDENTITY_TOL:.0e}")

    envelope_section: Dict[str, Any] = {'applicable': p < 1.0}
    if p < 1.0:
        env = envelope(orbit)
        envelope_section.update(_envelope_payload(env))
        violations.extend(_envelope_violations(env))

    try:
        rate = estimate_rate(orbit, y_bar, stability.roots)
        rate_section: Dict[str, Any] = {
            'nth_root_estimate': rate.nth_root_estimate,
            'method': rate.method,
            'fitted_rate': rate.fitted_rate,
            'raw_nth_root': rate.raw_nth_root,
            'ratio_estimate': rate.ratio_estimate,
            'dominant_modulus': rate.dominant_modulus,
            'ratio_assertable': rate.ratio_assertable,
            'last_usable_index': rate.last_usable_index,
        }
    except (EquilibriumOrbitError, NotConvergingError, ShortErrorSeriesError) as e:
        logger.warning(f"Rate of convergence not estimated: {e}")
        rate_section = {'reason': str(e)}

    payload = {
        'config': _config_echo(config),
        'trajectory': trajectory_summary(traj),
        'y_bar': y_bar,
        'stability': stability_summary(stability),
        'semicycles': {
            'count': len(decomposition.cycles),
            'max_length': max(decomposition.lengths(), default=0),
            'has_initial_partial': decomposition.has_initial_partial,
            'holds': semicycles.holds,
            'n_judged': semicycles.n_judged,
            'n_unresolved': semicycles.n_unresolved,
            'offending': [{'start_index': c.start_index, 'length': c.length, 'sign': c.sign}
                          for c in semicycles.offending],
        },
        'alternation': alternation,
        'period': period,
        'two_cycle': {'odd_system': two_cycle.odd_system, 'solutions': [list(s) for s in two_cycle.solutions],
                      'outcomes': two_cycle.outcomes},
        'error_identity_max_residual': max_residual,
        'envelope': envelope_section,
        'rate': rate_section,
        'violations': violations,
    }

    fmt = config.output.format or OutputFormat.JSON
    with open_output(config.output.path) as handle:
        if fmt == OutputFormat.CSV:
            write_trajectory_csv(traj, handle)
        else:
            write_json(payload, handle)
    if fmt == OutputFormat.CSV:
        _write_report(config.output.report, payload)
    return _finish(violations)


def run_sweep(config: RunConfig) -> int:
    cells = stability_sweep(config.sweep)
    violations: List[str] = []

    if config.mode == RunMode.SWEEP:
        for cell in cells:
            if cell.p <= 0.5 - GLOBAL_STABILITY_MARGIN and cell.n_converged != cell.trials:
                violations.append(f"p={cell.p}, m={cell.m}: {cell.n_converged}/{cell.trials} converged "
                                  f"({cell.n_diverged} diverged) inside the global stability range")
    else:
        for p, m, fraction in conjecture_evidence(cells):
            logger.info(f"Conjecture evidence p={format_float(p)}, m={m}: {fraction:.1%} converged")

    payload = {
        'config': _config_echo(config),
        'cells': [{'p': c.p, 'm': c.m, 'n_converged': c.n_converged, 'n_diverged': c.n_diverged,
                   'n_undetermined': c.n_undetermined, 'median_err': c.median_err,
                   'median_rate': c.median_rate} for c in cells],
    }
    fmt = config.output.format or OutputFormat.CSV
    with open_output(config.output.path) as handle:
        if fmt == OutputFormat.CSV:
            write_sweep_csv(cells, handle)
        else:
            write_json(payload, handle)
    if fmt == OutputFormat.CSV:
        _write_report(config.output.report, payload)
    return _finish(violations)


def _finish(violations: List[str]) -> int:
    if violations:
        for violation in violations:
            logger.error(f"Property violated: {violation}")
        return EXIT_VIOLATION
    return EXIT_OK


MODE_HANDLERS: Dict[RunMode, Callable[[RunConfig], int]] = {
    RunMode.SIMULATE: run_simulate,
    RunMode.ANALYZE: run_analyze,
    RunMode.ROOTS: run_roots,
    RunMode.ENVELOPE: run_envelope,
    RunMode.SWEEP: run_sweep,
    RunMode.CONJECTURE: run_sweep,
}


def run(config: RunConfig) -> int:
    """
    Execute a validated run and map failures onto exit codes.

    Returns:
        int: 0 success, 1 invalid input, 2 numerical failure, 3 property violation
    """
    try:
        return MODE_HANDLERS[config.mode](config)
    except ParameterError as e:
        logger.error(f"Invalid parameters: {e}")
        return EXIT_INVALID
    except (NonConvergenceError, SingularSystemError) as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except DelayLabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_NUMERICAL
    except OSError as e:
        logger.error(f"Cannot write output: {e}")
        return EXIT_INVALID


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point: parse flags, configure logging, validate and run."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigurationError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_INVALID

    try:
        setup_logging(args.log_level or os.environ.get('LOG_LEVEL', 'INFO'),
                      args.log_dir or os.environ.get('LOG_DIR'), args.color)
    except (ValueError, PermissionError) as e:
        sys.stderr.write(f"delaylab: {e}\n")
        return EXIT_INVALID

    try:
        overrides = args_to_overrides(args)
        config = ConfigurationValidator().load_and_validate_config(args.config, overrides)
    except ConfigurationError as e:
        logger.error(str(e))
        return EXIT_INVALID

    setup_logging(config.logging.level, config.logging.log_dir, config.logging.color)
    logger.info(f"delaylab {__version__}: mode '{config.mode.value}'")
    return run(config)
