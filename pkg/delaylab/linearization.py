#!/usr/bin/env python3
"""
delaylab Linearization and Local Stability

Linearizing y_{n+1} = 1 + p * y_{n-m} / y_n**2 about y_bar gives

    z_{n+1} = q0 * z_n + q_m * z_{n-m},     q0 = -2c,  q_m = c,  c = p / y_bar**2

with characteristic polynomial

    P(lam) = lam**(m+1) + 2c * lam**m - c

Local stability follows when every root of P lies inside the unit circle. The
Clark test |q0| + |q_m| = 3c < 1 is sufficient and reduces to p < 3/4; the
spectral radius is reported next to it so the two are never conflated.

Polynomial coefficients are stored highest degree first, matching numpy.polyval
and numpy.poly: ``(1, 2c, 0, ..., 0, -c)``.

Roots come from Durand-Kerner simultaneous iteration. The dominant modulus is
cross-checked by two-vector orthogonal iteration on the companion matrix, which
handles complex-conjugate dominant pairs that plain power iteration cannot. When
the leading moduli nearly tie the iteration stalls; the dense eigenvalue
solver on the same matrix then stands in.

Classes:
    NonConvergenceError: Root finder missed its residual target
    LinearizedCoefficients: q0, q_m of the linearized equation
    CharacteristicPolynomial: Monic polynomial, highest degree first
    RootSet: Roots with residuals and spectral radius
    StabilityClass: LocallyStable / Marginal / Unstable
    StabilityReport: Clark test and spectral radius side by side

Project: delaylab
Version: 1.0.0
License: MIT
"""

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .core import DelayLabError, ParameterError, _require_delay, _require_positive, equilibrium
from .utils import get_logger

logger = get_logger("delaylab.linearization")

# Root finder defaults
ROOT_TOL = 1e-12
ROOT_MAX_ITERATIONS = 1000
ROOT_RESIDUAL_TOL = 1e-10
VIETA_TOL = 1e-8
# Half-width of the Marginal band around spectral radius 1
MARGINAL_TOL = 1e-9
# Orthogonal iteration budget before the cross-check falls back to eigvals
COMPANION_CHECK_ITERATIONS = 5000


class NonConvergenceError(DelayLabError):
    """The root finder (or companion iteration) did not reach its target."""
    pass


# Domain Types

@dataclass(frozen=True, slots=True)
class LinearizedCoefficients:
    """
    Coefficients of z_{n+1} = q0 * z_n + q_m * z_{n-m}; lags 1..m-1 have zero weight.

    Attributes:
        p (float): Normalized parameter
        m (int): Delay
        y_bar (float): Equilibrium the linearization is taken at
        q0 (float): -2p / y_bar**2, always exactly -2 * q_m
        q_m (float): p / y_bar**2, in (0, 1) for every p > 0
    """
    p: float
    m: int
    y_bar: float
    q0: float
    q_m: float

    @property
    def q_mid(self) -> Tuple[float, ...]:
        return (0.0,) * (self.m - 1)

    def as_vector(self) -> np.ndarray:
        """Weights of z_n, z_{n-1}, ..., z_{n-m}."""
        return np.array((self.q0,) + self.q_mid + (self.q_m,), dtype=np.float64)


@dataclass(frozen=True, slots=True)
class CharacteristicPolynomial:
    """
    Monic polynomial with coefficients stored highest degree first.

    Attributes:
        coefficients (Tuple[float, ...]): a_0 = 1, a_1, ..., a_n for
            lam**n + a_1 * lam**(n-1) + ... + a_n
        p (Optional[float]): Source parameter when built from a linearization
        m (Optional[int]): Source delay when built from a linearization

    Raises:
        ParameterError: If the polynomial is constant or not monic
    """
    coefficients: Tuple[float, ...]
    p: Optional[float] = None
    m: Optional[int] = None

    def __post_init__(self) -> None:
        coefficients = tuple(float(a) for a in self.coefficients)
        if len(coefficients) < 2:
            raise ParameterError(f"Polynomial degree must be >= 1, got {coefficients}")
        if coefficients[0] != 1.0:
            raise ParameterError(f"Polynomial must be monic, leading coefficient is {coefficients[0]}")
        object.__setattr__(self, 'coefficients', coefficients)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def scale(self) -> float:
        """max(1, max |a_i|) over the non-leading coefficients."""
        return max(1.0, max(abs(a) for a in self.coefficients[1:]))

    def evaluate(self, z: complex) -> complex:
        """Horner evaluation of P(z)."""
        acc = 0j
        for a in self.coefficients:
            acc = acc * z + a
        return acc


@dataclass(frozen=True, slots=True)
class RootSet:
    """
    Complex roots of a characteristic polynomial.

    Roots are ordered by decreasing modulus, then by argument, so output is
    stable across runs.

    Attributes:
        roots (Tuple[complex, ...]): All n roots
        residuals (Tuple[float, ...]): |P(lam)| for each root
        spectral_radius (float): Largest modulus
        vieta_error (float): Max coefficient error of prod(lam - lam_j) against P
        iterations (int): Durand-Kerner sweeps used
    """
    roots: Tuple[complex, ...]
    residuals: Tuple[float, ...]
    spectral_radius: float
    vieta_error: float
    iterations: int

    def dominant_is_real_simple(self, rel_tol: float = 1e-6) -> bool:
        """
        True when one real root strictly dominates all others in modulus.

        Only then does the successive-error ratio have a limit; a dominant
        complex pair (or a tie) makes it oscillate.
        """
        if not self.roots:
            return False
        lead = self.roots[0]
        radius = abs(lead)
        if abs(lead.imag) > rel_tol * max(1.0, radius):
            return False
        if len(self.roots) == 1:
            return True
        return abs(self.roots[1]) < radius * (1.0 - rel_tol)


class StabilityClass(str, Enum):
    LOCALLY_STABLE = "locally_stable"
    MARGINAL = "marginal"
    UNSTABLE = "unstable"


@dataclass(frozen=True, slots=True)
class StabilityReport:
    """
    Local stability of y_bar.

    Attributes:
        p (float): Normalized parameter
        m (int): Delay
        clark_sum (float): 3p / y_bar**2
        clark_holds (bool): clark_sum < 1 (sufficient for local stability)
        spectral_radius (float): Largest characteristic root modulus
        classification (StabilityClass): From the spectral radius with a Marginal band
        roots (RootSet): Roots the radius came from
    """
    p: float
    m: int
    clark_sum: float
    clark_holds: bool
    spectral_radius: float
    classification: StabilityClass
    roots: RootSet


# Operations

def linearize(p: float, m: int) -> LinearizedCoefficients:
    """
    Linearization of the normalized equation about y_bar.

    Example:
        ```python
        linearize(2.0, 1)   # q0 = -1.0, q_m = 0.5
        ```
    """
    p = _require_positive("p", p)
    _require_delay(m)
    y_bar = equilibrium(p).y_bar
    q_m = p / (y_bar * y_bar)
    return LinearizedCoefficients(p=p, m=m, y_bar=y_bar, q0=-2.0 * q_m, q_m=q_m)


def characteristic_polynomial(coeffs: LinearizedCoefficients) -> CharacteristicPolynomial:
    """
    lam**(m+1) - q0 * lam**m - q_m, i.e. lam**(m+1) + 2c * lam**m - c.

    Example:
        ```python
        characteristic_polynomial(linearize(2.0, 1)).coefficients   # (1.0, 1.0, -0.5)
        ```
    """
    middle = (0.0,) * (coeffs.m - 1)
    return CharacteristicPolynomial(
        coefficients=(1.0, -coeffs.q0) + middle + (-coeffs.q_m,),
        p=coeffs.p,
        m=coeffs.m,
    )


def _root_sort_key(z: complex) -> Tuple[float, float]:
    return -round(abs(z), 12), round(cmath.phase(z), 12)


def find_roots(poly: CharacteristicPolynomial, tol: float = ROOT_TOL,
               max_iterations: int = ROOT_MAX_ITERATIONS) -> RootSet:
    """
    All complex roots by Durand-Kerner (Weierstrass) simultaneous iteration.

    Starting points sit on a circle of radius R = max(1, 1 + max |a_i|), which
    encloses every root, at angles 2*pi*k/n + 0.4 so no start lies on a symmetry
    axis of the polynomial. Iteration stops when every correction is below
    tol * max(1, |z|). The start is fixed, so results are deterministic.

    Args:
        poly (CharacteristicPolynomial): Monic polynomial of degree >= 1
        tol (float): Relative correction tolerance
        max_iterations (int): Sweep budget

    Returns:
        RootSet: Roots ordered by decreasing modulus

    Raises:
        NonConvergenceError: If a residual exceeds 1e-10 * max(1, max |a_i|) or the
            Vieta reconstruction is off by more than 1e-8 after the budget

    Example:
        ```python
        find_roots(CharacteristicPolynomial((1.0, 0.0, -1.0))).roots   # (1+0j, -1+0j) up to rounding
        ```
    """
    coefficients = np.asarray(poly.coefficients, dtype=np.complex128)
    n = poly.degree
    scale = poly.scale

    radius = max(1.0, 1.0 + max(abs(a) for a in poly.coefficients[1:]))
    angles = 2.0 * np.pi * np.arange(n) / n + 0.4
    z = radius * np.exp(1j * angles)

    iterations = 0
    for iterations in range(1, max_iterations + 1):
        converged = True
        # Gauss-Seidel ordering: each update uses the freshest estimates
        for k in range(n):
            others = np.delete(z, k)
            denominator = np.prod(z[k] - others) if n > 1 else 1.0
            if denominator == 0:
                # Coincident estimates: nudge apart deterministically
                z[k] += tol * max(1.0, abs(z[k])) * (1 + 1j)
                converged = False
                continue
            correction = np.polyval(coefficients, z[k]) / denominator
            z[k] -= correction
            if abs(correction) > tol * max(1.0, abs(z[k])):
                converged = False
        if converged:
            break
    else:
        logger.debug(f"Durand-Kerner used its full budget of {max_iterations} sweeps; checking residuals")

    roots = tuple(sorted((complex(r) for r in z), key=_root_sort_key))
    residuals = tuple(float(abs(poly.evaluate(r))) for r in roots)
    worst = max(residuals)
    if worst > ROOT_RESIDUAL_TOL * scale:
        raise NonConvergenceError(
            f"Root residual {worst:.3e} exceeds {ROOT_RESIDUAL_TOL * scale:.3e} "
            f"after {iterations} iterations (degree {n})",
            details={'coefficients': list(poly.coefficients), 'iterations': iterations, 'residual': worst}
        )

    reconstructed = np.poly(np.asarray(roots))
    vieta_error = float(np.max(np.abs(reconstructed - coefficients)))
    if vieta_error > VIETA_TOL * scale:
        raise NonConvergenceError(
            f"Vieta reconstruction error {vieta_error:.3e} exceeds {VIETA_TOL * scale:.3e}",
            details={'coefficients': list(poly.coefficients), 'vieta_error': vieta_error}
        )

    spectral_radius = max(abs(r) for r in roots)
    logger.debug(f"Found {n} roots in {iterations} iterations, spectral radius {spectral_radius:.12g}")
    return RootSet(roots=roots, residuals=residuals, spectral_radius=spectral_radius,
                   vieta_error=vieta_error, iterations=iterations)


def clark_condition(p: float) -> Tuple[float, bool]:
    """
    Clark sufficient test |q0| + |q_m| = 3p / y_bar**2 < 1.

    Since y_bar**2 = y_bar + p, this holds exactly when p < 3/4.

    Returns:
        Tuple[float, bool]: (clark_sum, clark_sum < 1)
    """
    coeffs = linearize(p, 1)
    clark_sum = abs(coeffs.q0) + abs(coeffs.q_m)
    return clark_sum, clark_sum < 1.0


def classify_stability(p: float, m: int, tol: float = MARGINAL_TOL) -> StabilityReport:
    """
    Classify y_bar as LocallyStable, Marginal or Unstable from the spectral radius.

    LocallyStable below 1 - tol, Unstable above 1 + tol, Marginal in between. The
    Clark fields are computed independently of the roots.

    Raises:
        NonConvergenceError: Propagated from find_roots
    """
    clark_sum, clark_holds = clark_condition(p)
    roots = find_roots(characteristic_polynomial(linearize(p, m)))
    radius = roots.spectral_radius

    if radius < 1.0 - tol:
        classification = StabilityClass.LOCALLY_STABLE
    elif radius > 1.0 + tol:
        classification = StabilityClass.UNSTABLE
    else:
        classification = StabilityClass.MARGINAL

    if clark_holds and classification != StabilityClass.LOCALLY_STABLE:
        logger.warning(f"Clark test holds for p={p}, m={m} but spectral radius is {radius:.12g}")

    return StabilityReport(p=p, m=m, clark_sum=clark_sum, clark_holds=clark_holds,
                           spectral_radius=radius, classification=classification, roots=roots)


def quadratic_roots(p: float) -> Tuple[float, float]:
    """
    Closed-form roots of lam**2 + 2c * lam - c for m = 1: -c + sqrt(c**2 + c), -c - sqrt(c**2 + c).

    Both are real; the second has the larger modulus and is the dominant root.
    """
    c = linearize(p, 1).q_m
    s = math.sqrt(c * c + c)
    return -c + s, -c - s


def identity_residual(p: float) -> float:
    """
    |p / y_bar**2 - (2p + 1 - sqrt(4p + 1)) / (2p)|.

    The right side is evaluated as (2p - (sqrt(1 + 4p) - 1)) / (2p) with
    sqrt(1 + 4p) - 1 computed through log1p/expm1, otherwise the subtraction
    loses every significant digit for small p.
    """
    p = _require_positive("p", p)
    y_bar = equilibrium(p).y_bar
    sqrt_minus_one = math.expm1(0.5 * math.log1p(4.0 * p))
    rhs = (2.0 * p - sqrt_minus_one) / (2.0 * p)
    return abs(p / (y_bar * y_bar) - rhs)


def flip_root(p: float, m: int) -> float:
    """
    P(-1) for the characteristic polynomial of (p, m).

    For odd m this is 1 - 3c, which vanishes exactly at p = 3/4: lam = -1 is then a
    root and the Clark boundary is sharp. For even m it is c - 1 < 0, so -1 is
    never a root.
    """
    return float(characteristic_polynomial(linearize(p, m)).evaluate(-1.0).real)


def companion_matrix(poly: CharacteristicPolynomial) -> np.ndarray:
    """
    Frobenius companion matrix whose eigenvalues are the roots of ``poly``.

    First row holds -a_1 ... -a_n, ones on the subdiagonal.
    """
    n = poly.degree
    matrix = np.zeros((n, n), dtype=np.float64)
    matrix[0, :] = -np.asarray(poly.coefficients[1:], dtype=np.float64)
    if n > 1:
        matrix[np.arange(1, n), np.arange(0, n - 1)] = 1.0
    return matrix


def companion_spectral_radius(poly: CharacteristicPolynomial, seed: int = 0,
                              max_iterations: int = 50000, steps_per_qr: int = 4,
                              residual_tol: float = 1e-11) -> float:
    """
    Dominant eigenvalue modulus of the companion matrix by two-vector orthogonal iteration.

    A two-column block is multiplied by the matrix ``steps_per_qr`` times, then
    re-orthonormalized with QR. The 2x2 projection Q^T C Q yields two Ritz values;
    a Ritz value counts once its residual ||C v - theta v|| is below
    residual_tol * max(1, ||C||). The estimate is the largest converged modulus.
    Two vectors suffice whether the dominant root is real or a conjugate pair.

    Args:
        poly (CharacteristicPolynomial): Polynomial of degree >= 1
        seed (int): Seed of the random starting block
        max_iterations (int): QR step budget
        steps_per_qr (int): Matrix products between orthonormalizations
        residual_tol (float): Relative Ritz residual treated as converged

    Returns:
        float: Estimated spectral radius

    Raises:
        NonConvergenceError: If no Ritz pair converges within the budget
    """
    matrix = companion_matrix(poly)
    n = matrix.shape[0]
    if n == 1:
        return float(abs(matrix[0, 0]))

    threshold = residual_tol * max(1.0, float(np.linalg.norm(matrix)))
    rng = np.random.default_rng(seed)
    block, _ = np.linalg.qr(rng.standard_normal((n, 2)))

    for iteration in range(1, max_iterations + 1):
        for _ in range(steps_per_qr):
            block = matrix @ block
        block, _ = np.linalg.qr(block)

        projected = block.T @ matrix @ block
        ritz_values, ritz_vectors = np.linalg.eig(projected)
        converged = []
        for k in range(2):
            vector = block @ ritz_vectors[:, k]
            residual = np.linalg.norm(matrix @ vector - ritz_values[k] * vector) / np.linalg.norm(vector)
            if residual <= threshold:
                converged.append(abs(ritz_values[k]))
        if converged:
            logger.debug(f"Companion iteration converged after {iteration} QR steps")
            return float(max(converged))

    raise NonConvergenceError(
        f"Companion iteration did not converge in {max_iterations} steps",
        details={'coefficients': list(poly.coefficients)}
    )


def companion_eigvals_radius(poly: CharacteristicPolynomial) -> float:
    """
    Spectral radius from the full eigenvalue decomposition of the companion matrix.

    Unlike the orthogonal iteration this does not slow down when several roots
    share nearly the same modulus, as all m+1 roots do for small p.
    """
    return float(np.max(np.abs(np.linalg.eigvals(companion_matrix(poly)))))


def companion_cross_check(poly: CharacteristicPolynomial,
                          max_iterations: int = COMPANION_CHECK_ITERATIONS) -> Tuple[float, str]:
    """
    Companion-matrix spectral radius for comparison with the root finder.

    Orthogonal iteration is tried first; when it stalls on nearly tied moduli the
    dense eigenvalue solver answers instead.

    Returns:
        Tuple[float, str]: The radius and ``orthogonal_iteration`` or ``eigvals``
    """
    try:
        return companion_spectral_radius(poly, max_iterations=max_iterations), "orthogonal_iteration"
    except NonConvergenceError as e:
        logger.warning(f"{e}; using the dense eigenvalue solver for the cross-check")
        return companion_eigvals_radius(poly), "eigvals"


def spectral_radius(p: float, m: int) -> float:
    """Spectral radius of the characteristic polynomial of (p, m)."""
    return find_roots(characteristic_polynomial(linearize(p, m))).spectral_radius
