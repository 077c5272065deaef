#!/usr/bin/env python3
"""
Spectral solver for the rescaled 1-D wave equation on [-pi, pi]
Builds Fourier spectra from initial data, evaluates the series solution and
its induced current, and exposes the four standing-wave mode pairs
"""

import logging
from dataclasses import dataclass
from typing import Callable, NamedTuple, Tuple, Union

import numpy as np

from errors import InputDomainError
from quadrature import adaptive_integral, periodic_nodes, sample

__version__ = "1.0.0"

logger = logging.getLogger(__name__)

DEFAULT_CUTOFF = 32
COEFFICIENT_TOL = 1e-12
SAMPLING_NODES = 4096

_TRIG = {'cos': np.cos, 'sin': np.sin}
# d/du of cos(u) and sin(u) as (function name, sign)
_DERIVATIVE = {'cos': ('sin', -1.0), 'sin': ('cos', 1.0)}

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class TrigTerm:
    """amplitude * space(kx * x) * time(kt * t), with space/time in {'cos', 'sin'}."""
    amplitude: float
    space: str
    kx: float
    time: str
    kt: float

    def __post_init__(self):
        if self.space not in _TRIG or self.time not in _TRIG:
            raise InputDomainError(f"unknown trig factor: {self.space}/{self.time}")

    def __call__(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        return self.amplitude * _TRIG[self.space](self.kx * x) * _TRIG[self.time](self.kt * t)

    def scaled(self, factor: float) -> 'TrigTerm':
        return TrigTerm(self.amplitude * factor, self.space, self.kx, self.time, self.kt)

    def dx(self) -> 'TrigTerm':
        name, sign = _DERIVATIVE[self.space]
        return TrigTerm(self.amplitude * sign * self.kx, name, self.kx, self.time, self.kt)

    def dt(self) -> 'TrigTerm':
        name, sign = _DERIVATIVE[self.time]
        return TrigTerm(self.amplitude * sign * self.kt, self.space, self.kx, name, self.kt)


def _constant_term(value: float) -> TrigTerm:
    return TrigTerm(float(value), 'cos', 0.0, 'cos', 0.0)


def _nonzero(terms) -> Tuple[TrigTerm, ...]:
    return tuple(term for term in terms if term.amplitude != 0.0)


@dataclass(frozen=True)
class RingFunction:
    """
    Real function of angle x and time t: a finite sum of trigonometric products
    plus terms linear in x and in t.

    Derivatives are exact, so densities and currents built from it can be
    differentiated at retarded times without numerical noise. Evaluation is
    vectorised over broadcastable x and t.
    """
    terms: Tuple[TrigTerm, ...] = ()
    slope_x: float = 0.0
    slope_t: float = 0.0

    @classmethod
    def constant(cls, value: float) -> 'RingFunction':
        return cls(_nonzero((_constant_term(value),)))

    def __call__(self, x: ArrayLike, t: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        out = np.zeros(np.broadcast(x, t).shape)
        for term in self.terms:
            out = out + term(x, t)
        if self.slope_x:
            out = out + self.slope_x * x
        if self.slope_t:
            out = out + self.slope_t * t
        return float(out) if out.ndim == 0 else out

    @property
    def is_zero(self) -> bool:
        return not self.terms and not self.slope_x and not self.slope_t

    def dx(self) -> 'RingFunction':
        terms = [term.dx() for term in self.terms if term.kx != 0.0]
        if self.slope_x:
            terms.append(_constant_term(self.slope_x))
        return RingFunction(_nonzero(terms))

    def dt(self) -> 'RingFunction':
        terms = [term.dt() for term in self.terms if term.kt != 0.0]
        if self.slope_t:
            terms.append(_constant_term(self.slope_t))
        return RingFunction(_nonzero(terms))

    def rescale_time(self, factor: float) -> 'RingFunction':
        """The function (x, t) -> f(x, factor * t)."""
        terms = tuple(TrigTerm(term.amplitude, term.space, term.kx, term.time, term.kt * factor)
                      for term in self.terms)
        return RingFunction(terms, self.slope_x, self.slope_t * factor)

    def __mul__(self, factor: float) -> 'RingFunction':
        factor = float(factor)
        if factor == 0.0:
            return RingFunction()
        return RingFunction(tuple(term.scaled(factor) for term in self.terms),
                            self.slope_x * factor, self.slope_t * factor)

    __rmul__ = __mul__

    def __neg__(self) -> 'RingFunction':
        return self * -1.0

    def __add__(self, other: Union['RingFunction', float]) -> 'RingFunction':
        if not isinstance(other, RingFunction):
            other = RingFunction.constant(float(other))
        return RingFunction(self.terms + other.terms,
                            self.slope_x + other.slope_x, self.slope_t + other.slope_t)

    __radd__ = __add__


class ModePair(NamedTuple):
    """A charge density and the scalar current it induces on the circle."""
    density: RingFunction
    current: RingFunction


@dataclass(frozen=True, eq=False)
class FourierSpectrum:
    """
    Truncated coefficient table of a wave solution.

    a and a_prime are indexed 0..M; b and b_prime are stored with length M+1 and
    a zero in slot 0 so that every array is indexed by the mode number.
    """
    a: np.ndarray
    b: np.ndarray
    a_prime: np.ndarray
    b_prime: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        arrays = [np.array(v, dtype=float) for v in (self.a, self.b, self.a_prime, self.b_prime)]
        if len({len(v) for v in arrays}) != 1 or len(arrays[0]) < 2:
            raise InputDomainError("spectrum arrays must share a length M+1 with M >= 1")
        for name, values in zip(('a', 'b', 'a_prime', 'b_prime'), arrays):
            if not np.all(np.isfinite(values)):
                raise InputDomainError(f"spectrum entries of {name} must be finite")
            object.__setattr__(self, name, values)
        self.b[0] = 0.0
        self.b_prime[0] = 0.0

    @property
    def cutoff(self) -> int:
        return len(self.a) - 1


class WaveSolution:
    """Series solution Psi(x, t) of the rescaled wave equation and its induced current."""

    def __init__(self, spectrum: FourierSpectrum):
        self.spectrum = spectrum
        self.density = self._build_density()
        self.current = self._build_current()

    def _build_density(self) -> RingFunction:
        s = self.spectrum
        terms = [_constant_term(s.a[0])]
        for m in range(1, s.cutoff + 1):
            terms += [
                TrigTerm(2 * s.a[m], 'cos', m, 'cos', m),
                TrigTerm(2 * s.b[m], 'sin', m, 'cos', m),
                TrigTerm(2 * s.a_prime[m] / m, 'cos', m, 'sin', m),
                TrigTerm(2 * s.b_prime[m] / m, 'sin', m, 'sin', m),
            ]
        return RingFunction(_nonzero(terms), slope_t=float(s.a_prime[0]))

    def _build_current(self) -> RingFunction:
        # term-wise integral of -dPsi/dt from -pi to x
        s = self.spectrum
        terms = [_constant_term(-s.a_prime[0] * np.pi)]
        for m in range(1, s.cutoff + 1):
            parity = (-1.0) ** m
            terms += [
                TrigTerm(2 * s.a[m], 'sin', m, 'sin', m),
                TrigTerm(-2 * s.a_prime[m] / m, 'sin', m, 'cos', m),
                TrigTerm(2 * s.b[m] * parity, 'cos', 0, 'sin', m),
                TrigTerm(-2 * s.b[m], 'cos', m, 'sin', m),
                TrigTerm(-2 * s.b_prime[m] / m * parity, 'cos', 0, 'cos', m),
                TrigTerm(2 * s.b_prime[m] / m, 'cos', m, 'cos', m),
            ]
        return RingFunction(_nonzero(terms), slope_x=float(-s.a_prime[0]))

    @property
    def pair(self) -> ModePair:
        return ModePair(self.density, self.current)

    def amplitude_bound(self, t: float) -> float:
        """Upper bound on |Psi(x, t)| over x; finite for every finite t."""
        s = self.spectrum
        m = np.arange(1, s.cutoff + 1)
        series = np.abs(s.a[1:]) + np.abs(s.b[1:]) + (np.abs(s.a_prime[1:]) + np.abs(s.b_prime[1:])) / m
        return float(abs(s.a[0]) + abs(t) * abs(s.a_prime[0]) + 2.0 * series.sum())


def _checked_samples(fn: Callable, name: str, grid: np.ndarray) -> np.ndarray:
    values = sample(fn, grid)
    if not np.all(np.isfinite(values)):
        raise InputDomainError(f"{name} has non-finite values on [-pi, pi]")
    return values


def _is_even(fn: Callable, grid: np.ndarray, values: np.ndarray) -> bool:
    mirrored = sample(fn, -grid)
    scale = max(1.0, float(np.max(np.abs(values))))
    return bool(np.max(np.abs(values - mirrored)) <= 1e-14 * scale)


def _fourier_coefficient(fn: Callable, m: int, kind: str, epsabs: float) -> float:
    scalar = lambda x: float(fn(x))
    if m == 0:
        value = adaptive_integral(scalar, -np.pi, np.pi, epsabs=epsabs, periodic=True)
    else:
        value = adaptive_integral(scalar, -np.pi, np.pi, epsabs=epsabs,
                                  weight=kind, wvar=m, periodic=True)
    return value / (2.0 * np.pi)


def compute_fourier_coefficients(psi0: Callable, psi1: Callable, M: int = DEFAULT_CUTOFF,
                                 epsabs: float = COEFFICIENT_TOL) -> FourierSpectrum:
    """
    Fourier coefficients (1/2pi) * integral of f * {cos, sin}(mx) over [-pi, pi].

    Args:
        psi0: Initial value Psi(x, 0)
        psi1: Initial velocity dPsi/dt(x, 0)
        M: Spectral cutoff
        epsabs: Absolute tolerance of the adaptive quadrature

    Returns:
        FourierSpectrum; sine coefficients are exactly zero for even initial data

    Raises:
        InputDomainError: non-finite samples or M < 1
        ToleranceError: quadrature did not converge
    """
    if int(M) != M or M < 1:
        raise InputDomainError(f"spectral cutoff must be a positive integer, got {M}")
    M = int(M)
    grid = periodic_nodes(SAMPLING_NODES)
    values0 = _checked_samples(psi0, 'psi0', grid)
    values1 = _checked_samples(psi1, 'psi1', grid)
    symmetric = _is_even(psi0, grid, values0) and _is_even(psi1, grid, values1)

    a = np.zeros(M + 1)
    b = np.zeros(M + 1)
    a_prime = np.zeros(M + 1)
    b_prime = np.zeros(M + 1)
    for m in range(M + 1):
        a[m] = _fourier_coefficient(psi0, m, 'cos', epsabs)
        a_prime[m] = _fourier_coefficient(psi1, m, 'cos', epsabs)
        if m > 0 and not symmetric:
            b[m] = _fourier_coefficient(psi0, m, 'sin', epsabs)
            b_prime[m] = _fourier_coefficient(psi1, m, 'sin', epsabs)

    logger.debug(f"Computed spectrum with cutoff {M} (symmetric={symmetric})")
    return FourierSpectrum(a, b, a_prime, b_prime, symmetric=symmetric)


def evaluate_solution(sol: WaveSolution, x: ArrayLike, t: ArrayLike) -> ArrayLike:
    value = sol.density(x, t)
    if not np.all(np.isfinite(value)):
        raise OverflowError(f"series evaluation overflowed at t={t}")
    return value


def induced_current(sol: WaveSolution, x: ArrayLike, t: ArrayLike) -> ArrayLike:
    """J(x, t) = integral from -pi to x of -dPsi/dt, in closed form."""
    return sol.current(x, t)


def mode_pair(i: int, m: int) -> ModePair:
    """
    The i-th fundamental standing-wave pair at mode number m.

    1: cos(mx)cos(mt) / sin(mx)sin(mt)
    2: cos(mx)sin(mt) / -sin(mx)cos(mt)
    3: sin(mx)cos(mt) / -cos(mx)sin(mt)
    4: sin(mx)sin(mt) / cos(mx)cos(mt)
    """
    if i not in (1, 2, 3, 4):
        raise InputDomainError(f"mode index must be in 1..4, got {i}")
    if int(m) != m or m < 1:
        raise InputDomainError(f"mode number must be a positive integer, got {m}")
    table = {
        1: (('cos', 'cos', 1.0), ('sin', 'sin', 1.0)),
        2: (('cos', 'sin', 1.0), ('sin', 'cos', -1.0)),
        3: (('sin', 'cos', 1.0), ('cos', 'sin', -1.0)),
        4: (('sin', 'sin', 1.0), ('cos', 'cos', 1.0)),
    }
    (rs, rt, ra), (js, jt, ja) = table[i]
    return ModePair(RingFunction((TrigTerm(ra, rs, m, rt, m),)),
                    RingFunction((TrigTerm(ja, js, m, jt, m),)))


@dataclass(frozen=True)
class ModeWeights:
    m: int
    a1: float
    a2: float
    a3: float
    a4: float

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise InputDomainError(f"mode number must be a positive integer, got {self.m}")
        if not np.all(np.isfinite(self.weights)):
            raise InputDomainError(f"weights must be finite, got {self.weights}")

    @property
    def weights(self) -> Tuple[float, float, float, float]:
        return (self.a1, self.a2, self.a3, self.a4)


def combined_source(w: ModeWeights) -> ModePair:
    """Pointwise weighted sums of the four fundamental pairs."""
    density, current = RingFunction(), RingFunction()
    for i, weight in enumerate(w.weights, start=1):
        if weight == 0.0:
            continue
        pair = mode_pair(i, w.m)
        density = density + weight * pair.density
        current = current + weight * pair.current
    return ModePair(density, current)


def continuity_residual(pair: ModePair, x: ArrayLike, t: ArrayLike) -> ArrayLike:
    """d(rho)/dt + dJ/dx from closed-form derivatives."""
    return pair.density.dt()(x, t) + pair.current.dx()(x, t)


def total_charge(density: Callable, t: float, epsabs: float = COEFFICIENT_TOL) -> float:
    """Integral of rho(x, t) over [-pi, pi]."""
    return adaptive_integral(lambda x: float(density(x, t)), -np.pi, np.pi,
                             epsabs=epsabs, periodic=True)
