"""
Quadrature and differencing helpers shared by the field and flow modules
Periodic trapezoid, adaptive scipy quadrature with a fixed-rule fallback,
Gauss-Legendre nodes and a fourth-order central difference
"""

import logging
import warnings
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate

from errors import InputDomainError, ToleranceError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
DEFAULT_PERIODIC_NODES = 4096
DEFAULT_DIFF_STEP = 1e-4


def periodic_nodes(nodes: int, start: float = -np.pi, period: float = TWO_PI) -> np.ndarray:
    """Left-endpoint nodes of the periodic trapezoid rule on [start, start + period)."""
    if nodes < 1:
        raise InputDomainError(f"node count must be positive, got {nodes}")
    return start + period * np.arange(nodes) / nodes


def periodic_trapezoid(values: np.ndarray, period: float = TWO_PI, axis: int = -1) -> np.ndarray:
    """
    Periodic trapezoid sum of samples taken at periodic_nodes.

    Exact for trigonometric polynomials of degree below the node count.
    """
    values = np.asarray(values, dtype=float)
    return values.sum(axis=axis) * (period / values.shape[axis])


def periodic_integral(fn: Callable[[np.ndarray], np.ndarray], nodes: int = DEFAULT_PERIODIC_NODES,
                      start: float = -np.pi, period: float = TWO_PI) -> float:
    x = periodic_nodes(nodes, start, period)
    return float(periodic_trapezoid(sample(fn, x), period))


def gauss_legendre(nodes: int, a: float, b: float) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [a, b]."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


def sample(fn: Callable, x: np.ndarray) -> np.ndarray:
    """Evaluate a possibly non-vectorised callable on an array, broadcasting scalars."""
    x = np.asarray(x, dtype=float)
    try:
        out = np.asarray(fn(x), dtype=float)
    except (TypeError, ValueError):
        out = np.asarray([fn(float(v)) for v in x.ravel()], dtype=float).reshape(x.shape)
    if out.shape != x.shape:
        out = np.broadcast_to(out, x.shape).copy()
    return out


def adaptive_integral(fn: Callable[[float], float], a: float, b: float,
                      epsabs: float = 1e-12,
                      weight: Optional[str] = None, wvar: Optional[float] = None,
                      periodic: bool = False,
                      fallback_nodes: int = DEFAULT_PERIODIC_NODES,
                      fallback_tol: float = 1e-10) -> float:
    """
    Integrate fn over [a, b] with scipy's adaptive quad.

    If quad warns or its error estimate exceeds 100 * epsabs, fall back to a
    fixed rule at fallback_nodes and fallback_nodes // 2: the periodic trapezoid
    when periodic is set, Gauss-Legendre otherwise. The fallback is accepted when
    the two resolutions agree to fallback_tol.

    Args:
        fn: Scalar integrand. With weight='cos'/'sin' it is the non-oscillatory factor.
        weight: Optional quad weight ('cos' or 'sin') for oscillatory integrands.
        wvar: Frequency for the weight.
        periodic: Whether [a, b] is one full period of the integrand.

    Raises:
        ToleranceError: Both quad and the fallback failed to converge.
    """
    kwargs = {'epsabs': epsabs, 'epsrel': epsabs, 'limit': 200}
    if weight is not None:
        kwargs.update(weight=weight, wvar=wvar)

    with warnings.catch_warnings():
        warnings.simplefilter('error', integrate.IntegrationWarning)
        try:
            value, abserr = integrate.quad(fn, a, b, **kwargs)
            if np.isfinite(value) and abserr <= 100.0 * epsabs:
                return float(value)
            logger.debug(f"quad error estimate {abserr:.3e} above tolerance on [{a}, {b}]")
        except integrate.IntegrationWarning as e:
            logger.debug(f"quad warned on [{a}, {b}]: {e}")

    if weight == 'cos':
        integrand = lambda x: sample(fn, x) * np.cos(wvar * x)
    elif weight == 'sin':
        integrand = lambda x: sample(fn, x) * np.sin(wvar * x)
    else:
        integrand = lambda x: sample(fn, x)

    def fixed_rule(n: int) -> float:
        if periodic:
            return periodic_integral(integrand, n, a, b - a)
        x, w = gauss_legendre(n, a, b)
        return float(np.dot(integrand(x), w))

    fine = fixed_rule(fallback_nodes)
    coarse = fixed_rule(max(fallback_nodes // 2, 1))
    if not np.isfinite(fine) or abs(fine - coarse) > fallback_tol:
        raise ToleranceError(
            f"quadrature on [{a}, {b}] did not converge (fallback delta {abs(fine - coarse):.3e})")
    logger.info(f"Adaptive quadrature fell back to {fallback_nodes}-node rule on [{a:.4g}, {b:.4g}]")
    return fine


def central_difference(fn: Callable[[float], float], x: float, h: float = DEFAULT_DIFF_STEP) -> float:
    """Fourth-order central difference of a scalar function."""
    return (-fn(x + 2 * h) + 8 * fn(x + h) - 8 * fn(x - h) + fn(x - 2 * h)) / (12.0 * h)
