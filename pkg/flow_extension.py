#!/usr/bin/env python3
"""
Continuity-preserving extensions of ring sources
Tangential current on the circle, bump-function thickening to an annular
shell, circular flows and radial reconstruction of planar flows
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from errors import DegeneratePointError, InputDomainError, SingularityError
from quadrature import (DEFAULT_DIFF_STEP, adaptive_integral, central_difference,
                        periodic_nodes, sample)
from spectral_wave import ArrayLike, ModePair, RingFunction

__version__ = "1.0.0"

logger = logging.getLogger(__name__)

RADIAL_QUAD_TOL = 1e-10
BUMP_KINDS = ('compact', 'analytic')


@dataclass(frozen=True)
class RingSource:
    """Charge density and scalar current on the unit circle."""
    rho: RingFunction
    j_scalar: RingFunction
    m_period: float

    @classmethod
    def from_pair(cls, pair: ModePair, period: float) -> 'RingSource':
        return cls(pair.density, pair.current, period)

    @property
    def pair(self) -> ModePair:
        return ModePair(self.rho, self.j_scalar)

    def continuity_residual(self, theta: float, t: float, h: float = DEFAULT_DIFF_STEP) -> float:
        """d(rho)/dt + dJ/d(theta) by central differences."""
        drho = central_difference(lambda s: self.rho(theta, s), t, h)
        dj = central_difference(lambda s: self.j_scalar(s, t), theta, h)
        return drho + dj


def ring_current_vector(src: RingSource, theta: ArrayLike, t: ArrayLike) -> np.ndarray:
    """K(1, theta, t) = J(theta, t) * (-sin theta, cos theta, 0)."""
    theta = np.asarray(theta, dtype=float)
    j = np.asarray(src.j_scalar(theta, t), dtype=float)
    return np.stack([-j * np.sin(theta), j * np.cos(theta), np.zeros_like(j)], axis=-1)


def planar_current(src: RingSource, x: ArrayLike, y: ArrayLike, t: ArrayLike) -> np.ndarray:
    """
    Planar extension r * J(theta, t) * theta_hat of the ring current.

    Equal to K on the unit circle. The factor r keeps the divergence equal to
    dJ/d(theta) at every radius, so the thickened source stays charge conserving.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    j = np.asarray(src.j_scalar(np.arctan2(y, x), t), dtype=float)
    return np.stack([-j * y, j * x], axis=-1)


def polar_divergence(radial: Callable[[float, float], float], angular: Callable[[float, float], float],
                     r: float, theta: float, h: float = DEFAULT_DIFF_STEP) -> float:
    """(1/r) d(r F_r)/dr + (1/r) dF_theta/d(theta) by central differences."""
    d_radial = central_difference(lambda s: s * radial(s, theta), r, h)
    d_angular = central_difference(lambda s: angular(r, s), theta, h)
    return (d_radial + d_angular) / r


def planar_divergence(field: Callable[[float, float], np.ndarray], r: float, theta: float,
                      h: float = DEFAULT_DIFF_STEP) -> float:
    """Divergence of a Cartesian planar field, differenced in polar coordinates."""
    def radial(s, th):
        fx, fy = field(s * np.cos(th), s * np.sin(th))[:2]
        return fx * np.cos(th) + fy * np.sin(th)

    def angular(s, th):
        fx, fy = field(s * np.cos(th), s * np.sin(th))[:2]
        return -fx * np.sin(th) + fy * np.cos(th)

    return polar_divergence(radial, angular, r, theta, h)


def surface_divergence(src: RingSource, theta: float, t: float, h: float = DEFAULT_DIFF_STEP) -> float:
    """Planar divergence of the extended tangential current at radius 1; equals dJ/d(theta)."""
    return planar_divergence(lambda x, y: planar_current(src, x, y, t), 1.0, theta, h)


@dataclass(frozen=True)
class BumpProfile:
    """
    Radial and axial bump factors, normalised to 1 at r = 1 and z = 0.

    compact:  exp(1 - 1/(1 - s^2)) for |s| < 1, zero otherwise
    analytic: exp(-s^2), undefined on the axis r = 0
    with s = (r - 1)/epsilon radially and s = z/epsilon axially.
    """
    epsilon: float
    kind: str = 'compact'

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise InputDomainError(f"bump epsilon must lie in (0, 1), got {self.epsilon}")
        if self.kind not in BUMP_KINDS:
            raise InputDomainError(f"unknown bump kind '{self.kind}', expected one of {BUMP_KINDS}")

    def _profile(self, s: np.ndarray) -> np.ndarray:
        if self.kind == 'analytic':
            return np.exp(-s * s)
        inside = np.abs(s) < 1.0
        safe = np.where(inside, s, 0.0)
        return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe * safe)), 0.0)

    def radial(self, r: ArrayLike) -> ArrayLike:
        value = self._profile((np.asarray(r, dtype=float) - 1.0) / self.epsilon)
        return float(value) if np.ndim(value) == 0 else value

    def axial(self, z: ArrayLike) -> ArrayLike:
        value = self._profile(np.asarray(z, dtype=float) / self.epsilon)
        return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class VolumetricSource:
    """Bump-thickened ring source on Ann(1, eps) x (-eps, eps)."""
    ring: RingSource
    profile: BumpProfile

    def _envelope(self, x: float, y: float, z: float) -> float:
        r = np.hypot(x, y)
        if r == 0.0:
            if self.profile.kind == 'analytic':
                raise SingularityError("analytic bump extension is undefined on the axis r = 0")
            return 0.0
        return self.profile.radial(r) * self.profile.axial(z)

    def density(self, x: float, y: float, z: float, t: float) -> float:
        envelope = self._envelope(x, y, z)
        if envelope == 0.0:
            return 0.0
        return envelope * self.ring.rho(np.arctan2(y, x), t)

    def current(self, x: float, y: float, z: float, t: float) -> np.ndarray:
        envelope = self._envelope(x, y, z)
        if envelope == 0.0:
            return np.zeros(3)
        jx, jy = planar_current(self.ring, x, y, t)
        return np.array([envelope * jx, envelope * jy, 0.0])

    def divergence(self, x: float, y: float, z: float, t: float, h: float = DEFAULT_DIFF_STEP) -> float:
        """Cylindrical-coordinate central-difference divergence of the current."""
        r, theta = np.hypot(x, y), np.arctan2(y, x)

        def at(s, th, zz):
            return self.current(s * np.cos(th), s * np.sin(th), zz, t)

        def radial(s, th):
            v = at(s, th, z)
            return v[0] * np.cos(th) + v[1] * np.sin(th)

        def angular(s, th):
            v = at(s, th, z)
            return -v[0] * np.sin(th) + v[1] * np.cos(th)

        d_axial = central_difference(lambda zz: at(r, theta, zz)[2], z, h)
        return polar_divergence(radial, angular, r, theta, h) + d_axial

    def continuity_residual(self, x: float, y: float, z: float, t: float,
                            h: float = DEFAULT_DIFF_STEP) -> float:
        drho = central_difference(lambda s: self.density(x, y, z, s), t, h)
        return drho + self.divergence(x, y, z, t, h)

    def temperature(self, x: float, y: float, z: float, t: float) -> float:
        """Local |J|/|rho| inside the shell; on the unit circle it is the ring temperature."""
        rho = self.density(x, y, z, t)
        if rho == 0.0:
            raise DegeneratePointError(f"density vanishes at ({x}, {y}, {z}, {t})")
        return float(np.linalg.norm(self.current(x, y, z, t)) / abs(rho))


def bump_extend(src: RingSource, profile: BumpProfile) -> VolumetricSource:
    return VolumetricSource(src, profile)


def circular_flow_divergence(w: Callable[[float], float], r: float, theta: float,
                             angular_weight: Optional[Callable[[float], float]] = None,
                             h: float = DEFAULT_DIFF_STEP) -> float:
    """
    Divergence of the circular flow w(r) * q(theta) * (-sin theta, cos theta).

    With q = 1 (the default) this vanishes for any smooth w. A theta-dependent q
    leaves (1/r) * w(r) * q'(theta).
    """
    if r <= 0.0:
        raise InputDomainError(f"circular flow needs r > 0, got {r}")
    weight = angular_weight or (lambda th: 1.0)

    def field(x, y):
        s, th = np.hypot(x, y), np.arctan2(y, x)
        speed = w(s) * weight(th)
        return np.array([-speed * np.sin(th), speed * np.cos(th)])

    return planar_divergence(field, r, theta, h)


def circular_extension_exists(density_on_circle: Callable[[np.ndarray], np.ndarray],
                              samples: int = 64, tol: float = 1e-12) -> bool:
    """
    Whether a time-independent density on S^1 admits a circular,
    continuity-preserving extension: only when it is constant in theta.
    """
    values = sample(density_on_circle, periodic_nodes(samples))
    scale = max(1.0, float(np.max(np.abs(values))))
    return bool(np.ptp(values) <= tol * scale)


def _theta_derivative(w2: Callable[[float, float], float],
                      dw2_dtheta: Optional[Callable[[float, float], float]], h: float):
    if dw2_dtheta is not None:
        return dw2_dtheta
    return lambda r, th: central_difference(lambda s: w2(r, s), th, h)


def reconstruct_radial(w2: Callable[[float, float], float], boundary_g: Optional[Callable[[float], float]],
                       epsilon: float, r0: float, theta0: float,
                       dw2_dtheta: Optional[Callable[[float, float], float]] = None,
                       delta: Optional[float] = None,
                       h: float = DEFAULT_DIFF_STEP) -> float:
    """
    Radial component w1(r0, theta0) of a divergence-free planar flow with
    angular component w2.

    Annulus (0 < epsilon < 1):
        w1 = [(1 - eps) g(theta0) + int_{1-eps}^{r0} -dw2/d(theta) dr] / r0
    Disc (epsilon = 1): the same formula with a zero inner radius; at r0 = 0
    the L'Hopital limit -dw2/d(theta)(0, theta0) is returned.

    Args:
        w2: Angular component w2(r, theta)
        boundary_g: Radial component on the inner circle r = 1 - eps (unused for the disc)
        dw2_dtheta: Optional analytic theta-derivative of w2
        delta: Optional outer half-width; r0 must stay below 1 + delta

    Raises:
        InputDomainError: epsilon or r0 outside the domain
    """
    if not 0.0 < epsilon <= 1.0:
        raise InputDomainError(f"epsilon must lie in (0, 1], got {epsilon}")
    inner = 1.0 - epsilon
    disc = epsilon == 1.0
    if disc:
        if r0 < 0.0:
            raise InputDomainError(f"disc reconstruction needs r0 >= 0, got {r0}")
    elif r0 <= inner:
        raise InputDomainError(f"annulus reconstruction needs r0 > {inner}, got {r0}")
    if delta is not None and r0 >= 1.0 + delta:
        raise InputDomainError(f"r0 = {r0} lies beyond the outer radius {1.0 + delta}")
    if not disc and boundary_g is None:
        raise InputDomainError("annulus reconstruction needs a boundary condition g")

    derivative = _theta_derivative(w2, dw2_dtheta, h)
    if disc and r0 == 0.0:
        return -derivative(0.0, theta0)

    flux = adaptive_integral(lambda r: -derivative(r, theta0), inner, r0, epsabs=RADIAL_QUAD_TOL)
    boundary = inner * boundary_g(theta0) if inner > 0.0 else 0.0
    return (boundary + flux) / r0


@dataclass(frozen=True)
class AnnulusFlow:
    """Planar flow w1 * r_hat + w2 * theta_hat on 1 - eps < r < 1 + delta."""
    w1: Callable[[float, float], float]
    w2: Callable[[float, float], float]
    inner: float
    outer: float

    def vector(self, r: float, theta: float) -> np.ndarray:
        w1, w2 = self.w1(r, theta), self.w2(r, theta)
        return np.array([w1 * np.cos(theta) - w2 * np.sin(theta),
                         w1 * np.sin(theta) + w2 * np.cos(theta)])

    def divergence(self, r: float, theta: float, h: float = DEFAULT_DIFF_STEP) -> float:
        if not self.inner < r < self.outer:
            raise InputDomainError(f"r = {r} outside the annulus ({self.inner}, {self.outer})")
        return polar_divergence(self.w1, self.w2, r, theta, h)


def reconstruct_flow(w2: Callable[[float, float], float], boundary_g: Optional[Callable[[float], float]],
                     epsilon: float, delta: float,
                     dw2_dtheta: Optional[Callable[[float, float], float]] = None) -> AnnulusFlow:
    """Divergence-free flow on Ann(1, eps, delta) with w1 from reconstruct_radial."""
    if delta <= 0.0:
        raise InputDomainError(f"delta must be positive, got {delta}")

    def w1(r, theta):
        return reconstruct_radial(w2, boundary_g, epsilon, r, theta,
                                  dw2_dtheta=dw2_dtheta, delta=delta)

    return AnnulusFlow(w1, w2, 1.0 - epsilon, 1.0 + delta)
