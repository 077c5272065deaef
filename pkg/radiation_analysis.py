#!/usr/bin/env python3
"""
Poynting-flux radiation analysis of ring sources
Sphere fluxes, instantaneous and cycle-integrated power, admissible weights,
decay fits, velocity rescaling, constant backgrounds and thermal equilibrium
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import qmc

from errors import DegeneratePointError, InconclusiveError, InputDomainError
from jefimenko_fields import (BASIS_NAMES, DEFAULT_C, FarFieldEvaluator, basis_batch,
                              direct_fields_batch, series_coefficients)
from quadrature import DEFAULT_PERIODIC_NODES, gauss_legendre, periodic_nodes
from spectral_wave import ModePair, ModeWeights, RingFunction, combined_source

__version__ = "1.0.0"

logger = logging.getLogger(__name__)

DEFAULT_PHI_NODES = 64
DEFAULT_SPHERE_THETA_NODES = 128
DEFAULT_TIME_NODES = 128
MIN_SPHERE_NODES = 16
MIN_TIME_NODES = 32
POWER_MODES = ('direct', 'far_field')
DIRECT_PARTS = tuple(f"{e}x{b}" for e in ('E1', 'E2', 'E3') for b in ('B1', 'B2'))
FAR_FIELD_PARTS = ('E2xB2', 'E3xB2')
ZERO_FLUX_PAIRS = (('Gamma', 'GammaP'), ('GammaPPP', 'GammaPPPP'), ('Gamma', 'DeltaP'),
                   ('Delta', 'GammaP'), ('Delta', 'DeltaP'))


@dataclass(frozen=True)
class FluxRecord:
    radius: float
    time: float
    P: float
    parts: Mapping[str, float] = field(default_factory=dict)
    mode: str = 'far_field'


@dataclass(frozen=True)
class CycleRecord:
    radius: float
    t0: float
    period: float
    integral: float
    parts: Mapping[str, float] = field(default_factory=dict)
    weights: Tuple[float, ...] = ()


@dataclass(frozen=True)
class TemperatureField:
    """T(theta, t) on the unit circle."""
    value: Callable[[float, float], float]

    def __call__(self, theta: float, t: float) -> float:
        return self.value(theta, t)


# --- sphere quadrature ------------------------------------------------------

def sphere_nodes(r: float, nodes_phi: int = DEFAULT_PHI_NODES,
                 nodes_theta: int = DEFAULT_SPHERE_THETA_NODES) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes on S(r) and their weighted area vectors

        dS = r^2 (sin^2 phi cos theta, sin^2 phi sin theta, sin phi cos phi) dphi dtheta

    with Gauss-Legendre in phi and the periodic trapezoid in theta.
    """
    if r <= 1.0:
        raise InputDomainError(f"flux sphere must enclose the ring, got r = {r}")
    if nodes_phi < MIN_SPHERE_NODES or nodes_theta < MIN_SPHERE_NODES:
        raise InputDomainError(f"sphere quadrature needs at least {MIN_SPHERE_NODES} nodes per axis")
    phi, w_phi = gauss_legendre(nodes_phi, 0.0, np.pi)
    theta = periodic_nodes(nodes_theta)
    w_theta = 2.0 * np.pi / nodes_theta
    P, T = np.meshgrid(phi, theta, indexing='ij')
    W = np.outer(w_phi, np.full(nodes_theta, w_theta))
    sin_p, cos_p = np.sin(P), np.cos(P)
    positions = r * np.stack([sin_p * np.cos(T), sin_p * np.sin(T), cos_p], axis=-1).reshape(-1, 3)
    area = (r * r * W)[..., None] * np.stack(
        [sin_p * sin_p * np.cos(T), sin_p * sin_p * np.sin(T), sin_p * cos_p], axis=-1)
    return positions, area.reshape(-1, 3)


def _flux(values: np.ndarray, area: np.ndarray) -> float:
    return float(np.sum(values * area))


def sphere_flux(vector_field: Callable[[np.ndarray], np.ndarray], r: float,
                nodes_phi: int = DEFAULT_PHI_NODES,
                nodes_theta: int = DEFAULT_SPHERE_THETA_NODES) -> float:
    """
    Flux of a vectorised field (positions of shape (N, 3) -> vectors of shape (N, 3))
    through the sphere of radius r.
    """
    positions, area = sphere_nodes(r, nodes_phi, nodes_theta)
    values = np.asarray(vector_field(positions), dtype=float)
    return _flux(np.broadcast_to(values, positions.shape), area)


def basis_cross_flux(m: int, r: float, first: str, second: str, c: float = DEFAULT_C,
                     theta_nodes: int = DEFAULT_PERIODIC_NODES,
                     nodes_phi: int = DEFAULT_PHI_NODES,
                     nodes_theta: int = DEFAULT_SPHERE_THETA_NODES) -> Tuple[float, float]:
    """
    Sphere flux of the cross product of two named far-field basis vectors.

    Returns:
        (flux, max |first x second| over the sphere nodes)
    """
    positions, area = sphere_nodes(r, nodes_phi, nodes_theta)
    basis = basis_batch(m, positions, c, theta_nodes)
    cross = np.cross(basis[BASIS_NAMES[first]], basis[BASIS_NAMES[second]])
    return _flux(cross, area), float(np.max(np.linalg.norm(cross, axis=1)))


def zero_flux_residuals(m: int, r: float, c: float = DEFAULT_C,
                        theta_nodes: int = DEFAULT_PERIODIC_NODES,
                        nodes_phi: int = DEFAULT_PHI_NODES,
                        nodes_theta: int = DEFAULT_SPHERE_THETA_NODES) -> Dict[str, Tuple[float, float]]:
    """basis_cross_flux for every pair in ZERO_FLUX_PAIRS, sharing one basis evaluation."""
    positions, area = sphere_nodes(r, nodes_phi, nodes_theta)
    basis = basis_batch(m, positions, c, theta_nodes)
    out = {}
    for first, second in ZERO_FLUX_PAIRS:
        cross = np.cross(basis[BASIS_NAMES[first]], basis[BASIS_NAMES[second]])
        out[f"{first}x{second}"] = (_flux(cross, area), float(np.max(np.linalg.norm(cross, axis=1))))
    return out


# --- power -----------------------------------------------------------------

def _source_for(w: ModeWeights, source: Optional[ModePair], wave_speed: float) -> ModePair:
    if source is not None:
        return ModePair(*source)
    if wave_speed != 1.0:
        return rescaled_source(w, wave_speed)
    return combined_source(w)


class PowerIntegrator:
    """
    Poynting flux of one source through one sphere at arbitrary times.

    Sphere nodes, and in far_field mode the theta-integrals, are computed once.
    """

    def __init__(self, source: ModePair, r: float, c: float = DEFAULT_C, mode: str = 'far_field',
                 theta_nodes: int = DEFAULT_PERIODIC_NODES, nodes_phi: int = DEFAULT_PHI_NODES,
                 nodes_theta: int = DEFAULT_SPHERE_THETA_NODES):
        if mode not in POWER_MODES:
            raise InputDomainError(f"unknown power mode '{mode}', expected one of {POWER_MODES}")
        if r <= 1.0:
            raise InputDomainError(f"power needs r > 1, got {r}")
        self.source = source
        self.r = r
        self.c = c
        self.mode = mode
        self.theta_nodes = theta_nodes
        self.positions, self.area = sphere_nodes(r, nodes_phi, nodes_theta)
        self.evaluator = None
        if mode == 'far_field':
            self.evaluator = FarFieldEvaluator(source, self.positions, c, theta_nodes)

    def record(self, t: float) -> FluxRecord:
        if self.mode == 'far_field':
            e2, e3, b2 = self.evaluator.fields(t)
            parts = {'E2xB2': _flux(np.cross(e2, b2), self.area),
                     'E3xB2': _flux(np.cross(e3, b2), self.area)}
            total = _flux(np.cross(e2 + e3, b2), self.area)
        else:
            e1, e2, e3, b1, b2 = direct_fields_batch(self.source, self.positions, t, self.c,
                                                     self.theta_nodes)
            electric = {'E1': e1, 'E2': e2, 'E3': e3}
            magnetic = {'B1': b1, 'B2': b2}
            parts = {f"{e}x{b}": _flux(np.cross(electric[e], magnetic[b]), self.area)
                     for e in electric for b in magnetic}
            total = _flux(np.cross(e1 + e2 + e3, b1 + b2), self.area)
        return FluxRecord(self.r, t, total, parts, self.mode)


def instantaneous_power(w: ModeWeights, r: float, t: float, c: float = DEFAULT_C,
                        mode: str = 'far_field', source: Optional[ModePair] = None,
                        theta_nodes: int = DEFAULT_PERIODIC_NODES,
                        nodes_phi: int = DEFAULT_PHI_NODES,
                        nodes_theta: int = DEFAULT_SPHERE_THETA_NODES) -> FluxRecord:
    """
    Instantaneous flux of E x B through S(r).

    direct mode uses the full causal fields and stores all six term pairs;
    far_field mode assembles only E2 x B2 and E3 x B2 from the series.

    Args:
        w: Mode number and combination weights
        source: Optional explicit source pair overriding combined_source(w)
    """
    integrator = PowerIntegrator(_source_for(w, source, 1.0), r, c, mode,
                                 theta_nodes, nodes_phi, nodes_theta)
    return integrator.record(t)


def cycle_power(w: ModeWeights, r: float, t0: float = 0.0, c: float = DEFAULT_C,
                time_nodes: int = DEFAULT_TIME_NODES, mode: str = 'far_field',
                source: Optional[ModePair] = None, wave_speed: float = 1.0,
                theta_nodes: int = DEFAULT_PERIODIC_NODES,
                nodes_phi: int = DEFAULT_PHI_NODES,
                nodes_theta: int = DEFAULT_SPHERE_THETA_NODES) -> CycleRecord:
    """
    Integral of P(r, t) over one cycle [t0, t0 + pi/(m * wave_speed)].

    wave_speed = 1 is the rescaled wave equation; other values use the
    velocity-rescaled source of rescaled_source and its shorter period.
    """
    if time_nodes < MIN_TIME_NODES:
        raise InputDomainError(f"cycle quadrature needs at least {MIN_TIME_NODES} nodes, got {time_nodes}")
    if wave_speed <= 0.0:
        raise InputDomainError(f"wave speed must be positive, got {wave_speed}")
    period = np.pi / (w.m * wave_speed)
    integrator = PowerIntegrator(_source_for(w, source, wave_speed), r, c, mode,
                                 theta_nodes, nodes_phi, nodes_theta)
    dt = period / time_nodes
    integral = 0.0
    parts: Dict[str, float] = {}
    for k in range(time_nodes):
        record = integrator.record(t0 + k * dt)
        integral += record.P * dt
        for name, value in record.parts.items():
            parts[name] = parts.get(name, 0.0) + value * dt
    logger.debug(f"Cycle power at r={r}: {integral:.6e} over period {period:.6f}")
    return CycleRecord(float(r), float(t0), float(period), float(integral), parts, w.weights)


def cancellation_reduction(w: ModeWeights, r: float, c: float = DEFAULT_C,
                           theta_nodes: int = DEFAULT_PERIODIC_NODES,
                           nodes_phi: int = DEFAULT_PHI_NODES,
                           nodes_theta: int = DEFAULT_SPHERE_THETA_NODES) -> float:
    """
    Cycle integral of the far-field power from the time-averaged series.

        -beta gamma (m pi / 2) [ (a1^2 + a2^2) F_GG
                                 - (a1 a3 + a2 a4) (F_GD' + F_DG')
                                 + (a3^2 + a4^2) F_DD ]

    where F_XY is the sphere flux of X x Y and (G, G', D, D') are
    (Gamma'', Gamma', Delta'', Delta') for even m and
    (Gamma''''', Gamma'''', Delta''''', Delta'''') for odd m. For admissible
    weights the cross term drops and this is -pi beta gamma m (a1^2 F_GG + a3^2 F_DD).
    """
    positions, area = sphere_nodes(r, nodes_phi, nodes_theta)
    basis = basis_batch(w.m, positions, c, theta_nodes)
    names = (('GammaPP', 'GammaP', 'DeltaPP', 'DeltaP') if w.m % 2 == 0
             else ('GammaPPPPP', 'GammaPPPP', 'DeltaPPPPP', 'DeltaPPPP'))
    g, g_mag, d, d_mag = (basis[BASIS_NAMES[name]] for name in names)
    f_gg = _flux(np.cross(g, g_mag), area)
    f_dd = _flux(np.cross(d, d_mag), area)
    f_cross = _flux(np.cross(g, d_mag), area) + _flux(np.cross(d, g_mag), area)
    a1, a2, a3, a4 = w.weights
    _, beta, gamma = series_coefficients(r, c)
    bracket = (a1 * a1 + a2 * a2) * f_gg - (a1 * a3 + a2 * a4) * f_cross + (a3 * a3 + a4 * a4) * f_dd
    return float(-beta * gamma * w.m * np.pi / 2.0 * bracket)


def admissible_weights(a1: float, a2: float, a3: float, a4: float, tol: float = 1e-12) -> bool:
    """
    True iff a1^2 = a2^2, a3^2 = a4^2, a1 a2 = -a3 a4, a1 a3 = -a2 a4 and a2 a3 = -a1 a4.
    """
    scale = max(1.0, a1 * a1, a2 * a2, a3 * a3, a4 * a4)
    conditions = (
        (a1 * a1, a2 * a2),
        (a3 * a3, a4 * a4),
        (a1 * a2, -a3 * a4),
        (a1 * a3, -a2 * a4),
        (a2 * a3, -a1 * a4),
    )
    return all(math.isclose(lhs, rhs, rel_tol=0.0, abs_tol=tol * scale) for lhs, rhs in conditions)


def decay_fit(records: Sequence[CycleRecord]) -> Tuple[float, float]:
    """
    Least-squares fit of log|integral| = exponent * log r + log amplitude.

    Returns:
        (exponent, amplitude); (-inf, 0.0) when any integral is exactly zero

    Raises:
        InputDomainError: fewer than 3 records, repeated radii, or mixed weights/t0
    """
    if len(records) < 3:
        raise InputDomainError(f"decay fit needs at least 3 records, got {len(records)}")
    radii = np.array([rec.radius for rec in records], dtype=float)
    if len(np.unique(radii)) != len(radii):
        raise InputDomainError("decay fit needs distinct radii")
    if len({(rec.t0, tuple(rec.weights)) for rec in records}) != 1:
        raise InputDomainError("decay fit records must share weights and t0")
    integrals = np.abs([rec.integral for rec in records])
    if np.any(integrals == 0.0):
        return float('-inf'), 0.0
    slope, intercept = np.polyfit(np.log(radii), np.log(integrals), 1)
    return float(slope), float(np.exp(intercept))


# --- source transformations ---------------------------------------------

def rescaled_source(w: ModeWeights, c: float) -> ModePair:
    """Velocity-c source: rho(x, t) = Psi(x, c t) and J(x, t) = c J(x, c t)."""
    if c <= 0.0:
        raise InputDomainError(f"rescaling speed must be positive, got {c}")
    base = combined_source(w)
    return ModePair(base.density.rescale_time(c), c * base.current.rescale_time(c))


def add_constant_background(srcpair: ModePair, a: float, b: float) -> ModePair:
    """(rho + a, J + b); the background has no time derivative so it radiates nothing."""
    density, current = srcpair
    return ModePair(density + a, current + b)


def constant_source(a: float, b: float) -> ModePair:
    return add_constant_background(ModePair(RingFunction(), RingFunction()), a, b)


# --- thermal equilibrium ----------------------------------------------------

def temperature(srcpair: ModePair, theta: float, t: float, squared: bool = False,
                tol: float = 1e-12) -> float:
    """
    T = |J| / |rho| on the unit circle (|K| = |J|); with squared=True the
    mean-square speed |J|^2 / rho^2.

    Where rho vanishes the limit along theta is taken by L'Hopital.

    Raises:
        DegeneratePointError: rho = 0 with J != 0, or rho and d(rho)/d(theta) both vanish
    """
    density, current = srcpair
    rho = density(theta, t)
    j = current(theta, t)
    if abs(rho) > tol:
        value = abs(j) / abs(rho)
    else:
        if abs(j) > tol:
            raise DegeneratePointError(f"rho vanishes with J = {j} at theta={theta}, t={t}")
        slope = density.dx()(theta, t)
        if abs(slope) <= tol:
            raise DegeneratePointError(f"rho vanishes to second order at theta={theta}, t={t}")
        value = abs(current.dx()(theta, t)) / abs(slope)
    return value * value if squared else value


def temperature_field(srcpair: ModePair, squared: bool = False) -> TemperatureField:
    return TemperatureField(lambda theta, t: temperature(srcpair, theta, t, squared))


def equilibrium_check(srcpair: ModePair, samples: int = 64, squared: bool = False,
                      tol: float = 1e-9) -> bool:
    """
    Whether T is constant over a Halton sample of (theta, t) in [-pi, pi) x [0, 2 pi).

    Points where |rho| is below 1e-6 of the sampled maximum, or where the limit is
    undefined, are skipped as degenerate.

    Raises:
        InputDomainError: fewer than 10 samples
        InconclusiveError: more than half the samples are degenerate
    """
    if samples < 10:
        raise InputDomainError(f"equilibrium check needs at least 10 samples, got {samples}")
    unit = qmc.Halton(d=2, scramble=False).random(samples)
    theta = -np.pi + 2.0 * np.pi * unit[:, 0]
    t = 2.0 * np.pi * unit[:, 1]
    density = srcpair[0]
    rho = np.abs(np.broadcast_to(density(theta, t), theta.shape))
    floor = 1e-6 * float(rho.max()) if rho.max() > 0 else np.inf

    values: List[float] = []
    for th, tt, magnitude in zip(theta, t, rho):
        if magnitude < floor:
            continue
        try:
            values.append(temperature(srcpair, th, tt, squared))
        except DegeneratePointError:
            continue
    skipped = samples - len(values)
    if skipped > samples / 2:
        raise InconclusiveError(f"{skipped} of {samples} samples are degenerate")
    return bool(np.ptp(values) < tol)
