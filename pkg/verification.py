#!/usr/bin/env python3
"""
Invariant suites behind `ringradiant.py verify`
Each suite returns pass/fail rows with the measured residual and its threshold
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Tuple

import numpy as np
import pandas as pd

from errors import InputDomainError
from flow_extension import (BumpProfile, RingSource, bump_extend, circular_extension_exists,
                            circular_flow_divergence, reconstruct_flow, reconstruct_radial,
                            surface_divergence)
from jefimenko_fields import (EvalPoint, WALLIS_TABLE, causal_fields_direct, coefficient_functions,
                              direct_fields_batch, far_field_E2, series_coefficients,
                              wallis_J_printed)
from quadrature import adaptive_integral, central_difference, periodic_nodes
from radiation_analysis import (DIRECT_PARTS, FAR_FIELD_PARTS, PowerIntegrator, add_constant_background,
                                admissible_weights, cancellation_reduction, constant_source,
                                cycle_power, decay_fit, equilibrium_check, instantaneous_power,
                                rescaled_source, temperature, zero_flux_residuals)
from spectral_wave import (ModeWeights, WaveSolution, combined_source, compute_fourier_coefficients,
                           continuity_residual, mode_pair, total_charge)

logger = logging.getLogger(__name__)

SUITES = ('wave', 'extension', 'wallis', 'cancellation', 'power', 'thermal')
SEED = 20240607
ZERO_FLUX_RADII = (2.0, 5.0, 10.0)
BOUNDED_RADII = (4.0, 8.0, 16.0)
DECAY_THRESHOLD = -0.8
CONTROL_THRESHOLD = -0.3
ADMISSIBLE = (1.0, 1.0, 1.0, -1.0)
SINGLE_MODE = (1.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ''


@dataclass
class VerifyReport:
    suite: str
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([vars(check) for check in self.checks],
                            columns=['suite', 'name', 'passed', 'measured', 'threshold', 'detail'])


def _below(suite: str, name: str, measured: float, threshold: float, detail: str = '') -> CheckResult:
    return CheckResult(suite, name, bool(measured < threshold), float(measured), float(threshold), detail)


def _above(suite: str, name: str, measured: float, threshold: float, detail: str = '') -> CheckResult:
    return CheckResult(suite, name, bool(measured > threshold), float(measured), float(threshold), detail)


def _at_most(suite: str, name: str, measured: float, threshold: float, detail: str = '') -> CheckResult:
    return CheckResult(suite, name, bool(measured <= threshold), float(measured), float(threshold), detail)


def _weights(config, weights) -> ModeWeights:
    return ModeWeights(config.m, *weights)


# --- wave ------------------------------------------------------------------

WAVE_CASES = {
    'cos2x': lambda x: np.cos(2 * x),
    'sin3x': lambda x: np.sin(3 * x),
    'mixture': lambda x: np.cos(2 * x) + 0.5 * np.sin(3 * x) - 0.25 * np.cos(x),
}
VELOCITY_CASES = {
    'zero': lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    'cos2x': lambda x: np.cos(2 * x),
}


def wave_residual(sol: WaveSolution, x: np.ndarray, t: np.ndarray, h: float = 1e-3) -> float:
    """max |Psi_tt - Psi_xx| by second-order central differences."""
    psi = sol.density
    tt = (psi(x, t + h) - 2 * psi(x, t) + psi(x, t - h)) / (h * h)
    xx = (psi(x + h, t) - 2 * psi(x, t) + psi(x - h, t)) / (h * h)
    return float(np.max(np.abs(tt - xx)))


def symmetric_relation_residual(sol: WaveSolution, x: np.ndarray, t: np.ndarray, h: float = 1e-4) -> float:
    """max |J_t + Psi_x| by fourth-order central differences; zero for even initial data."""
    j_t = central_difference(lambda s: sol.current(x, s), t, h)
    psi_x = central_difference(lambda s: sol.density(s, t), x, h)
    return float(np.max(np.abs(j_t + psi_x)))


def verify_wave(config) -> List[CheckResult]:
    rng = np.random.default_rng(SEED)
    x = rng.uniform(-np.pi, np.pi, 100)
    t = rng.uniform(-2.0, 2.0, 100)
    checks = []
    for name0, psi0 in WAVE_CASES.items():
        for name1, psi1 in VELOCITY_CASES.items():
            sol = WaveSolution(compute_fourier_coefficients(psi0, psi1, M=8))
            case = f"psi0={name0},psi1={name1}"
            checks.append(_below('wave', f"wave residual [{case}]", wave_residual(sol, x, t), 1e-6))
            checks.append(_below('wave', f"series continuity [{case}]",
                                 np.max(np.abs(continuity_residual(sol.pair, x, t))), 1e-10))
            grid = periodic_nodes(512)
            excess = max(np.max(np.abs(sol.density(grid, s))) - sol.amplitude_bound(s)
                         for s in (-5.0, -1.0, 0.0, 2.0))
            checks.append(_below('wave', f"amplitude bound [{case}]", excess, 1e-12))

    symmetric = WaveSolution(compute_fourier_coefficients(lambda s: np.cos(2 * s) + 0.3 * np.cos(s),
                                                          lambda s: np.cos(2 * s) + 0.2, M=8))
    checks.append(_below('wave', "even data: J_t + Psi_x vanishes",
                         symmetric_relation_residual(symmetric, x, t), 1e-8))

    m = config.m
    sol = WaveSolution(compute_fourier_coefficients(lambda s: np.cos(m * s), VELOCITY_CASES['zero'], M=m + 2))
    rho_error = np.max(np.abs(sol.density(x, t) - np.cos(m * x) * np.cos(m * t)))
    j_error = np.max(np.abs(sol.current(x, t) - np.sin(m * x) * np.sin(m * t)))
    checks.append(_below('wave', f"closed-form density m={m}", rho_error, 1e-12))
    checks.append(_below('wave', f"closed-form current m={m}", j_error, 1e-12))

    sol = WaveSolution(compute_fourier_coefficients(WAVE_CASES['mixture'], VELOCITY_CASES['cos2x'], M=8))
    drift = abs(total_charge(sol.density, 1.5) - total_charge(sol.density, 0.0))
    checks.append(_below('wave', "total charge conserved", drift, 1e-10))
    return checks


# --- extension --------------------------------------------------------------

def verify_extension(config) -> List[CheckResult]:
    rng = np.random.default_rng(SEED)
    m = config.m
    checks = []
    theta = rng.uniform(-np.pi, np.pi, 50)
    t = rng.uniform(0.0, 2 * np.pi, 50)
    for i in (1, 2, 3, 4):
        pair = mode_pair(i, m)
        residual = np.max(np.abs(continuity_residual(pair, theta, t)))
        checks.append(_below('extension', f"ring continuity mode {i}", residual, 1e-10))

    src = RingSource.from_pair(mode_pair(1, m), np.pi / m)
    surface = max(abs(surface_divergence(src, th, tt) - src.j_scalar.dx()(th, tt))
                  for th, tt in zip(theta[:20], t[:20]))
    checks.append(_below('extension', "surface divergence equals dJ/dtheta", surface, 1e-8))

    epsilon = 0.2
    volume = bump_extend(src, BumpProfile(epsilon))
    radius = 1.0 + epsilon * rng.uniform(-0.8, 0.8, 200)
    angle = rng.uniform(-np.pi, np.pi, 200)
    height = epsilon * rng.uniform(-0.8, 0.8, 200)
    times = rng.uniform(0.0, 2 * np.pi, 200)
    bump = max(abs(volume.continuity_residual(r * np.cos(a), r * np.sin(a), z, s))
               for r, a, z, s in zip(radius, angle, height, times))
    checks.append(_below('extension', "bump continuity eps=0.2", bump, 1e-6))

    w2 = lambda r, th: r * np.sin(th)
    disc = max(abs(reconstruct_radial(w2, None, 1.0, r0, th) + 0.5 * r0 * np.cos(th))
               for r0, th in zip(rng.uniform(0.0, 1.0, 20), rng.uniform(-np.pi, np.pi, 20)))
    checks.append(_below('extension', "disc reconstruction w2 = r sin(theta)", disc, 1e-10))

    flow = reconstruct_flow(lambda r, th: r * r * np.cos(th), np.sin, 0.3, 0.5,
                            dw2_dtheta=lambda r, th: -r * r * np.sin(th))
    annulus = max(abs(flow.divergence(r, th))
                  for r, th in zip(rng.uniform(0.75, 1.45, 20), rng.uniform(-np.pi, np.pi, 20)))
    checks.append(_below('extension', "annulus flow divergence", annulus, 1e-6))

    circular = abs(circular_flow_divergence(lambda r: r * r, 1.3, 0.4))
    checks.append(_below('extension', "circular flow divergence", circular, 1e-8))
    exists = circular_extension_exists(lambda th: np.full_like(th, 2.5))
    refused = not circular_extension_exists(np.cos)
    checks.append(_above('extension', "circular extension criterion", float(exists and refused), 0.5))
    return checks


# --- wallis -----------------------------------------------------------------

def wallis_frame(max_order: int = 12) -> pd.DataFrame:
    """Closed forms against adaptive quadrature for I(alpha, beta) and odd J(gamma)."""
    if max_order < 0:
        raise InputDomainError(f"max order must be non-negative, got {max_order}")
    rows = []
    for alpha in range(max_order + 1):
        for beta in range(max_order + 1):
            closed = WALLIS_TABLE.integral_I(alpha, beta)
            numeric = adaptive_integral(lambda s: math.cos(s) ** alpha * math.sin(s) ** beta,
                                        -np.pi, np.pi, epsabs=1e-13, periodic=True)
            rows.append({'kind': 'I', 'alpha': alpha, 'beta': beta, 'gamma': None,
                         'closed_form': closed, 'quadrature': numeric, 'delta': abs(closed - numeric)})
    for gamma in range(1, max_order + 2, 2):
        closed = WALLIS_TABLE.integral_J(gamma)
        numeric = adaptive_integral(lambda s: math.sin(s) ** gamma, 0.0, np.pi, epsabs=1e-13)
        rows.append({'kind': 'J', 'alpha': None, 'beta': None, 'gamma': gamma,
                     'closed_form': closed, 'quadrature': numeric, 'delta': abs(closed - numeric)})
    return pd.DataFrame(rows)


def verify_wallis(config) -> List[CheckResult]:
    frame = wallis_frame(12)
    checks = [
        _below('wallis', "I(alpha, beta) closed form, alpha, beta <= 12",
               frame.loc[frame['kind'] == 'I', 'delta'].max(), 1e-12),
        _below('wallis', "J(gamma) closed form, gamma <= 13",
               frame.loc[frame['kind'] == 'J', 'delta'].max(), 1e-12),
    ]
    for gamma in (1, 3, 5):
        numeric = frame.loc[(frame['kind'] == 'J') & (frame['gamma'] == gamma), 'quadrature'].iloc[0]
        ratio = wallis_J_printed(gamma) / numeric
        checks.append(_below('wallis', f"printed J({gamma}) is twice the integral", abs(ratio - 2.0), 1e-12,
                             detail=f"ratio={ratio:.15f}"))
    return checks


# --- cancellation -------------------------------------------------------------

def verify_cancellation(config) -> List[CheckResult]:
    m, c = config.m, config.c
    checks = []
    for r in ZERO_FLUX_RADII:
        residuals = zero_flux_residuals(m, r, c, config.theta_nodes, config.phi_nodes,
                                        config.sphere_theta_nodes)
        for name, (flux, peak) in residuals.items():
            bound = 1e-7 * r * r * peak
            checks.append(_at_most('cancellation', f"zero flux {name} m={m} r={r:g}", abs(flux), bound))

    rng = np.random.default_rng(SEED)
    worst = 0.0
    for r, t in zip(rng.uniform(1.5, 50.0, 50), rng.uniform(0.0, 2 * np.pi, 50)):
        c1, c2, _ = coefficient_functions(m, r, t, c)
        _, beta, gamma = series_coefficients(r, c)
        scale = -float(beta * gamma) * m * m
        worst = max(worst, abs(c1 + c2 - scale) / abs(scale))
    checks.append(_below('cancellation', "C1 + C2 = -beta gamma m^2", worst, 1e-12))

    period = np.pi / m
    times = periodic_nodes(64, 0.0, period)
    r = config.radii[0]
    c3 = np.array([coefficient_functions(m, r, s, c)[2] for s in times])
    integral = abs(c3.sum() * period / len(times))
    checks.append(_below('cancellation', "integral of C3 over a cycle", integral, 1e-10))
    harmonics = max(abs(np.cos(2 * m * times).sum()), abs(np.sin(2 * m * times).sum())) * period / len(times)
    checks.append(_below('cancellation', "cycle integrals of cos(2mt), sin(2mt)", harmonics, 1e-10))

    a = ModeWeights(m, *ADMISSIBLE)
    cross = abs(a.a1 * a.a3 + a.a2 * a.a4)
    checks.append(_below('cancellation', "admissible cross coefficient a1 a3 + a2 a4", cross, 1e-15))
    return checks


# --- power ------------------------------------------------------------------

def _node_kwargs(config) -> Dict[str, int]:
    return {'theta_nodes': config.theta_nodes, 'nodes_phi': config.phi_nodes,
            'nodes_theta': config.sphere_theta_nodes}


def remainder_envelope(m: int, r: float, c: float, nodes: int, samples: int = 16) -> float:
    """max over one period of |E2_direct - E2_series| at a fixed off-axis direction."""
    direction = np.array([0.6, 0.0, 0.8])
    pair = mode_pair(1, m)
    worst = 0.0
    for t in periodic_nodes(samples, 0.0, 2 * np.pi / m):
        point = EvalPoint(tuple(r * direction), t)
        direct = causal_fields_direct(pair, point, c, nodes).E2
        series = far_field_E2(m, point, t, c, mode=1, nodes=nodes)
        worst = max(worst, float(np.linalg.norm(direct - series)))
    return worst


def verify_power(config) -> List[CheckResult]:
    m, c = config.m, config.c
    nodes = _node_kwargs(config)
    r0 = config.radii[0]
    checks = []

    zero = instantaneous_power(ModeWeights(m, 0, 0, 0, 0), r0, config.t0, c, **nodes)
    checks.append(_below('power', "zero weights radiate nothing", abs(zero.P), np.finfo(float).tiny))

    single = instantaneous_power(_weights(config, SINGLE_MODE), r0, 0.3, c, **nodes)
    ratio = abs(single.parts['E2xB2']) / abs(single.parts['E3xB2'])
    checks.append(_below('power', "single mode E2xB2 part vanishes against E3xB2", ratio, 1e-8,
                         detail=f"E3xB2={single.parts['E3xB2']:.6e}"))

    w = _weights(config, config.weights)
    cycle = cycle_power(w, r0, config.t0, c, config.time_nodes, 'far_field', **nodes)
    reduced = cancellation_reduction(w, r0, c, **nodes)
    scale = max(abs(reduced), np.finfo(float).tiny)
    checks.append(_below('power', f"far-field cycle equals reduced flux r={r0:g}",
                         abs(cycle.integral - reduced) / scale, 1e-9,
                         detail=f"cycle={cycle.integral:.6e}"))

    for label, weights, above in (('admissible', ADMISSIBLE, False), ('single mode', SINGLE_MODE, True)):
        mw = _weights(config, weights)
        records = [cycle_power(mw, r, config.t0, c, config.time_nodes, 'far_field', **nodes)
                   for r in config.radii]
        exponent, amplitude = decay_fit(records)
        detail = f"amplitude={amplitude:.6e}"
        if above:
            checks.append(_above('power', f"{label} cycle power does not decay", exponent,
                                 CONTROL_THRESHOLD, detail))
        else:
            checks.append(_at_most('power', f"{label} cycle power decays like 1/r", exponent,
                                   DECAY_THRESHOLD, detail))

    near, far = remainder_envelope(m, 8.0, c, config.theta_nodes), remainder_envelope(m, 16.0, c, config.theta_nodes)
    checks.append(_above('power', "far-field E2 remainder shrinks on doubling r", near / far, 3.0,
                         detail=f"r=8: {near:.3e}, r=16: {far:.3e}"))

    rescaled = rescaled_source(w, 2.0)
    rng = np.random.default_rng(SEED)
    x, t = rng.uniform(-np.pi, np.pi, 50), rng.uniform(0.0, 2 * np.pi, 50)
    checks.append(_below('power', "rescaled source continuity c=2",
                         np.max(np.abs(continuity_residual(rescaled, x, t))), 1e-12))

    background = constant_source(3.0, -1.0)
    fields = direct_fields_batch(background, np.array([[0.0, 2.0, 1.0]]), 0.7, c, config.theta_nodes)
    radiative = float(np.max(np.abs(fields[[1, 2, 4]])))
    checks.append(_below('power', "background radiative terms vanish", radiative, np.finfo(float).tiny))

    shifted = add_constant_background(combined_source(w), 1.0, 1.0)
    with_background = cycle_power(w, r0, config.t0, c, config.time_nodes, 'far_field', source=shifted, **nodes)
    delta = abs(with_background.integral - cycle.integral)
    checks.append(_below('power', "background leaves cycle power unchanged",
                         delta, 1e-12 * max(1.0, abs(cycle.integral)) + np.finfo(float).tiny))

    checks.append(_bounded_pairs_check(config))
    return checks


def bounded_pair_envelopes(m: int, c: float, radii: Tuple[float, ...] = BOUNDED_RADII, samples: int = 8,
                           **nodes) -> np.ndarray:
    """
    Largest direct-mode flux of the four bounded term pairs over one period,
    divided by r^2 / (r - 1)^3, at each radius.
    """
    pair = mode_pair(1, m)
    bounded = [name for name in DIRECT_PARTS if name not in FAR_FIELD_PARTS]
    times = periodic_nodes(samples, 0.0, np.pi / m)
    normalised = []
    for r in radii:
        integrator = PowerIntegrator(pair, r, c, 'direct', **nodes)
        worst = max(abs(integrator.record(t).parts[name]) for t in times for name in bounded)
        normalised.append(worst * (r - 1.0) ** 3 / (r * r))
    return np.array(normalised)


def _bounded_pairs_check(config) -> CheckResult:
    normalised = bounded_pair_envelopes(config.m, config.c, **_node_kwargs(config))
    growth = float(np.max(normalised[1:] / np.maximum(normalised[:-1], np.finfo(float).tiny)))
    detail = ', '.join(f"r={r:g}: {v:.3e}" for r, v in zip(BOUNDED_RADII, normalised))
    return _at_most('power', "bounded term pairs decay like r^2/(r-1)^3", growth, 1.0, detail)


# --- thermal ----------------------------------------------------------------

def verify_thermal(config) -> List[CheckResult]:
    m = config.m
    checks = []
    admissible = combined_source(ModeWeights(m, *ADMISSIBLE))
    checks.append(_above('thermal', "admissible family in equilibrium",
                         float(equilibrium_check(admissible)), 0.5))
    rng = np.random.default_rng(SEED)
    deviations = []
    for theta, t in zip(rng.uniform(-np.pi, np.pi, 100), rng.uniform(0.0, 2 * np.pi, 100)):
        if abs(admissible.density(theta, t)) < 1e-6:
            continue
        deviations.append(abs(temperature(admissible, theta, t) - 1.0))
    checks.append(_below('thermal', "admissible temperature equals 1", max(deviations), 1e-9))
    checks.append(_below('thermal', "admissible mean-square speed equals 1",
                         abs(temperature(admissible, 0.1, 0.2, squared=True) - 1.0), 1e-9))

    single = combined_source(ModeWeights(m, *SINGLE_MODE))
    checks.append(_below('thermal', "single mode not in equilibrium", float(equilibrium_check(single)), 0.5))
    constant = temperature(constant_source(2.0, 6.0), 0.3, 1.1)
    checks.append(_below('thermal', "constant source temperature 3", abs(constant - 3.0), 1e-12))
    checks.append(_above('thermal', "(1,1,1,-1) admissible", float(admissible_weights(*ADMISSIBLE)), 0.5))
    return checks


SUITE_RUNNERS: Dict[str, Callable] = {
    'wave': verify_wave,
    'extension': verify_extension,
    'wallis': verify_wallis,
    'cancellation': verify_cancellation,
    'power': verify_power,
    'thermal': verify_thermal,
}


def run_verify(suite: str, config) -> VerifyReport:
    """
    Run one invariant suite, or every suite for 'all'.

    Raises:
        InputDomainError: unknown suite name
    """
    if suite != 'all' and suite not in SUITE_RUNNERS:
        raise InputDomainError(f"unknown suite '{suite}', expected one of {SUITES + ('all',)}")
    names = SUITES if suite == 'all' else (suite,)
    report = VerifyReport(suite)
    for name in names:
        logger.info(f"Running {name} checks...")
        checks = SUITE_RUNNERS[name](config)
        failed = [check.name for check in checks if not check.passed]
        if failed:
            logger.warning(f"{name}: {len(failed)} of {len(checks)} checks failed: {', '.join(failed)}")
        else:
            logger.info(f"{name}: all {len(checks)} checks passed")
        report.checks.extend(checks)
    return report
