"""
Tests for sphere fluxes, radiated power, admissible weights, decay fits,
source transformations and thermal equilibrium
"""

import numpy as np
import pytest

from errors import DegeneratePointError, InconclusiveError, InputDomainError
from jefimenko_fields import direct_fields_batch, series_coefficients
from radiation_analysis import (DIRECT_PARTS, CycleRecord, PowerIntegrator, add_constant_background,
                                admissible_weights, basis_cross_flux, cancellation_reduction,
                                constant_source, cycle_power, decay_fit, equilibrium_check,
                                instantaneous_power, rescaled_source, sphere_flux, temperature,
                                temperature_field, zero_flux_residuals)
from spectral_wave import ModePair, ModeWeights, RingFunction, combined_source, continuity_residual
from verification import bounded_pair_envelopes

# reduced quadrature keeps the end-to-end checks fast
FAST = dict(theta_nodes=256, nodes_phi=16, nodes_theta=32)
# enough sphere resolution for the direct fields out to r = 40
SPHERE = dict(theta_nodes=512, nodes_phi=64, nodes_theta=64)
ADMISSIBLE = (1.0, 1.0, 1.0, -1.0)
SINGLE = (1.0, 0.0, 0.0, 0.0)


# --- sphere flux ----------------------------------------------------------------

def test_point_source_flux_is_4pi():
    flux = sphere_flux(lambda p: p / np.linalg.norm(p, axis=1)[:, None] ** 3, 3.0)
    assert flux == pytest.approx(4 * np.pi, abs=1e-8)


def test_constant_field_has_no_flux():
    assert abs(sphere_flux(lambda p: np.tile([1.0, 0.0, 0.0], (len(p), 1)), 2.0)) < 1e-10


def test_flux_of_vertical_field_is_enclosed_volume():
    r = 2.0
    flux = sphere_flux(lambda p: p * np.array([0.0, 0.0, 1.0]), r, nodes_phi=32, nodes_theta=32)
    assert flux == pytest.approx(4 * np.pi * r ** 3 / 3, rel=1e-12)


@pytest.mark.parametrize("r,nodes", [(1.0, 64), (0.5, 64), (2.0, 8)])
def test_sphere_flux_preconditions(r, nodes):
    with pytest.raises(InputDomainError):
        sphere_flux(lambda p: p, r, nodes_phi=nodes)


@pytest.mark.parametrize("m", [2, 4])
@pytest.mark.parametrize("r", [2.0, 5.0, 10.0])
def test_zero_flux_identities(m, r):
    residuals = zero_flux_residuals(m, r, **FAST)
    assert len(residuals) == 5
    for name, (flux, peak) in residuals.items():
        assert abs(flux) <= 1e-7 * r * r * peak, name


def test_tangential_magnetic_flux_is_negative():
    flux_g, _ = basis_cross_flux(2, 5.0, 'GammaPP', 'GammaP', **FAST)
    flux_d, _ = basis_cross_flux(2, 5.0, 'DeltaPP', 'DeltaP', **FAST)
    assert flux_g < 0.0 and flux_d < 0.0
    assert flux_g == pytest.approx(flux_d, rel=1e-6)


# --- instantaneous power ------------------------------------------------------

def test_zero_weights_radiate_nothing():
    record = instantaneous_power(ModeWeights(2, 0, 0, 0, 0), 5.0, 0.3, **FAST)
    assert record.P == 0.0
    record = instantaneous_power(ModeWeights(2, 0, 0, 0, 0), 5.0, 0.3, mode='direct', **FAST)
    assert record.P == 0.0


def test_single_mode_power_follows_the_bracket():
    m, r, c = 2, 10.0, 10.0
    w = ModeWeights(m, *SINGLE)
    flux_g, _ = basis_cross_flux(m, r, 'GammaPP', 'GammaP', c, **FAST)
    _, beta, gamma = series_coefficients(r, c)
    integrator = PowerIntegrator(combined_source(w), r, c, 'far_field', 256, 16, 32)
    for t in (0.0, 0.3, 1.1):
        record = integrator.record(t)
        phase = m * (t - np.sqrt(r * r + 1.0) / c)
        expected = -beta * gamma * m * m * np.sin(phase) ** 2 * flux_g
        assert record.parts['E3xB2'] == pytest.approx(expected, rel=1e-9, abs=1e-15)
        assert abs(record.parts['E2xB2']) < 1e-8 * max(abs(expected), 1e-30) + 1e-25
        assert record.P == pytest.approx(sum(record.parts.values()), rel=1e-10, abs=1e-25)


def test_direct_power_records_all_pairs():
    record = instantaneous_power(ModeWeights(2, *SINGLE), 4.0, 0.5, mode='direct', **FAST)
    assert set(record.parts) == set(DIRECT_PARTS)
    assert record.mode == 'direct'
    assert record.P == pytest.approx(sum(record.parts.values()), rel=1e-9)


def test_power_preconditions():
    w = ModeWeights(2, *SINGLE)
    with pytest.raises(InputDomainError):
        instantaneous_power(w, 1.0, 0.0, **FAST)
    with pytest.raises(InputDomainError):
        instantaneous_power(w, 5.0, 0.0, mode='series', **FAST)
    with pytest.raises(InputDomainError):
        cycle_power(w, 5.0, time_nodes=16, **FAST)


# --- cycle power ------------------------------------------------------------------

def test_zero_weights_cycle_is_zero():
    record = cycle_power(ModeWeights(2, 0, 0, 0, 0), 5.0, time_nodes=32, **FAST)
    assert record.integral == 0.0
    assert record.period == pytest.approx(np.pi / 2)


@pytest.mark.parametrize("m,weights", [(2, ADMISSIBLE), (2, SINGLE), (4, (2.0, -2.0, 2.0, 2.0)),
                                       (3, SINGLE), (2, (0.3, 1.0, -0.5, 0.2))])
def test_far_field_cycle_matches_reduced_flux(m, weights):
    w = ModeWeights(m, *weights)
    record = cycle_power(w, 6.0, 0.2, time_nodes=32, **FAST)
    assert record.integral == pytest.approx(cancellation_reduction(w, 6.0, **FAST), rel=1e-9)


def test_cycle_integral_is_independent_of_start_time():
    w = ModeWeights(2, 0.3, 1.0, -0.5, 0.2)
    first = cycle_power(w, 5.0, 0.0, time_nodes=32, **FAST).integral
    second = cycle_power(w, 5.0, 0.77, time_nodes=32, **FAST).integral
    assert first == pytest.approx(second, rel=1e-10)


def test_admissible_cycle_power_tends_to_a_constant():
    # the cross term cancels but the squared fluxes do not, so the power stays finite and positive
    w = ModeWeights(2, *ADMISSIBLE)
    records = [cycle_power(w, r, time_nodes=32, **FAST) for r in (5.0, 10.0, 20.0, 40.0)]
    assert all(rec.integral > 0.0 for rec in records)
    assert records[-1].integral / records[1].integral == pytest.approx(1.0, abs=0.25)
    exponent, _ = decay_fit(records)
    assert abs(exponent) < 0.3


def test_direct_cycle_power_is_conserved_and_far_field_converges_to_it():
    w = ModeWeights(2, *ADMISSIBLE)
    radii = (5.0, 10.0, 20.0, 40.0)
    direct = [cycle_power(w, r, time_nodes=32, mode='direct', **SPHERE).integral for r in radii]
    far = [cycle_power(w, r, time_nodes=32, **SPHERE).integral for r in radii]
    # no charge between the spheres, so one cycle carries the same energy through each
    assert direct[0] > 0.0
    np.testing.assert_allclose(direct, direct[0], rtol=1e-6)
    gaps = [abs(f - d) / d for f, d in zip(far, direct)]
    assert all(later < earlier for earlier, later in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.01


def test_bounded_pairs_decay_like_the_envelope():
    normalised = bounded_pair_envelopes(2, 10.0, **SPHERE)
    assert normalised.shape == (3,)
    assert np.all(normalised > 0.0)
    assert np.all(np.diff(normalised) <= 0.0)


def test_single_mode_control_does_not_decay():
    w = ModeWeights(2, *SINGLE)
    records = [cycle_power(w, r, time_nodes=32, **FAST) for r in (5.0, 10.0, 20.0, 40.0)]
    exponent, amplitude = decay_fit(records)
    assert exponent > -0.3
    assert amplitude > 0.0


def test_velocity_rescaled_cycle():
    w = ModeWeights(2, *SINGLE)
    record = cycle_power(w, 5.0, time_nodes=32, wave_speed=2.0, **FAST)
    assert record.period == pytest.approx(np.pi / 4)
    assert np.isfinite(record.integral)


# --- admissible weights and fits ----------------------------------------------

@pytest.mark.parametrize("weights,expected", [
    ((1, 1, 1, -1), True),
    ((1, 1, 1, 1), False),
    ((2, -2, 2, 2), True),
    ((-1, 1, 1, 1), True),
    ((1, 0, 0, 0), False),
    ((0, 0, 0, 0), True),
])
def test_admissible_weights(weights, expected):
    assert admissible_weights(*weights) is expected


def _records(values, radii=(2.0, 4.0, 8.0, 16.0)):
    return [CycleRecord(r, 0.0, np.pi / 2, values(r), {}, (1.0, 0.0, 0.0, 0.0)) for r in radii]


def test_decay_fit_exact_power_laws():
    exponent, amplitude = decay_fit(_records(lambda r: 7.0 / r))
    assert exponent == pytest.approx(-1.0, abs=1e-6)
    assert amplitude == pytest.approx(7.0)
    exponent, _ = decay_fit(_records(lambda r: 5.0 / r ** 2))
    assert exponent == pytest.approx(-2.0, abs=1e-6)


def test_decay_fit_zero_integral_sentinel():
    assert decay_fit(_records(lambda r: 0.0 if r == 4.0 else 1.0)) == (float('-inf'), 0.0)


def test_decay_fit_preconditions():
    with pytest.raises(InputDomainError):
        decay_fit(_records(lambda r: 1.0 / r, radii=(2.0, 4.0)))
    with pytest.raises(InputDomainError):
        decay_fit(_records(lambda r: 1.0 / r, radii=(2.0, 2.0, 4.0)))
    mixed = _records(lambda r: 1.0 / r) + [CycleRecord(32.0, 0.5, 1.0, 0.1, {}, (1.0, 0.0, 0.0, 0.0))]
    with pytest.raises(InputDomainError):
        decay_fit(mixed)


# --- source transformations ---------------------------------------------------

def test_rescaled_source():
    w = ModeWeights(1, *SINGLE)
    same = rescaled_source(w, 1.0)
    base = combined_source(w)
    assert same.density(0.4, 0.9) == pytest.approx(base.density(0.4, 0.9))
    assert same.current(0.4, 0.9) == pytest.approx(base.current(0.4, 0.9))
    fast = rescaled_source(w, 2.0)
    assert fast.density(0.0, np.pi / 4) == pytest.approx(0.0, abs=1e-15)
    assert fast.current(0.0, np.pi / 4) == pytest.approx(0.0, abs=1e-15)
    x, t = np.linspace(-3, 3, 13), np.linspace(0, 5, 13)
    assert np.max(np.abs(continuity_residual(rescaled_source(ModeWeights(3, *ADMISSIBLE), 2.5), x, t))) < 1e-12
    with pytest.raises(InputDomainError):
        rescaled_source(w, 0.0)


def test_constant_background_does_not_radiate():
    shifted = add_constant_background(ModePair(RingFunction(), RingFunction()), 3.0, -1.0)
    fields = direct_fields_batch(shifted, np.array([[0.0, 2.0, 1.0], [3.0, 0.0, -1.0]]), 0.7, nodes=256)
    np.testing.assert_array_equal(fields[[1, 2, 4]], 0.0)
    assert np.any(fields[0] != 0.0)


def test_zero_background_is_identity():
    base = combined_source(ModeWeights(2, *ADMISSIBLE))
    same = add_constant_background(base, 0.0, 0.0)
    assert same.density(0.3, 0.4) == pytest.approx(base.density(0.3, 0.4))
    assert same.current(0.3, 0.4) == pytest.approx(base.current(0.3, 0.4))


def test_background_leaves_cycle_power_unchanged():
    w = ModeWeights(2, *ADMISSIBLE)
    shifted = add_constant_background(combined_source(w), 1.0, 1.0)
    plain = cycle_power(w, 10.0, time_nodes=32, **FAST)
    with_background = cycle_power(w, 10.0, time_nodes=32, source=shifted, **FAST)
    assert with_background.integral == pytest.approx(plain.integral, rel=1e-12)


# --- temperature ----------------------------------------------------------------

def test_admissible_family_has_unit_temperature():
    pair = combined_source(ModeWeights(2, *ADMISSIBLE))
    for theta, t in [(0.1, 0.2), (-2.0, 1.0), (2.9, 4.4)]:
        assert temperature(pair, theta, t) == pytest.approx(1.0, abs=1e-9)
    # at a zero of rho the limit along theta is used
    assert temperature(pair, 3 * np.pi / 8, 0.0) == pytest.approx(1.0, abs=1e-9)
    assert temperature(pair, 0.1, 0.2, squared=True) == pytest.approx(1.0, abs=1e-9)


def test_single_mode_temperature():
    m = 2
    pair = combined_source(ModeWeights(m, *SINGLE))
    assert temperature(pair, 0.0, np.pi / (4 * m)) == pytest.approx(0.0, abs=1e-15)
    theta, t = 0.3, 0.5
    expected = abs(np.tan(m * theta) * np.tan(m * t))
    assert temperature(pair, theta, t) == pytest.approx(expected)
    doubled = ModePair(2.0 * pair.density, 2.0 * pair.current)
    assert temperature(doubled, theta, t) == pytest.approx(temperature(pair, theta, t))


def test_temperature_degenerate_points():
    m = 2
    pair = combined_source(ModeWeights(m, *SINGLE))
    with pytest.raises(DegeneratePointError):
        temperature(pair, np.pi / (2 * m), np.pi / (2 * m))
    assert temperature(pair, np.pi / (2 * m), 0.0) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DegeneratePointError):
        temperature(ModePair(RingFunction(), RingFunction()), 0.1, 0.1)


def test_constant_source_temperature():
    pair = constant_source(2.0, 6.0)
    assert temperature(pair, 0.7, 3.0) == pytest.approx(3.0)
    assert temperature(pair, 0.7, 3.0, squared=True) == pytest.approx(9.0)
    assert temperature_field(pair)(1.0, 2.0) == pytest.approx(3.0)


def test_equilibrium_check():
    assert equilibrium_check(combined_source(ModeWeights(2, *ADMISSIBLE)))
    assert equilibrium_check(combined_source(ModeWeights(3, 1.0, -1.0, -1.0, -1.0)), squared=True)
    assert not equilibrium_check(combined_source(ModeWeights(2, *SINGLE)))
    assert equilibrium_check(constant_source(2.0, 6.0))


def test_equilibrium_check_failures():
    with pytest.raises(InconclusiveError):
        equilibrium_check(ModePair(RingFunction(), RingFunction()))
    with pytest.raises(InputDomainError):
        equilibrium_check(constant_source(1.0, 1.0), samples=5)
