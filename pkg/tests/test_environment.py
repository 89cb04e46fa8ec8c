import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eit_localizer import constants, environment, protocols, pulses
from eit_localizer.errors import GridError


def _gaussian_profile(width_sigma, x_max=200e-9, n=2001):
    x = np.linspace(-x_max, x_max, n)
    return protocols.ScanProfile(x, np.exp(-0.5 * (x / width_sigma) ** 2))


def test_ground_state_sigma_at_5mK():
    sigma = environment.ground_state_sigma(environment.TrapModel.from_temperature(5e-3))
    assert sigma == pytest.approx(8.34e-9, rel=1e-3)


@settings(max_examples=20, deadline=None)
@given(st.floats(1e-4, 1e-1))
def test_sigma_scales_with_depth(kelvin):
    s1 = environment.ground_state_sigma(environment.TrapModel.from_temperature(kelvin))
    s2 = environment.ground_state_sigma(environment.TrapModel.from_temperature(2 * kelvin))
    assert s1 / s2 == pytest.approx(2**0.25, rel=1e-12)


def test_trap_rejects_nonpositive_depth():
    with pytest.raises(ValueError):
        environment.TrapModel(0.0)


def test_delta_spike_gives_kernel_width():
    sigma = environment.ground_state_sigma(environment.TrapModel.from_temperature(5e-3))
    x = np.linspace(-128e-9, 128e-9, 1025)
    y = np.zeros_like(x)
    y[512] = 1.0
    conv = environment.convolve_profile(protocols.ScanProfile(x, y), sigma)
    assert conv.fwhm == pytest.approx(19.6e-9, rel=0.01)


def test_zero_sigma_is_identity():
    prof = _gaussian_profile(5e-9)
    out = environment.convolve_profile(prof, 0.0)
    np.testing.assert_array_equal(out.values, prof.values)
    np.testing.assert_array_equal(out.positions, prof.positions)


def test_narrow_grid_raises():
    prof = _gaussian_profile(5e-9, x_max=30e-9)
    with pytest.raises(GridError):
        environment.convolve_profile(prof, 8.3e-9)


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-9, 15e-9), st.floats(1e-9, 12e-9))
def test_gaussian_widths_add_in_quadrature(w_sigma, sigma):
    prof = _gaussian_profile(w_sigma, x_max=max(8 * w_sigma, 1e-9) + 6 * sigma)
    conv = environment.convolve_profile(prof, sigma)
    expected = environment.gaussian_fwhm(math.hypot(w_sigma, sigma))
    assert conv.fwhm == pytest.approx(expected, rel=0.02)
    assert conv.values.max() <= prof.values.max() * (1 + 1e-12)
    assert conv.metadata["mass_out"] == pytest.approx(conv.metadata["mass_in"], rel=1e-9)


def test_convolved_readout_profile(readout_scans):
    sigma = environment.ground_state_sigma(environment.TrapModel.from_temperature(5e-3))
    prof = readout_scans.profiles[18.0]
    conv = environment.convolve_profile(prof, sigma)
    assert conv.values.max() <= prof.values.max()
    assert abs(conv.metadata["mass_out"] / conv.metadata["mass_in"] - 1) <= 1e-6
    assert conv.fwhm >= environment.gaussian_fwhm(sigma)


@pytest.mark.parametrize("pol", environment.POLARIZATIONS)
def test_far_field_is_transverse_and_inverse_r(pol):
    src = environment.DipoleSource(pol)
    lam = src.wavelength
    n = np.array([1.0, 2.0, 0.5]) / np.linalg.norm([1.0, 2.0, 0.5])
    r1, r2 = 300 * lam * n, 600 * lam * n
    e1 = environment.dipole_field(src, r1)
    e2 = environment.dipole_field(src, r2)
    assert np.linalg.norm(e1) / np.linalg.norm(e2) == pytest.approx(2.0, rel=1e-3)
    far = environment.far_field(src, r1)
    assert abs(np.dot(n, far)) <= 1e-12 * np.linalg.norm(far)
    # the longitudinal part is a near-field term falling as 1/r^2
    assert abs(np.dot(n, e1)) / abs(np.dot(n, e2)) == pytest.approx(4.0, rel=1e-3)
    np.testing.assert_allclose(e1, environment.far_field(src, r1),
                               atol=1e-2 * np.linalg.norm(e1))


def test_no_far_field_along_dipole_axis():
    src = environment.DipoleSource("pi")
    r = np.array([0.0, 0.0, 100 * src.wavelength])
    assert np.linalg.norm(environment.far_field(src, r)) == 0.0
    near = np.linalg.norm(environment.dipole_field(src, r))
    assert near > 0


def test_field_at_source_raises():
    with pytest.raises(ZeroDivisionError):
        environment.dipole_field(environment.DipoleSource(), np.zeros(3))


def test_rabi_perturbation_at_neighbour():
    r = np.array([constants.QUBIT_SPACING, 0.0, 0.0])
    rabi = environment.rabi_perturbations(r)
    assert rabi["pi"] / (2 * math.pi) == pytest.approx(159e3, rel=0.10)
    assert rabi["sigma+"] == pytest.approx(rabi["sigma-"], rel=1e-12)


def test_zero_perturbation_changes_nothing(dipole_crosstalk):
    _, pert, _ = dipole_crosstalk
    sched = pulses.readout_schedule()
    sw = pulses.StandingWave(18.0)
    xt = environment.crosstalk_delta(sw, sched, pert.scaled(0.0), phases=(0.0,))
    assert xt["per_phase"] == [0.0]


def test_crosstalk_grows_with_amplitude(dipole_crosstalk):
    _, pert, _ = dipole_crosstalk
    sched = pulses.readout_schedule()
    sw = pulses.StandingWave(18.0)
    deltas = [environment.crosstalk_delta(sw, sched, pert.scaled(s))["delta"]
              for s in (0.0, 1.0, 3.0, 10.0)]
    assert all(a <= b for a, b in zip(deltas, deltas[1:]))
