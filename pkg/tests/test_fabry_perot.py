import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from fpcavity.fabry_perot import (
    CavityDesign,
    carrier_amplitude,
    cavity_gain,
    conservation_residual,
    finesse,
    half_width_phiF,
    output_phase_raw,
    sideband_amplitude,
    sideband_amplitude_conj,
    sideband_resonance,
)

cos_rho = st.floats(0.05, 0.9995)
tuning = st.floats(-50.0, 50.0)
freq_hz = st.floats(0.01, 5e3)


def test_gain_on_resonance_matches_closed_form():
    # G(0) = sin^2 / (1 - cos)^2 = (1 + cos) / (1 - cos)
    for c in (0.3, 0.9, 0.999):
        rho = np.arccos(c)
        assert cavity_gain(0.0, rho) == pytest.approx((1 + c) / (1 - c), rel=1e-12)


@pytest.mark.parametrize("c", [0.2, 0.7, 0.95, 0.9995])
def test_half_width_against_root_finding(c):
    # the gain falls to half its peak at the true half-width; its sine is phiF
    rho = np.arccos(c)
    g0 = cavity_gain(0.0, rho)
    half = brentq(lambda p: cavity_gain(p, rho) - g0 / 2, 0.0, np.pi / 2, xtol=1e-15)
    assert np.sin(half) == pytest.approx(half_width_phiF(rho), rel=1e-10)


def test_half_width_rejects_nonpositive_cos():
    with pytest.raises(ValueError):
        half_width_phiF(np.pi)
    with pytest.raises(ValueError):
        finesse(2.0)


def test_reference_derived_quantities(design):
    assert design.finesse == pytest.approx(np.pi / (2 * design.phiF))
    assert design.phi == pytest.approx(10 * design.phiF)
    assert design.tau == pytest.approx(design.L / 299792458.0)


@pytest.mark.parametrize("field,value", [
    ("L", 0.0), ("wavelength", -1.0), ("m", 0.0), ("P_detected", -1.0),
    ("cos2rho", 1.0), ("cos2rho", 0.0), ("alpha_s", -0.5),
])
def test_design_validation(field, value):
    with pytest.raises(ValueError, match=field):
        CavityDesign(**{field: value})


@settings(max_examples=200, deadline=None)
@given(phi=st.floats(-np.pi, np.pi), c=cos_rho)
def test_output_phase_unit_modulus(phi, c):
    assert abs(abs(output_phase_raw(phi, np.arccos(c))) - 1.0) < 1e-12


@settings(max_examples=1000, deadline=None)
@given(f=freq_hz, x=tuning, c2=st.floats(0.5, 0.9999))
def test_photon_conservation(f, x, c2):
    d = CavityDesign(cos2rho=c2, phi_over_phiF=x)
    assert conservation_residual(2 * np.pi * f, d) < 1e-10


@settings(max_examples=100, deadline=None)
@given(f=freq_hz, x=tuning)
def test_conjugate_sideband_on_real_axis(f, x, design):
    d = design.with_tuning(x)
    w = 2 * np.pi * f
    assert sideband_amplitude_conj(w, d) == pytest.approx(np.conj(sideband_amplitude(w, d)),
                                                          rel=1e-12, abs=1e-300)


def test_carrier_is_finite_away_from_dc(design):
    w = 2 * np.pi * np.array([1.0, 10.0, 100.0])
    assert np.all(np.isfinite(carrier_amplitude(w, design)))


def test_sideband_resonance_location(design):
    f = sideband_resonance(design)
    # the peak must be a local maximum of |alpha|
    w = 2 * np.pi * np.array([0.99 * f, f, 1.01 * f])
    a = np.abs(sideband_amplitude(w, design))
    assert a[1] >= a[0] and a[1] >= a[2]
    assert 20 < f < 30
