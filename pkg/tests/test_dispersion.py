"""Sellmeier index, QPM mismatch, tuning-curve calibration and bandwidth."""
import numpy as np
import pytest

from upconvspec import dispersion
from upconvspec.errors import CalibrationError, DomainError, TuningError

# extraordinary-index reference values (Jundt 1997 table gives 2.15580)
N_1064_245 = 2.1557974335465007
N_1550_56 = 2.1391032341726524


def test_refractive_index_reference_points():
    n = dispersion.refractive_index(1064.0, 24.5)
    assert n == pytest.approx(N_1064_245, rel=1e-12)
    assert abs(n - 2.15580) < 5e-6
    assert dispersion.refractive_index(1550.0, 56.0) == pytest.approx(N_1550_56, rel=1e-12)


def test_refractive_index_trends():
    # normal dispersion in the red tail, positive thermo-optic coefficient
    assert dispersion.refractive_index(700.0, 56.0) > dispersion.refractive_index(1550.0, 56.0)
    assert dispersion.refractive_index(1550.0, 70.0) > dispersion.refractive_index(1550.0, 56.0)


def test_refractive_index_validity_window():
    with pytest.raises(DomainError):
        dispersion.refractive_index(300.0, 56.0)
    with pytest.raises(DomainError):
        dispersion.refractive_index(6000.0, 56.0)


def test_sfg_wavelength_values_and_symmetry():
    assert dispersion.sfg_wavelength(1550.0, 1950.0) == pytest.approx(863.5714285714286, rel=1e-14)
    assert dispersion.sfg_wavelength(1532.9, 1920.0) == pytest.approx(852.3756842074778, rel=1e-14)
    assert dispersion.sfg_wavelength(1570.9, 1980.0) == pytest.approx(875.9418738911262, rel=1e-14)
    assert dispersion.sfg_wavelength(1550.0, 1950.0) == dispersion.sfg_wavelength(1950.0, 1550.0)


def test_three_anchor_calibration_exact(cfg, wg3):
    assert wg3.dispersion_correction == pytest.approx(
        (-0.4304099323106694, 0.5435548321010809, -0.17714060465135786), rel=1e-9)
    for pump_nm, signal_nm in cfg.anchors:
        assert abs(dispersion.qpm_mismatch(signal_nm, pump_nm, wg3)) < 1e-12


def test_tuning_map_monotone_and_anti_correlated(cfg, wg3):
    pump = cfg.scan.pump_grid_nm()
    sig = dispersion.phase_matched_signal(pump, wg3)
    assert np.all(np.diff(sig) < 0)  # longer pump -> shorter matched signal
    assert sig[0] == pytest.approx(1570.8999999999955, abs=1e-9)
    assert sig[-1] == pytest.approx(1532.8999999999896, abs=1e-9)


def test_single_anchor_calibration(wg1):
    assert wg1.dispersion_correction == pytest.approx((-0.013480245228881225,), rel=1e-9)
    assert dispersion.phase_matched_signal(1950.0, wg1) == pytest.approx(1550.0, abs=1e-9)
    # endpoints of the scan under the bulk-dispersion slope
    assert dispersion.phase_matched_signal(1920.0, wg1) == pytest.approx(1567.0382391361918, abs=1e-6)
    assert dispersion.phase_matched_signal(1980.0, wg1) == pytest.approx(1533.7613848257915, abs=1e-6)


def test_phase_matched_signal_vectorized(wg3):
    pumps = np.array([1925.0, 1944.0, 1963.0, 1978.0])
    vec = dispersion.phase_matched_signal(pumps, wg3)
    for p, s in zip(pumps, vec):
        assert dispersion.phase_matched_signal(float(p), wg3) == pytest.approx(float(s), abs=1e-9)


def test_phase_matched_pump_inverts_signal(wg3):
    s0 = dispersion.phase_matched_signal(1950.0, wg3)
    assert dispersion.phase_matched_pump(s0, wg3) == pytest.approx(1950.0, abs=1e-6)


def test_phase_match_state_at_anchor(wg3):
    state = dispersion.phase_match(1550.0, 1950.0, wg3)
    assert state.sfg_nm == pytest.approx(863.5714285714286, rel=1e-12)
    assert abs(state.delta_k_per_um) < 1e-12
    assert state.efficiency_factor == pytest.approx(1.0, abs=1e-12)


def test_efficiency_factor_peak_and_nulls(wg3):
    assert dispersion.efficiency_factor(0.0, wg3.length_mm) == 1.0
    length_um = wg3.length_mm * 1000.0
    for m in (1, 2, 3):
        assert dispersion.efficiency_factor(2.0 * np.pi * m / length_um, wg3.length_mm) < 1e-30


def test_acceptance_bandwidth_values(wg3):
    bw = dispersion.acceptance_bandwidth(wg3, 1950.0)
    assert bw.signal_nm == pytest.approx(1550.0, abs=1e-6)
    assert bw.signal_band_fwhm_nm == pytest.approx(0.588048416860147, abs=1e-6)
    assert bw.sfg_band_fwhm_nm == pytest.approx(0.18253498535750623, abs=1e-6)
    # the SFG-side width is the signal-side width compressed by the band map
    assert bw.sfg_band_fwhm_nm < bw.signal_band_fwhm_nm


def test_design_period_round_trip(wg3):
    period = dispersion.design_qpm_period(1550.0, 1950.0, wg3)
    assert period == pytest.approx(19.6, abs=1e-9)
    probe = dispersion.WaveguideSpec(
        length_mm=wg3.length_mm, qpm_period_um=period, temperature_c=wg3.temperature_c,
        dispersion_correction=wg3.dispersion_correction)
    assert abs(dispersion.qpm_mismatch(1550.0, 1950.0, probe)) < 1e-12


def test_design_period_other_pair(wg3):
    assert dispersion.design_qpm_period(1550.0, 1560.0, wg3) == pytest.approx(
        16.311795638187764, abs=1e-6)


def test_design_period_rejects_unbuildable(wg3):
    with pytest.raises(TuningError):
        dispersion.design_qpm_period(800.0, 1950.0, wg3)  # period below 5 um
    with pytest.raises(DomainError):
        dispersion.design_qpm_period(500.0, 520.0, wg3)  # SFG outside validity


def test_calibration_error_paths(cfg):
    with pytest.raises(CalibrationError):
        dispersion.calibrate_operating_point(cfg.waveguide, [])
    with pytest.raises(CalibrationError):
        dispersion.calibrate_operating_point(
            cfg.waveguide, [(1950.0, 1550.0), (1960.0, 1550.0)])


def test_extra_consistent_anchor_keeps_fit(cfg, wg3):
    # a fourth anchor taken from the calibrated curve itself moves nothing
    extra = (1965.0, float(dispersion.phase_matched_signal(1965.0, wg3)))
    wg4 = dispersion.calibrate_operating_point(cfg.waveguide, list(cfg.anchors) + [extra])
    assert np.allclose(wg4.dispersion_correction, wg3.dispersion_correction, rtol=1e-6)


def test_waveguide_spec_validation():
    with pytest.raises(DomainError):
        dispersion.WaveguideSpec(length_mm=-1.0)
    with pytest.raises(DomainError):
        dispersion.WaveguideSpec(qpm_period_um=0.0)
    with pytest.raises(DomainError):
        dispersion.WaveguideSpec(temperature_c=500.0)
