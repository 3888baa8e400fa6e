"""CPT and sideband spectra: structure, diffusion averaging, determinism."""

import numpy as np
import pytest
from scipy.signal import find_peaks

from sawspin.dynamics import DensityMatrix3, LambdaDriveParams, RatesParams, steady_state
from sawspin.spectra import (
    DiffusionModel,
    NVLevelStructure,
    SpectrumResult,
    cpt_spectrum,
    diffusion_average,
    fit_cpt_rabi,
    sideband_spectrum,
)

TWO_PI = 2.0 * np.pi


def no_diffusion():
    return DiffusionModel(fwhm=0.0, n_samples=1)


def test_raman_offsets_enumeration(nv_levels):
    offsets, labels = nv_levels.raman_offsets()
    expected = sorted(b * 12.0 + m * 2.2 for b in (+1, -1) for m in (-1, 0, 1))
    assert sorted(offsets / TWO_PI) == pytest.approx(expected)
    assert len(labels) == 6 and len(set(labels)) == 6


def test_spectrum_result_validates():
    with pytest.raises(ValueError):
        SpectrumResult(axis=np.array([1.0, 0.5]), signal=np.array([0.0, 0.0]))
    with pytest.raises(ValueError):
        SpectrumResult(axis=np.array([0.0, 1.0]), signal=np.array([np.inf, 0.0]))


def test_diffusion_draws_deterministic_and_centered():
    model = DiffusionModel(fwhm=TWO_PI * 140.0, n_samples=4000, seed=11)
    draws = model.draws()
    assert np.array_equal(draws, DiffusionModel(fwhm=TWO_PI * 140.0, n_samples=4000,
                                                seed=11).draws())
    sigma = model.sigma
    assert abs(draws.mean()) < 4.0 * sigma / np.sqrt(4000)
    assert draws.std() == pytest.approx(sigma, rel=0.1)


def test_diffusion_width_kinds():
    fwhm_model = DiffusionModel(fwhm=TWO_PI * 140.0, n_samples=1)
    sigma_model = DiffusionModel(fwhm=TWO_PI * 140.0, n_samples=1, width_kind="sigma")
    assert fwhm_model.sigma == pytest.approx(TWO_PI * 140.0 / 2.3548, rel=1e-3)
    assert sigma_model.sigma == TWO_PI * 140.0


def test_stratified_draws_are_quantiles():
    model = DiffusionModel(fwhm=TWO_PI * 10.0, n_samples=9, stratified=True)
    draws = model.draws()
    assert np.all(np.diff(draws) > 0)
    assert draws[4] == pytest.approx(0.0, abs=1e-12)


def test_diffusion_average_zero_width_is_identity():
    calls = []

    def fn(eps):
        calls.append(eps)
        return np.array([eps, 1.0])

    averaged = diffusion_average(fn, no_diffusion())
    out = averaged()
    assert out == pytest.approx([0.0, 1.0])


def test_cpt_dips_at_zeeman_split_resonances(nv_levels, default_rates, balanced_drive,
                                             diffusion_140):
    axis = TWO_PI * np.arange(-25.0, 25.0 + 1e-9, 0.5)
    spec = cpt_spectrum(nv_levels, balanced_drive, default_rates,
                        DiffusionModel(fwhm=TWO_PI * 140.0, n_samples=40,
                                       seed=3, stratified=True),
                        axis, window=10.0)
    inverted = spec.signal.max() - spec.signal
    peaks, _ = find_peaks(inverted, prominence=0.3 * inverted.max())
    assert len(peaks) == 2
    centers = spec.axis[peaks] / TWO_PI
    assert abs((centers[1] - centers[0]) - 24.0) <= 0.5 + 1e-9
    # hyperfine structure is power-broadened into single dips
    assert centers == pytest.approx([-12.0, 12.0], abs=0.5)


def test_cpt_resonant_signal_vanishes_for_ideal_single_configuration():
    # single configuration: levels with no Zeeman or hyperfine splitting
    levels = NVLevelStructure(omega_B=0.0, A_hf=0.0)
    rates = RatesParams(gamma_s=0.0, gamma_orb=TWO_PI * 12.0,
                        Gamma_1=TWO_PI * 12.2, Gamma_2=TWO_PI * 1.8)
    drive = LambdaDriveParams(TWO_PI * 8.0, TWO_PI * 8.0, 0.0, 0.0)
    ss = steady_state(drive, rates)
    assert ss.rho_ee == pytest.approx(0.0, abs=1e-12)
    axis = TWO_PI * np.array([-8.0, 0.0, 8.0])
    spec = cpt_spectrum(levels, drive, rates, no_diffusion(), axis, window=10.0)
    # after the trapping transient the resonance point emits only the pump-in
    # residue, far below the off-resonant level
    assert spec.signal[1] < 0.02 * spec.signal[0]
    assert spec.signal[1] < 0.02 * spec.signal[2]


def test_cpt_window_must_be_positive(nv_levels, default_rates, balanced_drive):
    with pytest.raises(ValueError):
        cpt_spectrum(nv_levels, balanced_drive, default_rates, no_diffusion(),
                     TWO_PI * np.array([-1.0, 0.0, 1.0]), window=0.0)


def test_cpt_contrast_decreases_with_diffusion(nv_levels, default_rates, balanced_drive):
    axis = TWO_PI * np.sort(np.concatenate((np.linspace(10.5, 13.5, 13), [23.0])))
    sharp = cpt_spectrum(nv_levels, balanced_drive, default_rates, no_diffusion(),
                         axis, window=10.0)
    broad = cpt_spectrum(nv_levels, balanced_drive, default_rates,
                         DiffusionModel(fwhm=TWO_PI * 140.0, n_samples=64,
                                        seed=1, stratified=True),
                         axis, window=10.0)

    def contrast(spec):
        return (spec.signal.max() - spec.signal.min()) / spec.signal.max()

    assert contrast(broad) < contrast(sharp)


def test_cpt_seed_determinism(nv_levels, default_rates, balanced_drive):
    axis = TWO_PI * np.linspace(-15, 15, 31)
    kw = dict(window=10.0)
    d = DiffusionModel(fwhm=TWO_PI * 140.0, n_samples=25, seed=9)
    a = cpt_spectrum(nv_levels, balanced_drive, default_rates, d, axis, **kw)
    b = cpt_spectrum(nv_levels, balanced_drive, default_rates, d, axis, **kw)
    assert np.array_equal(a.signal, b.signal)


def test_cpt_threads_do_not_change_bits(nv_levels, default_rates, balanced_drive):
    axis = TWO_PI * np.linspace(-15, 15, 61)
    d = DiffusionModel(fwhm=TWO_PI * 140.0, n_samples=40, seed=9)
    a = cpt_spectrum(nv_levels, balanced_drive, default_rates, d, axis, threads=1)
    b = cpt_spectrum(nv_levels, balanced_drive, default_rates, d, axis, threads=4)
    assert np.array_equal(a.signal, b.signal)


def test_extrema_positions_independent_of_seed(nv_levels, default_rates, balanced_drive):
    axis = TWO_PI * np.arange(-16.0, 16.0 + 1e-9, 0.5)
    positions = []
    for seed in (1, 2):
        spec = cpt_spectrum(nv_levels, balanced_drive, default_rates,
                            DiffusionModel(fwhm=TWO_PI * 140.0, n_samples=60, seed=seed),
                            axis, window=10.0)
        inverted = spec.signal.max() - spec.signal
        peaks, _ = find_peaks(inverted, prominence=0.3 * inverted.max())
        positions.append(spec.axis[peaks])
    assert np.array_equal(positions[0], positions[1])


def test_two_photon_axis_invariant_under_common_dipole_shift(nv_levels, default_rates):
    axis = TWO_PI * np.arange(8.0, 16.0 + 1e-9, 0.25)
    for delta_common in (TWO_PI * 50.0, TWO_PI * 120.0):
        drive = LambdaDriveParams(TWO_PI * 8.0, TWO_PI * 8.0,
                                  delta_common, delta_common)
        spec = sideband_spectrum(nv_levels, drive, default_rates, axis,
                                 pulse_duration=2.0)
        peak = spec.axis[np.argmax(spec.signal)] / TWO_PI
        assert peak == pytest.approx(12.0, abs=0.25)


def test_sideband_six_resolved_lines(nv_levels, default_rates):
    drive = LambdaDriveParams(TWO_PI * 8.0, TWO_PI * 8.0,
                              TWO_PI * 100.0, TWO_PI * 100.0)
    axis = TWO_PI * np.arange(-17.0, 17.0 + 1e-9, 0.1)
    spec = sideband_spectrum(nv_levels, drive, default_rates, axis,
                             pulse_duration=2.0,
                             diffusion=DiffusionModel(fwhm=TWO_PI * 140.0,
                                                      n_samples=60, seed=7,
                                                      stratified=True))
    span = spec.signal.max() - spec.signal.min()
    peaks, _ = find_peaks(spec.signal, prominence=0.05 * span)
    assert len(peaks) == 6
    centers = np.sort(spec.axis[peaks]) / TWO_PI
    for branch in (centers[:3], centers[3:]):
        assert np.diff(branch) == pytest.approx([2.2, 2.2], abs=0.1)


def test_sideband_signal_flat_zero_without_sideband_drive(nv_levels, default_rates):
    drive = LambdaDriveParams(0.0, TWO_PI * 8.0, TWO_PI * 100.0, TWO_PI * 100.0)
    axis = TWO_PI * np.linspace(-15, 15, 41)
    spec = sideband_spectrum(nv_levels, drive, default_rates, axis,
                             pulse_duration=2.0)
    assert np.abs(spec.signal).max() < 1e-12


def test_sideband_background_subtraction_reported(nv_levels, default_rates):
    drive = LambdaDriveParams(TWO_PI * 8.0, TWO_PI * 8.0,
                              TWO_PI * 100.0, TWO_PI * 100.0)
    axis = TWO_PI * np.linspace(9, 15, 25)
    with_bg = sideband_spectrum(nv_levels, drive, default_rates, axis,
                                pulse_duration=2.0, subtract_background=False)
    without_bg = sideband_spectrum(nv_levels, drive, default_rates, axis,
                                   pulse_duration=2.0)
    background = without_bg.metadata["background"]
    assert background > 0
    assert np.allclose(with_bg.signal - background, without_bg.signal, atol=1e-12)


def test_sideband_rejects_bad_duration(nv_levels, default_rates, balanced_drive):
    with pytest.raises(ValueError):
        sideband_spectrum(nv_levels, balanced_drive, default_rates,
                          TWO_PI * np.array([0.0, 1.0]), pulse_duration=-1.0)


def test_fit_cpt_rabi_self_consistent(nv_levels, default_rates):
    drive = LambdaDriveParams(TWO_PI * 8.0, TWO_PI * 8.0, 0.0, 0.0)
    diffusion = DiffusionModel(fwhm=TWO_PI * 140.0, n_samples=40, seed=5,
                               stratified=True)
    axis = TWO_PI * np.arange(-25.0, 25.0 + 1e-9, 0.25)
    spec = cpt_spectrum(nv_levels, drive, default_rates, diffusion, axis, window=10.0)
    recovered = fit_cpt_rabi(spec, nv_levels, default_rates, diffusion, window=10.0)
    assert recovered / TWO_PI == pytest.approx(8.0, rel=0.02)
