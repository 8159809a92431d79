import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal

from mycelink import (
    DegenerateDataError,
    InvalidSpecError,
    SpectralEstimate,
    SpectrumKind,
    StimulusSpec,
    TimeSeries,
    WelchConfig,
    dft_amplitude_spectrum,
    dominant_amplitude,
    dominant_frequency,
    make_square_wave,
    read_spectrum,
    recoverable_frequency,
    round_sigfigs,
    welch_csd,
    write_spectrum,
)


def direct_amplitude_spectrum(x: np.ndarray) -> np.ndarray:
    """Quadratic-time transform straight from the definition."""
    n = x.size
    k = np.arange(n)
    m = np.arange(n // 2 + 1)
    basis = np.exp(-2j * np.pi * np.outer(m, k) / n)
    mags = np.abs(basis @ x) / n
    mags[1:] *= 2.0
    if n % 2 == 0:
        mags[-1] /= 2.0
    return mags


class TestAmplitudeSpectrum:
    def test_matches_direct_transform(self, rng):
        for n in (2, 3, 16, 47, 256, 1001):
            x = rng.normal(0, 1, n)
            est = dft_amplitude_spectrum(TimeSeries(x, 100.0))
            oracle = direct_amplitude_spectrum(x)
            assert np.max(np.abs(est.magnitudes - oracle)) <= 1e-6 * max(oracle.max(), 1e-30)

    def test_on_bin_sinusoid_reads_unit_amplitude(self):
        fs, n = 1000.0, 1000
        t = np.arange(n) / fs
        x = 1.0 * np.sin(2 * np.pi * 50 * t) + 0.25
        est = dft_amplitude_spectrum(TimeSeries(x, fs))
        assert est.frequencies_hz[50] == 50.0
        assert est.magnitudes[50] == pytest.approx(1.0, abs=1e-9)
        assert est.magnitudes[0] == pytest.approx(0.25, abs=1e-9)  # DC not doubled

    def test_nyquist_bin_not_doubled(self):
        x = np.array([1.0, -1.0, 1.0, -1.0])
        est = dft_amplitude_spectrum(TimeSeries(x, 4.0))
        assert est.magnitudes[-1] == pytest.approx(1.0)

    def test_parseval(self, rng):
        x = rng.normal(0, 1, 512)
        est = dft_amplitude_spectrum(TimeSeries(x, 1.0))
        # reassemble power from the one-sided amplitudes
        a = est.magnitudes.copy()
        power = a[0] ** 2 + 0.5 * np.sum(a[1:-1] ** 2) + a[-1] ** 2
        assert power == pytest.approx(np.mean(x**2), rel=1e-9)

    def test_too_short(self):
        with pytest.raises(DegenerateDataError):
            dft_amplitude_spectrum(TimeSeries([1.0], 1.0))


class TestWelch:
    def test_cross_density_matches_scipy(self, rng):
        fs = 2000.0
        x = rng.normal(0, 1, 4096)
        y = 0.4 * x + rng.normal(0, 1, 4096)
        mine = welch_csd(TimeSeries(x, fs), TimeSeries(y, fs), WelchConfig(segment_length=512))
        _, ref = signal.csd(x, y, fs=fs, window="hann", nperseg=512, noverlap=256, detrend=False)
        assert np.allclose(mine.magnitudes, np.abs(ref), rtol=1e-10, atol=1e-15)

    def test_auto_case_is_welch_psd(self, rng):
        fs = 500.0
        x = rng.normal(0, 1, 2048)
        ts = TimeSeries(x, fs)
        mine = welch_csd(ts, ts, WelchConfig(segment_length=256))
        freqs, ref = signal.welch(x, fs=fs, window="hann", nperseg=256, noverlap=128, detrend=False)
        assert np.allclose(mine.frequencies_hz, freqs)
        assert np.allclose(mine.magnitudes, ref, rtol=1e-10)

    def test_rectangular_window(self, rng):
        fs = 100.0
        x = rng.normal(0, 1, 1024)
        ts = TimeSeries(x, fs)
        mine = welch_csd(ts, ts, WelchConfig(segment_length=128, window="rectangular"))
        _, ref = signal.welch(x, fs=fs, window="boxcar", nperseg=128, noverlap=64, detrend=False)
        assert np.allclose(mine.magnitudes, ref, rtol=1e-10)

    def test_square_drive_peak_sits_on_fundamental(self):
        # matched-filter behavior: with y a delayed and attenuated copy of
        # a 900 Hz square drive, the averaged cross spectrum peaks at the
        # bin the full-length direct transform puts the fundamental in
        fs = 50_000.0
        x = make_square_wave(StimulusSpec(900, 5.0, 0.5, fs))
        y_arr = np.zeros(len(x))
        y_arr[3:] = 0.3 * x.samples[:-3]
        y = TimeSeries(y_arr, fs)
        est = welch_csd(x, y, WelchConfig(segment_length=8192))
        peak_hz = est.frequencies_hz[np.argmax(est.magnitudes[1:]) + 1]
        # oracle: fundamental of the drive itself, full-series transform
        drive = dft_amplitude_spectrum(x)
        drive_hz = drive.frequencies_hz[np.argmax(drive.magnitudes[1:]) + 1]
        bin_width = est.frequencies_hz[1]
        assert abs(peak_hz - drive_hz) <= bin_width / 2 + 1e-9
        assert abs(drive_hz - 900.0) <= 1.0

    def test_shorter_than_segment_uses_one_segment(self, rng):
        fs = 100.0
        x = rng.normal(0, 1, 300)
        ts = TimeSeries(x, fs)
        est = welch_csd(ts, ts, WelchConfig(segment_length=8192))
        assert len(est) == 300 // 2 + 1

    def test_rate_mismatch(self, rng):
        a = TimeSeries(rng.normal(0, 1, 64), 10.0)
        b = TimeSeries(rng.normal(0, 1, 64), 20.0)
        with pytest.raises(InvalidSpecError):
            welch_csd(a, b)

    def test_config_validation(self):
        with pytest.raises(InvalidSpecError):
            WelchConfig(segment_length=1)
        with pytest.raises(InvalidSpecError):
            WelchConfig(overlap_fraction=1.0)
        with pytest.raises(InvalidSpecError):
            WelchConfig(window="hamming")


class TestDominant:
    def test_rounding_to_two_figures(self):
        est = SpectralEstimate([0.0, 10.0, 945.0, 1000.0], [0.0, 1.0, 5.0, 2.0], SpectrumKind.AMPLITUDE)
        assert dominant_frequency(est) == 950.0

    def test_tie_takes_lowest_frequency(self):
        est = SpectralEstimate([0.0, 10.0, 20.0], [0.0, 3.0, 3.0], SpectrumKind.AMPLITUDE)
        assert dominant_frequency(est) == 10.0

    def test_dc_excluded_by_default(self):
        est = SpectralEstimate([0.0, 10.0], [100.0, 1.0], SpectrumKind.AMPLITUDE)
        assert dominant_frequency(est) == 10.0
        assert dominant_frequency(est, exclude_dc=False) == 0.0

    def test_scaling_invariance(self, rng):
        mags = rng.uniform(0.1, 1.0, 32)
        freqs = np.arange(32.0)
        a = SpectralEstimate(freqs, mags, SpectrumKind.CSD)
        b = SpectralEstimate(freqs, 7.5 * mags, SpectrumKind.CSD)
        assert dominant_frequency(a) == dominant_frequency(b)

    def test_all_zero_rejected(self):
        est = SpectralEstimate([0.0, 1.0, 2.0], [5.0, 0.0, 0.0], SpectrumKind.AMPLITUDE)
        with pytest.raises(DegenerateDataError):
            dominant_frequency(est)

    def test_dominant_amplitude_of_square(self):
        # fundamental of an on-bin bipolar square reads 4A/pi
        wave = make_square_wave(StimulusSpec(100, 5.0, 0.5, 10_000))
        assert dominant_amplitude(wave) == pytest.approx(4 * 5.0 / np.pi, rel=1e-3)


class TestRoundSigfigs:
    @pytest.mark.parametrize(
        "value,expected",
        [
            (945.0, 950.0),
            (-945.0, -950.0),
            (944.9, 940.0),
            (97.65625, 98.0),
            (0.0945, 0.095),
            (0.0, 0.0),
            (1049.0, 1000.0),
            (1050.0, 1100.0),
            (99.999, 100.0),
        ],
    )
    def test_cases(self, value, expected):
        assert round_sigfigs(value, 2) == pytest.approx(expected, rel=1e-12)

    def test_more_figures(self):
        assert round_sigfigs(123.456, 4) == pytest.approx(123.5)

    @given(st.floats(min_value=1e-6, max_value=1e9))
    @settings(max_examples=80, deadline=None)
    def test_idempotent(self, value):
        once = round_sigfigs(value, 2)
        assert round_sigfigs(once, 2) == once

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidSpecError):
            round_sigfigs(np.inf, 2)


class TestRecoverable:
    def test_exact_fundamental(self):
        assert recoverable_frequency(900.0, 900.0)

    @given(st.floats(min_value=0.001, max_value=1e7))
    @settings(max_examples=80, deadline=None)
    def test_any_drive_recovers_itself(self, f):
        assert recoverable_frequency(f, f)

    def test_harmonics(self):
        assert recoverable_frequency(4500.0, 900.0)  # order 5
        assert recoverable_frequency(5000.0, 100.0)  # order 50
        assert not recoverable_frequency(5100.0, 100.0)  # order 51 past the cap
        assert not recoverable_frequency(970.0, 100.0)
        assert not recoverable_frequency(450.0, 900.0)  # subharmonic

    def test_rounding_happens_before_the_ratio(self):
        # 896 rounds to 900, which is the drive
        assert recoverable_frequency(896.0, 900.0)
        assert not recoverable_frequency(860.0, 900.0)

    def test_nonpositive(self):
        assert not recoverable_frequency(0.0, 100.0)
        with pytest.raises(InvalidSpecError):
            recoverable_frequency(100.0, 0.0)


class TestSpectrumCsv:
    def test_roundtrip_with_kind_header(self, tmp_path, rng):
        est = dft_amplitude_spectrum(TimeSeries(rng.normal(0, 1, 100), 50.0))
        path = write_spectrum(est, tmp_path / "spec.csv")
        first = path.read_text().splitlines()[0]
        assert first == "# kind=AmplitudeSpectrum"
        back = read_spectrum(path)
        assert back.kind is SpectrumKind.AMPLITUDE
        assert np.allclose(back.frequencies_hz, est.frequencies_hz, rtol=1e-9)
        assert np.allclose(back.magnitudes, est.magnitudes, rtol=1e-9)

    def test_csd_kind_label(self, tmp_path, rng):
        ts = TimeSeries(rng.normal(0, 1, 128), 10.0)
        est = welch_csd(ts, ts, WelchConfig(segment_length=64))
        path = write_spectrum(est, tmp_path / "csd.csv")
        assert path.read_text().startswith("# kind=CSD\n")


class TestEstimateValidation:
    def test_descending_frequencies_rejected(self):
        with pytest.raises(InvalidSpecError):
            SpectralEstimate([1.0, 0.5], [1.0, 1.0], SpectrumKind.CSD)

    def test_negative_magnitude_rejected(self):
        with pytest.raises(InvalidSpecError):
            SpectralEstimate([0.0, 1.0], [1.0, -1.0], SpectrumKind.CSD)

    def test_length_mismatch(self):
        with pytest.raises(InvalidSpecError):
            SpectralEstimate([0.0, 1.0], [1.0], SpectrumKind.CSD)
