"""Frequency-domain estimates and the recovered-frequency decision rule.

Two estimators are provided: a one-sided amplitude spectrum of a single
series, and a Welch-averaged cross-spectral density between stimulus and
response. The CSD behaves as a matched filter for a shared harmonic comb,
which is what makes its peak location a transmission indicator.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DegenerateDataError, InvalidSpecError, RecordingParseError
from .timeseries import TimeSeries
from .validation import as_float_array, check_positive_int


class SpectrumKind(str, Enum):
    AMPLITUDE = "AmplitudeSpectrum"
    CSD = "CSD"


@dataclass(frozen=True)
class SpectralEstimate:
    """One-sided spectrum: ascending frequencies with nonnegative magnitudes."""

    frequencies_hz: np.ndarray
    magnitudes: np.ndarray
    kind: SpectrumKind

    def __post_init__(self):
        f = as_float_array(self.frequencies_hz, "frequencies_hz")
        m = as_float_array(self.magnitudes, "magnitudes")
        if f.size != m.size:
            raise InvalidSpecError("frequency and magnitude arrays must match in length")
        if np.any(np.diff(f) <= 0):
            raise InvalidSpecError("frequencies must be strictly ascending")
        if f[0] < 0:
            raise InvalidSpecError("frequencies must be nonnegative")
        if np.any(m < 0):
            raise InvalidSpecError("magnitudes must be nonnegative")
        f.flags.writeable = False
        m.flags.writeable = False
        object.__setattr__(self, "frequencies_hz", f)
        object.__setattr__(self, "magnitudes", m)
        object.__setattr__(self, "kind", SpectrumKind(self.kind))

    def __len__(self) -> int:
        return self.frequencies_hz.size


@dataclass(frozen=True)
class WelchConfig:
    """Segmenting parameters for Welch averaging."""

    segment_length: int = 8192
    overlap_fraction: float = 0.5
    window: str = "hann"

    def __post_init__(self):
        object.__setattr__(self, "segment_length", check_positive_int(self.segment_length, "segment_length"))
        if self.segment_length < 2:
            raise InvalidSpecError("segment_length must be at least 2")
        ov = float(self.overlap_fraction)
        if not (0.0 <= ov < 1.0):
            raise InvalidSpecError(f"overlap_fraction must lie in [0, 1), got {ov!r}")
        object.__setattr__(self, "overlap_fraction", ov)
        if self.window not in ("hann", "rectangular"):
            raise InvalidSpecError(f"window must be 'hann' or 'rectangular', got {self.window!r}")


def _window(kind: str, n: int) -> np.ndarray:
    if kind == "hann":
        # periodic form, so segment averaging keeps its flat passband
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    return np.ones(n)


def round_sigfigs(value: float, n_figures: int = 2) -> float:
    """Round to ``n_figures`` significant figures, halves away from zero."""
    check_positive_int(n_figures, "n_figures")
    v = float(value)
    if not math.isfinite(v):
        raise InvalidSpecError(f"cannot round non-finite value {value!r}")
    if v == 0.0:
        return 0.0
    exponent = math.floor(math.log10(abs(v)))
    quantum = 10.0 ** (exponent - n_figures + 1)
    return math.copysign(math.floor(abs(v) / quantum + 0.5) * quantum, v)


def dft_amplitude_spectrum(ts: TimeSeries) -> SpectralEstimate:
    """One-sided amplitude spectrum of a series.

    Interior bins carry 2|X_m|/N so a unit-amplitude sinusoid on a bin
    reads 1.0; the DC bin and (for even N) the Nyquist bin are not doubled.
    """
    x = as_float_array(ts, "samples", min_length=2)
    n = x.size
    spectrum = np.abs(np.fft.rfft(x)) / n
    spectrum[1:] *= 2.0
    if n % 2 == 0:
        spectrum[-1] /= 2.0
    freqs = np.fft.rfftfreq(n, d=1.0 / ts.sample_rate_hz)
    return SpectralEstimate(freqs, spectrum, SpectrumKind.AMPLITUDE)


def welch_csd(x: TimeSeries, y: TimeSeries, config: WelchConfig | None = None) -> SpectralEstimate:
    """Welch-averaged cross-spectral density magnitude between two series.

    Segments are windowed, overlapped, transformed, and the per-segment
    cross spectra conj(X)*Y are averaged before taking the magnitude.
    Density normalization 1/(fs * sum(w^2)) with one-sided doubling,
    matching the usual PSD convention when x is y.

    A series shorter than one segment is processed as a single truncated
    segment. x and y must share length and sample rate.
    """
    cfg = config or WelchConfig()
    xa = as_float_array(x, "x", min_length=2)
    ya = as_float_array(y, "y", min_length=2)
    if xa.size != ya.size:
        raise InvalidSpecError("x and y must have equal length")
    fs_x = getattr(x, "sample_rate_hz", None)
    fs_y = getattr(y, "sample_rate_hz", None)
    if fs_x is None or fs_y is None:
        raise InvalidSpecError("welch_csd needs TimeSeries inputs carrying a sample rate")
    if abs(fs_x - fs_y) > 1e-9 * max(fs_x, fs_y):
        raise InvalidSpecError(f"sample rate mismatch: {fs_x} vs {fs_y} Hz")
    fs = float(fs_x)

    nper = min(cfg.segment_length, xa.size)
    step = nper - int(nper * cfg.overlap_fraction)
    if step < 1:
        step = 1
    w = _window(cfg.window, nper)
    scale = 1.0 / (fs * float(w @ w))

    acc = np.zeros(nper // 2 + 1, dtype=complex)
    n_segments = 0
    for start in range(0, xa.size - nper + 1, step):
        seg_x = np.fft.rfft(xa[start : start + nper] * w)
        seg_y = np.fft.rfft(ya[start : start + nper] * w)
        acc += np.conj(seg_x) * seg_y
        n_segments += 1
    acc /= n_segments

    magnitude = np.abs(acc) * scale
    magnitude[1:] *= 2.0
    if nper % 2 == 0:
        magnitude[-1] /= 2.0
    freqs = np.fft.rfftfreq(nper, d=1.0 / fs)
    return SpectralEstimate(freqs, magnitude, SpectrumKind.CSD)


def dominant_frequency(estimate: SpectralEstimate, exclude_dc: bool = True) -> float:
    """Frequency of the largest-magnitude bin, rounded to two significant figures.

    Exact magnitude ties resolve to the lowest frequency. The DC bin is
    excluded by default since a response offset says nothing about
    transmission.
    """
    freqs = estimate.frequencies_hz
    mags = estimate.magnitudes
    if exclude_dc and freqs.size and freqs[0] == 0.0:
        freqs = freqs[1:]
        mags = mags[1:]
    if freqs.size == 0:
        raise DegenerateDataError("spectrum has no usable bins")
    if np.all(mags == 0.0):
        raise DegenerateDataError("spectrum is identically zero, no dominant bin")
    return round_sigfigs(float(freqs[int(np.argmax(mags))]), 2)


def dominant_amplitude(ts: TimeSeries) -> float:
    """Largest non-DC bin of the amplitude spectrum, in the series' units."""
    est = dft_amplitude_spectrum(ts)
    mags = est.magnitudes[1:]
    if mags.size == 0 or np.all(mags == 0.0):
        raise DegenerateDataError("series has no non-DC spectral content")
    return float(mags.max())


def recoverable_frequency(dominant_hz: float, input_hz: float, max_harmonic: int = 50) -> bool:
    """Decide whether a dominant response frequency is a harmonic of the drive.

    Both frequencies are rounded to two significant figures; the response
    counts as recovered when the rounded dominant is an integer multiple
    (order 1..max_harmonic) of the rounded drive, to within 1e-9 relative.
    """
    check_positive_int(max_harmonic, "max_harmonic")
    if input_hz <= 0:
        raise InvalidSpecError(f"input_hz must be positive, got {input_hz!r}")
    if dominant_hz <= 0:
        return False
    ratio = round_sigfigs(dominant_hz, 2) / round_sigfigs(input_hz, 2)
    order = round(ratio)
    if order < 1 or order > max_harmonic:
        return False
    return abs(ratio - order) <= 1e-9 * order


def write_spectrum(estimate: SpectralEstimate, path) -> Path:
    """Export a spectrum as CSV with a ``# kind=...`` comment header."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(f"# kind={estimate.kind.value}\n")
        fh.write("frequency_hz,magnitude\n")
        for f, m in zip(estimate.frequencies_hz, estimate.magnitudes):
            fh.write(f"{f:.12g},{m:.12g}\n")
    return path


def read_spectrum(path) -> SpectralEstimate:
    """Read back a spectrum CSV written by :func:`write_spectrum`."""
    path = Path(path)
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if not first.startswith("# kind="):
            raise RecordingParseError(f"{path}: missing '# kind=' header line")
        kind = first.split("=", 1)[1]
        try:
            kind = SpectrumKind(kind)
        except ValueError:
            raise RecordingParseError(f"{path}: unknown spectrum kind {kind!r}") from None
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["frequency_hz", "magnitude"]:
            raise RecordingParseError(f"{path}: expected 'frequency_hz,magnitude' header")
        rows = [(float(a), float(b)) for a, b in reader]
    if not rows:
        raise RecordingParseError(f"{path}: spectrum file has no rows")
    f, m = zip(*rows)
    return SpectralEstimate(np.array(f), np.array(m), kind)
