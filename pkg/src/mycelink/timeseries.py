"""Core time-series containers and sample-domain operations.

Everything downstream (spectra, hypothesis tests, identification) works on
the types in this module: a uniformly sampled :class:`TimeSeries` and an
input/output :class:`RecordingPair` tagged with its drive frequency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDataError, InvalidSpecError
from .validation import (
    as_float_array,
    check_fraction,
    check_positive,
    check_positive_int,
)


@dataclass(frozen=True)
class TimeSeries:
    """A uniformly sampled real-valued signal.

    Parameters
    ----------
    samples : array-like
        1-d sequence of finite float samples.
    sample_rate_hz : float
        Sampling rate, strictly positive.
    label : str
        Free-form tag carried through analysis outputs.
    """

    samples: np.ndarray
    sample_rate_hz: float
    label: str = ""

    def __post_init__(self):
        arr = as_float_array(self.samples, "samples")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate_hz", check_positive(self.sample_rate_hz, "sample_rate_hz"))
        if not isinstance(self.label, str):
            raise InvalidSpecError("label must be a string")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def with_samples(self, samples, label: str | None = None) -> "TimeSeries":
        """Copy of this series with new samples at the same rate."""
        return TimeSeries(samples, self.sample_rate_hz, self.label if label is None else label)


@dataclass(frozen=True)
class RecordingPair:
    """Aligned stimulus/response channels from one application of a drive signal."""

    input: TimeSeries
    output: TimeSeries
    input_frequency_hz: float
    replicate_id: str

    def __post_init__(self):
        if not isinstance(self.input, TimeSeries) or not isinstance(self.output, TimeSeries):
            raise InvalidSpecError("input and output must be TimeSeries")
        if len(self.input) != len(self.output):
            raise InvalidSpecError(
                f"channel length mismatch: input has {len(self.input)} samples, "
                f"output has {len(self.output)}"
            )
        rin, rout = self.input.sample_rate_hz, self.output.sample_rate_hz
        if abs(rin - rout) > 1e-9 * max(rin, rout):
            raise InvalidSpecError(f"channel rate mismatch: {rin} vs {rout} Hz")
        object.__setattr__(self, "input_frequency_hz", check_positive(self.input_frequency_hz, "input_frequency_hz"))
        if not isinstance(self.replicate_id, str) or not self.replicate_id:
            raise InvalidSpecError("replicate_id must be a non-empty string")

    @property
    def sample_rate_hz(self) -> float:
        return self.input.sample_rate_hz

    def __len__(self) -> int:
        return len(self.input)


@dataclass(frozen=True)
class StimulusSpec:
    """Description of a bipolar square-wave drive signal."""

    frequency_hz: float
    amplitude_v: float
    duration_s: float
    sample_rate_hz: float
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "frequency_hz", check_positive(self.frequency_hz, "frequency_hz"))
        object.__setattr__(self, "amplitude_v", check_positive(self.amplitude_v, "amplitude_v"))
        object.__setattr__(self, "duration_s", check_positive(self.duration_s, "duration_s"))
        object.__setattr__(self, "sample_rate_hz", check_positive(self.sample_rate_hz, "sample_rate_hz"))
        if self.frequency_hz >= self.sample_rate_hz / 2.0:
            raise InvalidSpecError(
                f"frequency_hz={self.frequency_hz} is at or above the Nyquist rate "
                f"({self.sample_rate_hz / 2.0} Hz)"
            )
        if self.n_samples < 1:
            raise InvalidSpecError("duration_s and sample_rate_hz give an empty signal")

    @property
    def n_samples(self) -> int:
        # floor, with a guard so 0.29 * 100 does not land on 28 through float fuzz
        return int(self.duration_s * self.sample_rate_hz + 1e-9)


def make_square_wave(spec: StimulusSpec) -> TimeSeries:
    """Synthesize the bipolar square wave described by ``spec``.

    The wave starts in its positive half-period at k = 0 and takes only the
    values +amplitude and -amplitude. Sign flips are placed from the exact
    phase k * f / fs rather than a running sample counter, so a non-integer
    number of samples per half-period does not accumulate drift.
    """
    k = np.arange(spec.n_samples, dtype=float)
    phase = (k * (spec.frequency_hz / spec.sample_rate_hz)) % 1.0
    samples = np.where(phase < 0.5, spec.amplitude_v, -spec.amplitude_v)
    return TimeSeries(samples, spec.sample_rate_hz, spec.label or f"square {spec.frequency_hz:g} Hz")


def difference(ts: TimeSeries, order: int = 1) -> TimeSeries:
    """First (or higher-order) difference of a series; drops ``order`` samples."""
    order = check_positive_int(order, "order")
    if order >= len(ts):
        raise DegenerateDataError(
            f"cannot take order-{order} difference of a {len(ts)}-sample series"
        )
    return ts.with_samples(np.diff(ts.samples, n=order))


def cross_correlation_best_lag(x: TimeSeries, y: TimeSeries, max_search_lag: int) -> int:
    """Lag in [1, max_search_lag] at which y is most correlated with delayed x.

    Uses the magnitude of the Pearson correlation between y[k] and x[k - L],
    with k running over the same fixed window (max_search_lag onward) for
    every lag. The fixed window matters: when x repeats with an integer
    sample period, shifting by a whole period reproduces the same lagged
    vector exactly, so the scores tie exactly instead of being separated
    by window edge effects. Ties (within 1e-9 relative, which covers the
    exact case) resolve to the smallest lag.
    """
    xa = as_float_array(x, "x")
    ya = as_float_array(y, "y")
    if xa.size != ya.size:
        raise InvalidSpecError("x and y must have equal length")
    max_search_lag = check_positive_int(max_search_lag, "max_search_lag")
    if xa.size - max_search_lag < 2:
        raise InvalidSpecError(
            f"max_search_lag={max_search_lag} leaves no window for {xa.size}-sample series"
        )

    rows = np.arange(max_search_lag, xa.size)
    b = ya[rows]
    b = b - b.mean()
    bb = float(b @ b)
    scores = np.empty(max_search_lag)
    for lag in range(1, max_search_lag + 1):
        a = xa[rows - lag]
        a = a - a.mean()
        denom = np.sqrt(float(a @ a) * bb)
        scores[lag - 1] = abs(float(a @ b)) / denom if denom > 0.0 else 0.0

    best = scores.max()
    if best == 0.0:
        raise DegenerateDataError("no lag shows any correlation; is a channel constant?")
    return int(np.flatnonzero(scores >= best * (1.0 - 1e-9))[0]) + 1


def split_train_test(ts: TimeSeries, train_fraction: float = 0.8) -> tuple[TimeSeries, TimeSeries]:
    """Split a series into contiguous train/test parts, train first.

    The train part gets floor(n * train_fraction) samples. Both parts must
    come out non-empty.
    """
    train_fraction = check_fraction(train_fraction, "train_fraction")
    n_train = int(len(ts) * train_fraction)
    if n_train < 1 or n_train >= len(ts):
        raise DegenerateDataError(
            f"train_fraction={train_fraction} leaves an empty side of a {len(ts)}-sample series"
        )
    return (
        ts.with_samples(ts.samples[:n_train]),
        ts.with_samples(ts.samples[n_train:]),
    )
