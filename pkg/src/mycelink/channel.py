"""Synthetic transmission channel and corpus generation.

The reference transfer model is a sparse linear autoregression with a
short-memory pair of lags, a mid-range lag, and a long 27-step lag:

    y(k) = 0.33 y(k-1) + 0.21 y(k-2) + 0.20 y(k-9) - 0.15 y(k-27) + 0.21

Driving it through a small input coupling turns it into a two-channel
recording generator with a known ground truth, which is what the test
corpus and the identification examples are built on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, InvalidSpecError
from .narx.model import BasisSpec, NarxModel, RegressorTerm, TermFactor
from .narx.simulate import ar_fixed_point, free_run
from .timeseries import RecordingPair, StimulusSpec, TimeSeries, make_square_wave
from .validation import check_nonnegative_int, check_positive

DEFAULT_INPUT_COUPLING = ((1, 0.05),)


def reference_transfer_model() -> NarxModel:
    """The default channel: five-term linear AR with a 27-step memory tail."""
    lags_and_gains = ((1, 0.33), (2, 0.21), (9, 0.20), (27, -0.15))
    terms = [RegressorTerm()] + [
        RegressorTerm((TermFactor("y", lag),)) for lag, _ in lags_and_gains
    ]
    coefs = [0.21] + [gain for _, gain in lags_and_gains]
    return NarxModel(
        basis=BasisSpec("polynomial", 1),
        terms=tuple(terms),
        coefficients=tuple(coefs),
        max_output_lag=27,
        max_input_lag=0,
    )


@dataclass(frozen=True)
class ChannelSpec:
    """A channel is a transfer model plus how the stimulus couples into it.

    ``input_coupling`` lists (lag, gain) pairs added to the model as
    linear input terms. ``noise_sigma_v`` is the standard deviation of
    Gaussian measurement noise added to the recorded output only; it
    never feeds back into the recursion. ``initial_output_v`` seeds the
    history; None means start at the model's fixed point.
    """

    model: NarxModel = field(default_factory=reference_transfer_model)
    input_coupling: tuple[tuple[int, float], ...] = DEFAULT_INPUT_COUPLING
    noise_sigma_v: float = 0.0
    seed: int = 0
    initial_output_v: float | None = None

    def __post_init__(self):
        if not isinstance(self.model, NarxModel):
            raise InvalidSpecError("model must be a NarxModel")
        if self.model.has_input_terms:
            raise InvalidSpecError(
                "the transfer model must be autonomous; couple the input via input_coupling"
            )
        coupling = tuple((int(lag), float(gain)) for lag, gain in self.input_coupling)
        for lag, gain in coupling:
            if lag < 1:
                raise InvalidSpecError(f"coupling lag must be >= 1, got {lag}")
            if not np.isfinite(gain):
                raise InvalidSpecError("coupling gain must be finite")
        object.__setattr__(self, "input_coupling", coupling)
        if self.noise_sigma_v < 0 or not np.isfinite(self.noise_sigma_v):
            raise InvalidSpecError(f"noise_sigma_v must be >= 0, got {self.noise_sigma_v}")
        check_nonnegative_int(self.seed, "seed")

    def initial_value(self) -> float:
        if self.initial_output_v is not None:
            return float(self.initial_output_v)
        return ar_fixed_point(self.model)

    def coupled_model(self) -> NarxModel:
        """The transfer model with the input-coupling terms folded in."""
        if not self.input_coupling:
            return self.model
        lags = [lag for lag, _ in self.input_coupling]
        delay = min(lags)
        terms = list(self.model.terms) + [
            RegressorTerm((TermFactor("x", lag),)) for lag, _ in self.input_coupling
        ]
        coefs = list(self.model.coefficients) + [gain for _, gain in self.input_coupling]
        return NarxModel(
            basis=self.model.basis,
            terms=tuple(terms),
            coefficients=tuple(coefs),
            scaling=self.model.scaling,
            max_output_lag=self.model.max_output_lag,
            max_input_lag=max(lags) - delay + 1,
            input_delay=delay,
        )


def check_stability(spec: ChannelSpec) -> None:
    """Free-run the autonomous model long enough for instability to show.

    Ten times the memory depth from the starting value; divergence is
    reported with the step at which it tripped.
    """
    model = spec.model
    seed_len = model.min_history
    try:
        free_run(
            model,
            y_init=np.full(seed_len, spec.initial_value()),
            n_steps=seed_len + 10 * model.min_history,
        )
    except DivergenceError as exc:
        raise DivergenceError(
            f"channel model is unstable: autonomous run diverged at step {exc.step}",
            step=exc.step,
        ) from None


def simulate_channel(
    spec: ChannelSpec,
    stimulus: TimeSeries,
    input_frequency_hz: float,
    replicate_id: str = "r00",
) -> RecordingPair:
    """Push a stimulus through the channel and record both sides.

    The plate responds from its fixed point (or the given initial
    value): the first min_history samples of the output hold that seed
    value, everything after is the recursion, plus measurement noise
    when configured. ``input_frequency_hz`` tags the recording; it is
    metadata, not a constraint on the waveform.
    """
    check_stability(spec)
    model = spec.coupled_model()
    k0 = model.min_history
    if len(stimulus) <= k0:
        raise InvalidSpecError(
            f"stimulus of {len(stimulus)} samples is shorter than the channel memory ({k0})"
        )
    try:
        clean = free_run(
            model,
            x=stimulus.samples,
            y_init=np.full(k0, spec.initial_value()),
        )
    except DivergenceError as exc:
        raise DivergenceError(
            f"channel became unstable under this stimulus at step {exc.step}",
            step=exc.step,
        ) from None

    if spec.noise_sigma_v > 0.0:
        rng = np.random.default_rng(spec.seed)
        recorded = clean + rng.normal(0.0, spec.noise_sigma_v, clean.size)
    else:
        recorded = clean

    return RecordingPair(
        input=stimulus,
        output=TimeSeries(recorded, stimulus.sample_rate_hz, label=f"{stimulus.label}:response"),
        input_frequency_hz=input_frequency_hz,
        replicate_id=replicate_id,
    )


def make_corpus(
    frequencies_hz,
    replicates: int,
    *,
    duration_s: float,
    sample_rate_hz: float,
    amplitude_v: float = 5.0,
    model: NarxModel | None = None,
    input_coupling=DEFAULT_INPUT_COUPLING,
    noise_sigma_v: float = 0.0,
    seed_base: int = 0,
    initial_output_v: float | None = None,
) -> list[RecordingPair]:
    """Deterministic grid of recordings: every frequency times every replicate.

    Replicate j of frequency i gets seed ``seed_base + i * replicates + j``,
    so a corpus is reproducible as a whole and any single cell can be
    regenerated in isolation.
    """
    frequencies = [check_positive(f, "frequency") for f in frequencies_hz]
    if not frequencies:
        raise InvalidSpecError("no frequencies given")
    if replicates < 1:
        raise InvalidSpecError(f"replicates must be >= 1, got {replicates}")
    base_model = model if model is not None else reference_transfer_model()

    corpus = []
    for i, freq in enumerate(frequencies):
        stimulus = make_square_wave(
            StimulusSpec(freq, amplitude_v, duration_s, sample_rate_hz)
        )
        for j in range(replicates):
            spec = ChannelSpec(
                model=base_model,
                input_coupling=input_coupling,
                noise_sigma_v=noise_sigma_v,
                seed=seed_base + i * replicates + j,
                initial_output_v=initial_output_v,
            )
            corpus.append(
                simulate_channel(spec, stimulus, freq, replicate_id=f"r{j:02d}")
            )
    return corpus
