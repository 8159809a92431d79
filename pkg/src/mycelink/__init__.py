"""Transmission analysis and system identification for two-channel recordings.

The package splits into five layers:

* ``timeseries`` / ``io``: sampled-signal containers and the recording
  CSV format,
* ``spectral``: amplitude spectra, Welch cross-spectral density, and the
  recovered-frequency rule,
* ``stats`` / ``report``: hypothesis tests and the per-frequency rollup,
* ``narx``: FROLS-based nonlinear ARX identification and simulation,
* ``channel``: a synthetic channel for generating ground-truth corpora.
"""

from .errors import (
    DegenerateDataError,
    DivergenceError,
    InvalidSpecError,
    MycelinkError,
    NoViableModelError,
    RecordingParseError,
    SingularRegressionError,
)
from .timeseries import (
    RecordingPair,
    StimulusSpec,
    TimeSeries,
    cross_correlation_best_lag,
    difference,
    make_square_wave,
    split_train_test,
)
from .io import load_recording, read_stimulus, write_recording, write_stimulus
from .spectral import (
    SpectralEstimate,
    SpectrumKind,
    WelchConfig,
    dft_amplitude_spectrum,
    dominant_amplitude,
    dominant_frequency,
    read_spectrum,
    recoverable_frequency,
    round_sigfigs,
    welch_csd,
    write_spectrum,
)
from .stats import (
    TestResult,
    adf_test,
    anderson_darling,
    granger_causality,
    kruskal_wallis,
    median_iqr,
)
from .report import (
    FrequencyGroupReport,
    RecordingAnalysis,
    amplitude_group_test,
    analyze_recording,
    build_report,
    report_summary,
    write_details_csv,
    write_report_csv,
)
from .narx import (
    BasisSpec,
    FitConfig,
    FrolsNarx,
    NarxModel,
    RegressorTerm,
    TermFactor,
    build_candidates,
    default_grid,
    estimate_els,
    fit_narx,
    fit_narx_multi,
    free_run,
    frols_select,
    grid_search,
    predict_one_step,
    rrse,
)
from .channel import (
    ChannelSpec,
    check_stability,
    make_corpus,
    reference_transfer_model,
    simulate_channel,
)

__version__ = "0.1.0"
