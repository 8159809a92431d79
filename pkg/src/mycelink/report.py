"""Per-recording analysis and the per-frequency transmission report.

One recording yields one :class:`RecordingAnalysis`; a set of them rolls
up into per-drive-frequency groups with four measures each:

* percent of replicates whose CSD peak is a harmonic of the drive,
* median and IQR of the response's dominant spectral amplitude,
* percent of replicates whose response fails to reject a unit root
  (non-stationary behavior),
* percent of replicates where the differenced stimulus Granger-causes
  the differenced response.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import DegenerateDataError
from .spectral import (
    WelchConfig,
    dominant_amplitude,
    dominant_frequency,
    recoverable_frequency,
    welch_csd,
)
from .stats import TestResult, adf_test, granger_causality, kruskal_wallis, median_iqr
from .timeseries import RecordingPair, cross_correlation_best_lag, difference

SUMMARY_LABEL = "median_iqr"


@dataclass(frozen=True)
class RecordingAnalysis:
    """Everything the report needs about one stimulus application."""

    replicate_id: str
    input_frequency_hz: float
    best_lag: int
    dominant_csd_hz: float
    dominant_amplitude_v: float
    recoverable: bool
    adf: TestResult
    granger: TestResult


@dataclass(frozen=True)
class FrequencyGroupReport:
    """Aggregated measures for all replicates at one drive frequency."""

    input_frequency_hz: float
    pct_recoverable: float
    median_amplitude_v: float
    iqr_amplitude_v: float
    pct_nonstationary: float
    pct_granger: float
    n: int


def analyze_recording(
    pair: RecordingPair,
    *,
    welch: WelchConfig | None = None,
    max_search_lag: int = 50,
    adf_max_lag: int | None = None,
    max_harmonic: int = 50,
) -> RecordingAnalysis:
    """Run the full single-recording pipeline.

    The Granger test runs on first-differenced channels so a unit root
    in the response cannot masquerade as predictive power, and its lag
    order is the cross-correlation best lag of those same differenced
    channels. Searching the raw channels instead would let the drive's
    periodic autocorrelation pick an arbitrary harmonic alignment.
    """
    dx = difference(pair.input)
    dy = difference(pair.output)
    best_lag = cross_correlation_best_lag(dx, dy, max_search_lag)
    csd = welch_csd(pair.input, pair.output, welch)
    dom = dominant_frequency(csd, exclude_dc=True)
    amp = dominant_amplitude(pair.output)
    adf = adf_test(pair.output, max_lag=adf_max_lag)
    granger = granger_causality(dx, dy, max_lag=best_lag)
    return RecordingAnalysis(
        replicate_id=pair.replicate_id,
        input_frequency_hz=pair.input_frequency_hz,
        best_lag=best_lag,
        dominant_csd_hz=dom,
        dominant_amplitude_v=amp,
        recoverable=recoverable_frequency(dom, pair.input_frequency_hz, max_harmonic),
        adf=adf,
        granger=granger,
    )


def build_report(records) -> list[FrequencyGroupReport]:
    """Group analysis records by drive frequency, ascending."""
    records = list(records)
    if not records:
        raise DegenerateDataError("no analysis records to report on")
    by_freq: dict[float, list[RecordingAnalysis]] = {}
    for rec in records:
        by_freq.setdefault(rec.input_frequency_hz, []).append(rec)

    groups = []
    for freq in sorted(by_freq):
        group = by_freq[freq]
        n = len(group)
        amp_median, amp_iqr = median_iqr([r.dominant_amplitude_v for r in group])
        groups.append(
            FrequencyGroupReport(
                input_frequency_hz=freq,
                pct_recoverable=100.0 * sum(r.recoverable for r in group) / n,
                median_amplitude_v=amp_median,
                iqr_amplitude_v=amp_iqr,
                pct_nonstationary=100.0 * sum(not r.adf.reject_at_05 for r in group) / n,
                pct_granger=100.0 * sum(r.granger.reject_at_05 for r in group) / n,
                n=n,
            )
        )
    return groups


def report_summary(groups) -> dict[str, tuple[float, float]]:
    """Column-wise median and IQR over the per-frequency groups."""
    groups = list(groups)
    if not groups:
        raise DegenerateDataError("no groups to summarize")
    columns = {
        "pct_rf": [g.pct_recoverable for g in groups],
        "median_amp_v": [g.median_amplitude_v for g in groups],
        "iqr_amp_v": [g.iqr_amplitude_v for g in groups],
        "pct_adf": [g.pct_nonstationary for g in groups],
        "pct_gc": [g.pct_granger for g in groups],
    }
    return {name: median_iqr(vals) for name, vals in columns.items()}


def amplitude_group_test(records) -> TestResult:
    """Kruskal-Wallis across drive-frequency groups on dominant amplitudes."""
    by_freq: dict[float, list[float]] = {}
    for rec in records:
        by_freq.setdefault(rec.input_frequency_hz, []).append(rec.dominant_amplitude_v)
    if len(by_freq) < 2:
        raise DegenerateDataError("need records at two or more drive frequencies")
    return kruskal_wallis([by_freq[f] for f in sorted(by_freq)])


def write_report_csv(groups, path, *, summary: bool = True, comments: list[str] | None = None) -> Path:
    """Write the per-frequency report.

    Data rows keep one frequency each; the optional summary row (labeled
    ``median_iqr`` in the input_hz column) shows each column's
    median (IQR) over the groups, and its n column holds the total
    record count. Amplitudes are in volts, as the column names say.
    """
    groups = list(groups)
    path = Path(path)
    with open(path, "w", newline="") as fh:
        for line in comments or []:
            fh.write(f"# {line}\n")
        fh.write("input_hz,pct_rf,median_amp_v,iqr_amp_v,pct_adf,pct_gc,n\n")
        for g in groups:
            fh.write(
                f"{g.input_frequency_hz:.12g},{g.pct_recoverable:.2f},"
                f"{g.median_amplitude_v:.6g},{g.iqr_amplitude_v:.6g},"
                f"{g.pct_nonstationary:.2f},{g.pct_granger:.2f},{g.n}\n"
            )
        if summary and groups:
            s = report_summary(groups)
            total = sum(g.n for g in groups)
            cells = [
                f"{s['pct_rf'][0]:.2f} ({s['pct_rf'][1]:.2f})",
                f"{s['median_amp_v'][0]:.6g} ({s['median_amp_v'][1]:.6g})",
                f"{s['iqr_amp_v'][0]:.6g} ({s['iqr_amp_v'][1]:.6g})",
                f"{s['pct_adf'][0]:.2f} ({s['pct_adf'][1]:.2f})",
                f"{s['pct_gc'][0]:.2f} ({s['pct_gc'][1]:.2f})",
            ]
            fh.write(f"{SUMMARY_LABEL}," + ",".join(cells) + f",{total}\n")
    return path


def write_details_csv(records, path) -> Path:
    """Per-recording drill-down companion to the grouped report."""
    path = Path(path)

    def fmt_p(p):
        return "" if p is None else f"{p:.6g}"

    with open(path, "w", newline="") as fh:
        fh.write(
            "replicate_id,input_hz,best_lag,dominant_csd_hz,recoverable,"
            "dominant_amp_v,adf_stat,adf_p,adf_reject,gc_stat,gc_p,gc_reject\n"
        )
        for r in sorted(records, key=lambda r: (r.input_frequency_hz, r.replicate_id)):
            fh.write(
                f"{r.replicate_id},{r.input_frequency_hz:.12g},{r.best_lag},"
                f"{r.dominant_csd_hz:.12g},{int(r.recoverable)},"
                f"{r.dominant_amplitude_v:.6g},"
                f"{r.adf.statistic:.6g},{fmt_p(r.adf.p_value)},{int(r.adf.reject_at_05)},"
                f"{r.granger.statistic:.6g},{fmt_p(r.granger.p_value)},{int(r.granger.reject_at_05)}\n"
            )
    return path
