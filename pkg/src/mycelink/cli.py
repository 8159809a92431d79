"""Command-line front end.

Subcommands: generate (stimuli and synthetic corpora), analyze (batch
recordings into the per-frequency report), identify (grid-searched model
fit), simulate (one channel run), report (single-recording deep dive).

Exit codes: 0 success, 1 usage or configuration problem, 2 unusable
data, 3 numerical failure. Logs go to stderr as ``level=.. msg=..``
lines; machine-readable output goes to stdout only with --stdout.
"""

from __future__ import annotations

import argparse
import glob as globmod
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .errors import (
    DegenerateDataError,
    DivergenceError,
    InvalidSpecError,
    MycelinkError,
    NoViableModelError,
    RecordingParseError,
    SingularRegressionError,
)
from .io import load_recording, read_stimulus, write_recording, write_stimulus
from .narx.grid import default_grid, grid_search, write_scores_csv
from .narx.model import BasisSpec, FitConfig, NarxModel
from .report import (
    amplitude_group_test,
    analyze_recording,
    build_report,
    write_details_csv,
    write_report_csv,
)
from .channel import (
    DEFAULT_INPUT_COUPLING,
    ChannelSpec,
    make_corpus,
    reference_transfer_model,
    simulate_channel,
)
from .spectral import (
    WelchConfig,
    dft_amplitude_spectrum,
    dominant_frequency,
    recoverable_frequency,
    welch_csd,
    write_spectrum,
)
from .timeseries import StimulusSpec, cross_correlation_best_lag, make_square_wave

log = logging.getLogger("mycelink")

DEFAULT_FREQUENCIES = list(range(100, 1001, 100)) + list(range(2000, 10001, 1000))

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    # usage problems are exit code 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"level=error msg={message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _setup_logging(verbose: bool):
    for level, name in ((logging.DEBUG, "debug"), (logging.INFO, "info"),
                        (logging.WARNING, "warning"), (logging.ERROR, "error")):
        logging.addLevelName(level, name)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else logging.INFO,
        format="level=%(levelname)s msg=%(message)s",
    )


def _parse_frequencies(text: str) -> list[float]:
    freqs: list[float] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            pieces = part.split(":")
            if len(pieces) != 3:
                raise InvalidSpecError(f"range must be start:stop:step, got {part!r}")
            start, stop, step = (float(p) for p in pieces)
            if step <= 0 or stop < start:
                raise InvalidSpecError(f"bad frequency range {part!r}")
            f = start
            while f <= stop + 1e-9:
                freqs.append(round(f, 9))
                f += step
        else:
            freqs.append(float(part))
    if not freqs:
        raise InvalidSpecError("no frequencies parsed")
    return freqs


def _parse_coupling(text: str) -> tuple[tuple[int, float], ...]:
    pairs = []
    for part in text.split(","):
        lag, _, gain = part.partition(":")
        if not gain:
            raise InvalidSpecError(f"coupling must be lag:gain, got {part!r}")
        pairs.append((int(lag), float(gain)))
    return tuple(pairs)


def _parse_int_list(text: str) -> list[int]:
    return [int(p) for p in text.split(",") if p.strip()]


def _expand_paths(patterns) -> list[Path]:
    paths: list[Path] = []
    for pattern in patterns:
        hits = sorted(globmod.glob(pattern))
        if hits:
            paths.extend(Path(h) for h in hits)
        else:
            paths.append(Path(pattern))
    return paths


def _welch_from_args(args) -> WelchConfig:
    return WelchConfig(
        segment_length=args.welch_segment,
        overlap_fraction=args.welch_overlap,
        window=args.welch_window,
    )


def _add_welch_args(p):
    p.add_argument("--welch-segment", type=int, default=8192, help="Welch segment length")
    p.add_argument("--welch-overlap", type=float, default=0.5, help="segment overlap fraction")
    p.add_argument("--welch-window", default="hann", choices=["hann", "rectangular"])


def _add_meta_args(p):
    p.add_argument("--rate", type=float, default=None, help="expected sample rate (checked against the time column)")
    p.add_argument("--input-freq", type=float, default=None, help="drive frequency when no sidecar is present")
    p.add_argument("--replicate-id", default=None, help="replicate id when no sidecar is present")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- generate

def cmd_generate(args) -> int:
    out = _out_dir(args)
    written: list[Path] = []
    if args.mode == "square":
        if args.freq is None:
            raise InvalidSpecError("generate square needs --freq")
        spec = StimulusSpec(args.freq, args.amplitude, args.duration, args.rate)
        name = args.name or f"square_f{args.freq:g}hz"
        written.append(write_stimulus(make_square_wave(spec), out / f"{name}.csv"))
        log.info("wrote stimulus %s (%d samples)", written[-1], spec.n_samples)
    else:
        freqs = _parse_frequencies(args.freqs)
        model = NarxModel.load(args.model) if args.model else None
        corpus = make_corpus(
            freqs,
            args.replicates,
            duration_s=args.duration,
            sample_rate_hz=args.rate,
            amplitude_v=args.amplitude,
            model=model,
            input_coupling=_parse_coupling(args.coupling),
            noise_sigma_v=args.noise_sigma,
            seed_base=args.seed_base,
        )
        for pair in corpus:
            name = f"f{pair.input_frequency_hz:g}hz_{pair.replicate_id}.csv"
            written.append(write_recording(pair, out / name))
        log.info("wrote %d recordings to %s", len(written), out)
    if args.stdout:
        for path in written:
            print(path)
    return EXIT_OK


# ----------------------------------------------------------------- analyze

def cmd_analyze(args) -> int:
    paths = _expand_paths(args.recordings)
    if not paths:
        raise InvalidSpecError("no recording files given")
    out = _out_dir(args)
    welch = _welch_from_args(args)

    def one(path: Path):
        pair = load_recording(
            path,
            sample_rate_hz=args.rate,
            input_frequency_hz=args.input_freq,
            replicate_id=args.replicate_id,
        )
        return analyze_recording(
            pair,
            welch=welch,
            max_search_lag=args.max_search_lag,
            adf_max_lag=args.adf_max_lag,
            max_harmonic=args.max_harmonic,
        )

    records = []
    skipped = 0
    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            futures = {path: pool.submit(one, path) for path in paths}
        for path, fut in futures.items():
            try:
                records.append(fut.result())
            except MycelinkError as exc:
                skipped += 1
                log.warning("skipping %s: %s", path, exc)
    else:
        for path in paths:
            try:
                records.append(one(path))
            except MycelinkError as exc:
                skipped += 1
                log.warning("skipping %s: %s", path, exc)

    if skipped > len(paths) / 2.0:
        log.error("%d of %d recordings unusable", skipped, len(paths))
        return EXIT_DATA
    if not records:
        log.error("no recordings analyzed")
        return EXIT_DATA

    groups = build_report(records)
    comments = []
    try:
        kw = amplitude_group_test(records)
        comments.append(
            f"kruskal_wallis_amplitude_between_groups: H={kw.statistic:.6g} "
            f"p={kw.p_value:.6g} reject_at_05={kw.reject_at_05}"
        )
    except DegenerateDataError:
        pass
    report_path = write_report_csv(groups, out / "report.csv", comments=comments)
    details_path = write_details_csv(records, out / "details.csv")
    log.info("analyzed %d recordings (%d skipped); wrote %s and %s",
             len(records), skipped, report_path, details_path)
    if args.stdout:
        sys.stdout.write(report_path.read_text())
    return EXIT_OK


# ---------------------------------------------------------------- identify

def cmd_identify(args) -> int:
    train_paths = _expand_paths(args.train)
    val_paths = _expand_paths(args.validation) if args.validation else []
    if not train_paths:
        raise InvalidSpecError("no training recordings given")
    out = _out_dir(args)

    train_pairs = [load_recording(p, sample_rate_hz=args.rate,
                                  input_frequency_hz=args.input_freq,
                                  replicate_id=args.replicate_id) for p in train_paths]
    val_pairs = [load_recording(p, sample_rate_hz=args.rate,
                                input_frequency_hz=args.input_freq,
                                replicate_id=args.replicate_id) for p in val_paths]

    if args.max_output_lag is not None:
        lag_budget = args.max_output_lag
    else:
        per_pair = [
            cross_correlation_best_lag(p.input, p.output,
                                       min(args.max_search_lag, len(p) - 1))
            for p in train_pairs
        ]
        lag_budget = min(30, max(per_pair))
        log.info("lag budget from cross-correlation: %d (per-recording best lags %s)",
                 lag_budget, per_pair)
    input_budget = args.max_input_lag if args.max_input_lag is not None else lag_budget

    grid = [
        FitConfig(
            basis=BasisSpec(kind=kind, degree=degree),
            n_terms=n_terms,
            max_output_lag=lag_budget,
            max_input_lag=input_budget,
            input_delay=args.input_delay,
            use_els=use_els,
        )
        for kind in args.bases.split(",")
        for degree in _parse_int_list(args.degrees)
        for n_terms in _parse_int_list(args.n_terms)
        for use_els in ((False, True) if args.els == "both" else (args.els == "on",))
    ]

    result = grid_search(
        train_pairs,
        val_pairs,
        grid,
        train_fraction=args.train_fraction,
        workers=args.workers,
    )
    best = result.best
    model_path = out / "model.json"
    result.model.save(model_path)
    scores_path = write_scores_csv(result.scores, out / "scores.csv")
    log.info(
        "best config: basis=%s degree=%d n_terms=%d els=%s "
        "mean_test_rrse=%.6g mean_val_rrse=%.6g",
        best.config.basis.kind, best.config.basis.degree, best.config.n_terms,
        best.config.use_els, best.mean_test_rrse, best.mean_validation_rrse,
    )
    log.info("selected terms: %s", ", ".join(result.model.term_labels()))
    log.info("wrote %s and %s", model_path, scores_path)
    if args.stdout:
        sys.stdout.write(scores_path.read_text())
    return EXIT_OK


# ---------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    out = _out_dir(args)
    model = NarxModel.load(args.model) if args.model else reference_transfer_model()

    if args.input:
        if args.input_freq is None:
            raise InvalidSpecError("--input needs --input-freq for the recording metadata")
        stimulus = read_stimulus(args.input, sample_rate_hz=args.rate)
        frequency = args.input_freq
    else:
        if args.freq is None:
            raise InvalidSpecError("either --input FILE or --freq is required")
        stimulus = make_square_wave(
            StimulusSpec(args.freq, args.amplitude, args.duration, args.rate or 50_000.0)
        )
        frequency = args.freq

    spec = ChannelSpec(
        model=model,
        input_coupling=_parse_coupling(args.coupling),
        noise_sigma_v=args.noise_sigma,
        seed=args.seed,
        initial_output_v=args.initial,
    )
    pair = simulate_channel(spec, stimulus, frequency, replicate_id=args.replicate_id)
    name = args.name or f"sim_f{frequency:g}hz_{args.replicate_id}"
    path = write_recording(pair, out / f"{name}.csv")
    log.info("wrote %s (%d samples at %g Hz)", path, len(pair), pair.sample_rate_hz)
    if args.stdout:
        print(path)
    return EXIT_OK


# ------------------------------------------------------------------ report

def cmd_report(args) -> int:
    out = _out_dir(args)
    pair = load_recording(
        args.recording,
        sample_rate_hz=args.rate,
        input_frequency_hz=args.input_freq,
        replicate_id=args.replicate_id,
    )
    stem = Path(args.recording).stem
    welch = _welch_from_args(args)

    n = min(args.excerpt, len(pair))
    excerpt_path = out / f"{stem}_excerpt.csv"
    rate = pair.sample_rate_hz
    with open(excerpt_path, "w", newline="") as fh:
        fh.write("t,input_v,output_v\n")
        for k in range(n):
            fh.write(
                f"{k / rate:.12g},{pair.input.samples[k]:.12g},{pair.output.samples[k]:.12g}\n"
            )

    written = [excerpt_path]
    written.append(
        write_spectrum(dft_amplitude_spectrum(pair.input), out / f"{stem}_amplitude_input.csv")
    )
    written.append(
        write_spectrum(dft_amplitude_spectrum(pair.output), out / f"{stem}_amplitude_output.csv")
    )
    csd = welch_csd(pair.input, pair.output, welch)
    written.append(write_spectrum(csd, out / f"{stem}_csd.csv"))

    dom = dominant_frequency(csd, exclude_dc=True)
    recovered = recoverable_frequency(dom, pair.input_frequency_hz, args.max_harmonic)
    log.info(
        "dominant CSD frequency %.6g Hz against drive %.6g Hz: %s",
        dom, pair.input_frequency_hz,
        "recovered" if recovered else "not recovered",
    )
    for path in written:
        log.info("wrote %s", path)
    if args.stdout:
        print(f"dominant_csd_hz={dom:.12g} input_hz={pair.input_frequency_hz:.12g} "
              f"recovered={int(recovered)}")
    return EXIT_OK


# -------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mycelink", description=__doc__.split("\n\n")[0])
    parser.add_argument("--verbose", action="store_true", help="debug-level logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="synthesize stimuli or a full corpus")
    p.add_argument("mode", choices=["square", "corpus"])
    p.add_argument("--out", required=True)
    p.add_argument("--freq", type=float, default=None, help="square-wave frequency (square mode)")
    p.add_argument("--freqs", default="100:1000:100,2000:10000:1000",
                   help="corpus frequencies: comma list and start:stop:step ranges")
    p.add_argument("--replicates", type=int, default=28)
    p.add_argument("--amplitude", type=float, default=5.0)
    p.add_argument("--duration", type=float, default=1.0, help="seconds")
    p.add_argument("--rate", type=float, default=50_000.0, help="samples per second")
    p.add_argument("--coupling", default="1:0.05", help="input coupling as lag:gain[,lag:gain...]")
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--model", default=None, help="channel model JSON (default: built-in)")
    p.add_argument("--name", default=None)
    p.add_argument("--stdout", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", help="batch-analyze recordings into the report")
    p.add_argument("recordings", nargs="+", help="recording CSV paths or globs")
    p.add_argument("--out", required=True)
    _add_meta_args(p)
    _add_welch_args(p)
    p.add_argument("--max-search-lag", type=int, default=50)
    p.add_argument("--adf-max-lag", type=int, default=None)
    p.add_argument("--max-harmonic", type=int, default=50)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--stdout", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("identify", help="grid-search a model on recordings")
    p.add_argument("--train", nargs="+", required=True)
    p.add_argument("--validation", nargs="*", default=[])
    p.add_argument("--out", required=True)
    _add_meta_args(p)
    p.add_argument("--bases", default="polynomial,fourier")
    p.add_argument("--degrees", default="1,2,3")
    p.add_argument("--n-terms", default="3,5,8,13,21")
    p.add_argument("--els", choices=["both", "on", "off"], default="both")
    p.add_argument("--max-output-lag", type=int, default=None,
                   help="default: from cross-correlation, capped at 30")
    p.add_argument("--max-input-lag", type=int, default=None)
    p.add_argument("--input-delay", type=int, default=1)
    p.add_argument("--max-search-lag", type=int, default=50)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--stdout", action="store_true")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("simulate", help="run one stimulus through a channel model")
    p.add_argument("--out", required=True)
    p.add_argument("--model", default=None, help="channel model JSON (default: built-in)")
    p.add_argument("--input", default=None, help="stimulus CSV instead of generating one")
    p.add_argument("--freq", type=float, default=None)
    p.add_argument("--input-freq", type=float, default=None,
                   help="drive frequency metadata when using --input")
    p.add_argument("--amplitude", type=float, default=5.0)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--rate", type=float, default=None,
                   help="samples per second (default 50000 when generating; "
                        "checked against --input files when given)")
    p.add_argument("--coupling", default="1:0.05")
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--initial", type=float, default=None,
                   help="initial output value (default: model fixed point)")
    p.add_argument("--replicate-id", default="r00")
    p.add_argument("--name", default=None)
    p.add_argument("--stdout", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="excerpt and spectra for one recording")
    p.add_argument("recording")
    p.add_argument("--out", required=True)
    _add_meta_args(p)
    _add_welch_args(p)
    p.add_argument("--excerpt", type=int, default=1000, help="samples in the excerpt CSV")
    p.add_argument("--max-harmonic", type=int, default=50)
    p.add_argument("--stdout", action="store_true")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _setup_logging(args.verbose)
    try:
        return args.func(args)
    except InvalidSpecError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (RecordingParseError, DegenerateDataError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except (SingularRegressionError, DivergenceError, NoViableModelError) as exc:
        log.error("%s", exc)
        return EXIT_NUMERICAL
    except MycelinkError as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
