"""Reading and writing recording files.

A recording is a CSV with header ``t,input_v,output_v`` holding one
stimulus/response pair, accompanied by an optional JSON sidecar
(``<name>.meta.json``) carrying the drive frequency and replicate id.
The sample rate is never stored; it is inferred from the time column.

Keeping all format knowledge here means the rest of the package never
sees a file, only :class:`~mycelink.timeseries.RecordingPair` objects.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import RecordingParseError
from .timeseries import RecordingPair, TimeSeries

RECORDING_HEADER = ("t", "input_v", "output_v")
STIMULUS_HEADER = ("t", "input_v")

# Relative tolerance for "the time column is uniform" and for agreement
# between an inferred rate and a caller-supplied one.
_DT_REL_TOL = 1e-3


def _parse_float(token: str, line_no: int, column: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise RecordingParseError(
            f"line {line_no}: could not parse {column}={token!r} as a number"
        ) from None
    if not math.isfinite(value):
        raise RecordingParseError(f"line {line_no}: non-finite value in column {column}")
    return value


def _read_columns(stream, header: tuple[str, ...], where: str) -> list[np.ndarray]:
    reader = csv.reader(stream)
    try:
        first = next(reader)
    except StopIteration:
        raise RecordingParseError(f"{where}: file is empty") from None
    if tuple(s.strip() for s in first) != header:
        raise RecordingParseError(
            f"{where}: expected header {','.join(header)!r}, got {','.join(first)!r}"
        )
    columns: list[list[float]] = [[] for _ in header]
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise RecordingParseError(
                f"{where}: line {line_no} has {len(row)} fields, expected {len(header)}"
            )
        for j, token in enumerate(row):
            columns[j].append(_parse_float(token, line_no, header[j]))
    if len(columns[0]) < 2:
        raise RecordingParseError(f"{where}: need at least 2 data rows, got {len(columns[0])}")
    return [np.asarray(c) for c in columns]


def _infer_rate(t: np.ndarray, where: str) -> float:
    dt = np.diff(t)
    if np.any(dt <= 0):
        bad = int(np.flatnonzero(dt <= 0)[0])
        raise RecordingParseError(f"{where}: time column not strictly increasing at line {bad + 3}")
    med = float(np.median(dt))
    off = np.abs(dt - med) > _DT_REL_TOL * med
    if np.any(off):
        bad = int(np.flatnonzero(off)[0])
        raise RecordingParseError(f"{where}: non-uniform sample spacing at line {bad + 3}")
    return 1.0 / med


def _load_sidecar(path: Path) -> dict:
    sidecar = path.with_suffix(".meta.json")
    if not sidecar.exists():
        return {}
    try:
        with open(sidecar) as fh:
            meta = json.load(fh)
    except (json.JSONDecodeError, OSError) as exc:
        raise RecordingParseError(f"{sidecar}: unreadable sidecar ({exc})") from None
    if not isinstance(meta, dict):
        raise RecordingParseError(f"{sidecar}: sidecar must hold a JSON object")
    return meta


def load_recording(
    source,
    *,
    sample_rate_hz: float | None = None,
    input_frequency_hz: float | None = None,
    replicate_id: str | None = None,
) -> RecordingPair:
    """Parse one recording CSV (path or open text stream) into a RecordingPair.

    The sample rate is inferred from the median time step. Passing
    ``sample_rate_hz`` asserts the expected rate: a mismatch beyond 0.1%
    is an error, agreement makes the given value authoritative.

    Metadata resolution: explicit arguments win, then the JSON sidecar
    next to a path source, and if neither supplies a value the file is
    rejected rather than guessed at.
    """
    if hasattr(source, "read"):
        where = getattr(source, "name", "<stream>")
        columns = _read_columns(source, RECORDING_HEADER, where)
        meta = {}
    else:
        path = Path(source)
        where = str(path)
        try:
            fh = open(path, newline="")
        except OSError as exc:
            raise RecordingParseError(f"{where}: cannot open ({exc})") from None
        with fh:
            columns = _read_columns(fh, RECORDING_HEADER, where)
        meta = _load_sidecar(path)

    t, x, y = columns
    inferred = _infer_rate(t, where)
    if sample_rate_hz is not None:
        if abs(inferred - sample_rate_hz) > _DT_REL_TOL * sample_rate_hz:
            raise RecordingParseError(
                f"{where}: inferred rate {inferred:.6g} Hz disagrees with "
                f"expected {sample_rate_hz:.6g} Hz by more than 0.1%"
            )
        rate = float(sample_rate_hz)
    else:
        rate = inferred

    if input_frequency_hz is None:
        input_frequency_hz = meta.get("input_frequency_hz")
    if replicate_id is None:
        replicate_id = meta.get("replicate_id")
    if input_frequency_hz is None:
        raise RecordingParseError(
            f"{where}: no input_frequency_hz in sidecar and none supplied"
        )
    if replicate_id is None:
        raise RecordingParseError(f"{where}: no replicate_id in sidecar and none supplied")

    stem = Path(where).stem
    return RecordingPair(
        input=TimeSeries(x, rate, label=f"{stem}:input"),
        output=TimeSeries(y, rate, label=f"{stem}:output"),
        input_frequency_hz=float(input_frequency_hz),
        replicate_id=str(replicate_id),
    )


def write_recording(pair: RecordingPair, path) -> Path:
    """Write a recording CSV plus its metadata sidecar; returns the CSV path."""
    path = Path(path)
    rate = pair.sample_rate_hz
    xi = pair.input.samples
    yo = pair.output.samples
    with open(path, "w", newline="") as fh:
        fh.write(",".join(RECORDING_HEADER) + "\n")
        for k in range(len(pair)):
            fh.write(f"{k / rate:.12g},{xi[k]:.12g},{yo[k]:.12g}\n")
    sidecar = path.with_suffix(".meta.json")
    with open(sidecar, "w") as fh:
        json.dump(
            {
                "input_frequency_hz": pair.input_frequency_hz,
                "replicate_id": pair.replicate_id,
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    return path


def write_stimulus(ts: TimeSeries, path) -> Path:
    """Write a single-channel stimulus CSV with header ``t,input_v``."""
    path = Path(path)
    rate = ts.sample_rate_hz
    with open(path, "w", newline="") as fh:
        fh.write(",".join(STIMULUS_HEADER) + "\n")
        for k, v in enumerate(ts.samples):
            fh.write(f"{k / rate:.12g},{v:.12g}\n")
    return path


def read_stimulus(source, *, sample_rate_hz: float | None = None) -> TimeSeries:
    """Parse a stimulus CSV (header ``t,input_v``) back into a TimeSeries."""
    if hasattr(source, "read"):
        where = getattr(source, "name", "<stream>")
        columns = _read_columns(source, STIMULUS_HEADER, where)
    else:
        path = Path(source)
        where = str(path)
        with open(path, newline="") as fh:
            columns = _read_columns(fh, STIMULUS_HEADER, where)
    t, x = columns
    inferred = _infer_rate(t, where)
    if sample_rate_hz is not None:
        if abs(inferred - sample_rate_hz) > _DT_REL_TOL * sample_rate_hz:
            raise RecordingParseError(
                f"{where}: inferred rate {inferred:.6g} Hz disagrees with "
                f"expected {sample_rate_hz:.6g} Hz by more than 0.1%"
            )
        inferred = float(sample_rate_hz)
    return TimeSeries(x, inferred, label=Path(where).stem)
