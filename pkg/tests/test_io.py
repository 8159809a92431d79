import json

import numpy as np
import pytest

from mycelink import (
    RecordingParseError,
    TimeSeries,
    load_recording,
    read_stimulus,
    write_recording,
    write_stimulus,
)
from mycelink.timeseries import RecordingPair


def make_pair(rng, n=64, rate=1000.0):
    x = rng.normal(0, 1, n)
    y = rng.normal(0, 1, n)
    return RecordingPair(TimeSeries(x, rate), TimeSeries(y, rate), 440.0, "r07")


def test_roundtrip(tmp_path, rng):
    pair = make_pair(rng)
    path = write_recording(pair, tmp_path / "rec.csv")
    back = load_recording(path)
    assert np.allclose(back.input.samples, pair.input.samples, rtol=1e-9)
    assert np.allclose(back.output.samples, pair.output.samples, rtol=1e-9)
    assert abs(back.sample_rate_hz - 1000.0) < 1e-6
    assert back.input_frequency_hz == 440.0
    assert back.replicate_id == "r07"


def test_sidecar_contents(tmp_path, rng):
    write_recording(make_pair(rng), tmp_path / "rec.csv")
    meta = json.loads((tmp_path / "rec.meta.json").read_text())
    assert meta == {"input_frequency_hz": 440.0, "replicate_id": "r07"}


def test_explicit_args_beat_sidecar(tmp_path, rng):
    path = write_recording(make_pair(rng), tmp_path / "rec.csv")
    back = load_recording(path, input_frequency_hz=900.0, replicate_id="override")
    assert back.input_frequency_hz == 900.0
    assert back.replicate_id == "override"


def test_missing_metadata_rejected(tmp_path, rng):
    path = write_recording(make_pair(rng), tmp_path / "rec.csv")
    (tmp_path / "rec.meta.json").unlink()
    with pytest.raises(RecordingParseError, match="input_frequency_hz"):
        load_recording(path)
    back = load_recording(path, input_frequency_hz=10.0, replicate_id="r00")
    assert back.replicate_id == "r00"


def test_rate_check(tmp_path, rng):
    path = write_recording(make_pair(rng, rate=1000.0), tmp_path / "rec.csv")
    load_recording(path, sample_rate_hz=1000.0)  # within 0.1%
    with pytest.raises(RecordingParseError, match="0.1%"):
        load_recording(path, sample_rate_hz=1010.0)


def test_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("time,in,out\n0,1,2\n0.1,1,2\n")
    with pytest.raises(RecordingParseError, match="header"):
        load_recording(p)


def test_ragged_row_names_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,input_v,output_v\n0,1,2\n0.1,1\n")
    with pytest.raises(RecordingParseError, match="line 3"):
        load_recording(p)


def test_unparseable_value_names_line_and_column(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,input_v,output_v\n0,1,2\n0.1,x,2\n")
    with pytest.raises(RecordingParseError, match=r"line 3.*input_v"):
        load_recording(p)


def test_nonfinite_value_rejected(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,input_v,output_v\n0,1,2\n0.1,nan,2\n")
    with pytest.raises(RecordingParseError, match="non-finite"):
        load_recording(p)


def test_nonuniform_spacing_names_line(tmp_path):
    p = tmp_path / "bad.csv"
    rows = "".join(f"{t},1,2\n" for t in [0.0, 0.1, 0.2, 0.35, 0.4, 0.5])
    p.write_text("t,input_v,output_v\n" + rows)
    with pytest.raises(RecordingParseError, match="non-uniform.*line"):
        load_recording(p, input_frequency_hz=1.0, replicate_id="r")


def test_time_must_increase(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,input_v,output_v\n0,1,2\n0.2,1,2\n0.1,1,2\n")
    with pytest.raises(RecordingParseError, match="increasing"):
        load_recording(p, input_frequency_hz=1.0, replicate_id="r")


def test_empty_and_single_row(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("")
    with pytest.raises(RecordingParseError, match="empty"):
        load_recording(p)
    p.write_text("t,input_v,output_v\n0,1,2\n")
    with pytest.raises(RecordingParseError, match="at least 2"):
        load_recording(p)


def test_stream_source(tmp_path, rng):
    path = write_recording(make_pair(rng), tmp_path / "rec.csv")
    with open(path) as fh:
        back = load_recording(fh, input_frequency_hz=5.0, replicate_id="r01")
    assert len(back) == 64


def test_stimulus_roundtrip(tmp_path, rng):
    ts = TimeSeries(rng.normal(0, 1, 50), 200.0)
    path = write_stimulus(ts, tmp_path / "stim.csv")
    back = read_stimulus(path)
    assert np.allclose(back.samples, ts.samples, rtol=1e-9)
    assert abs(back.sample_rate_hz - 200.0) < 1e-6
