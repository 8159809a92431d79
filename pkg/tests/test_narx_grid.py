import csv
import math

import numpy as np
import pytest

from mycelink import (
    BasisSpec,
    FitConfig,
    NoViableModelError,
    RecordingPair,
    TimeSeries,
    default_grid,
    grid_search,
)
from mycelink.narx.grid import write_scores_csv

from conftest import make_arx_recording


def as_pair(x, y, rep="r00", rate=100.0):
    return RecordingPair(
        input=TimeSeries(x, rate),
        output=TimeSeries(y, rate),
        input_frequency_hz=1.0,
        replicate_id=rep,
    )


def arx_pairs(rng, count, n=400, noise=0.01):
    return [as_pair(*make_arx_recording(rng, n, noise=noise), rep=f"r{i:02d}") for i in range(count)]


def small_grid():
    configs = []
    for kind in ("polynomial", "fourier"):
        for degree in (1, 2):
            for n_terms in (2, 3, 5):
                configs.append(
                    FitConfig(
                        basis=BasisSpec(kind, degree),
                        n_terms=n_terms,
                        max_output_lag=2,
                        max_input_lag=2,
                    )
                )
    return configs


class TestDefaultGrid:
    def test_size_and_coverage(self):
        grid = default_grid(max_output_lag=4, max_input_lag=3, input_delay=2)
        assert len(grid) == 2 * 3 * 5 * 2
        assert all(c.max_output_lag == 4 and c.input_delay == 2 for c in grid)
        assert {c.basis.kind for c in grid} == {"polynomial", "fourier"}
        assert {c.use_els for c in grid} == {False, True}
        assert len(set(grid)) == len(grid)


class TestGridSearch:
    def test_finds_true_structure(self):
        rng = np.random.default_rng(5)
        pairs = arx_pairs(rng, 4, n=1000)
        result = grid_search(pairs[:3], pairs[3:], small_grid())
        best = result.best.config
        assert best.basis.kind == "polynomial"
        assert best.basis.degree == 1
        assert best.n_terms == 3
        got = dict(zip(result.model.term_labels(), result.model.coefficients))
        assert got["y(k-1)"] == pytest.approx(0.4, abs=0.02)
        assert got["x(k-1)"] == pytest.approx(0.6, abs=0.02)
        assert math.isfinite(result.best.mean_validation_rrse)
        assert len(result.scores) == len(small_grid())

    def test_ties_prefer_fewer_terms_then_lower_degree(self, rng):
        # pure delayed copy: several configs recover it exactly with
        # zero free-run error, so the tie-break chain decides
        x = rng.normal(0, 1, 500)
        y = np.concatenate([[0.0], x[:-1]])
        pairs = [as_pair(x, y)]
        grid = [
            FitConfig(basis=BasisSpec("polynomial", 1), n_terms=2, max_output_lag=1, max_input_lag=1),
            FitConfig(basis=BasisSpec("polynomial", 2), n_terms=1, max_output_lag=1, max_input_lag=1),
            FitConfig(basis=BasisSpec("polynomial", 1), n_terms=1, max_output_lag=1, max_input_lag=1),
        ]
        result = grid_search(pairs, (), grid)
        assert result.best.config.n_terms == 1
        assert result.best.config.basis.degree == 1
        assert result.model.term_labels() == ["x(k-1)"]

    def test_failing_config_scored_inf_not_fatal(self):
        rng = np.random.default_rng(9)
        pairs = arx_pairs(rng, 2, n=300)
        impossible = FitConfig(
            basis=BasisSpec("polynomial", 1), n_terms=4, max_output_lag=1, max_input_lag=1
        )  # only 3 candidates exist
        fine = FitConfig(basis=BasisSpec("polynomial", 1), n_terms=3, max_output_lag=1, max_input_lag=1)
        result = grid_search(pairs, (), [impossible, fine])
        by_cfg = {s.config: s for s in result.scores}
        assert by_cfg[impossible].mean_test_rrse == math.inf
        assert by_cfg[impossible].n_failures == len(pairs)
        assert result.best.config == fine

    def test_every_config_failing_raises(self):
        rng = np.random.default_rng(9)
        pairs = arx_pairs(rng, 1, n=300)
        impossible = FitConfig(
            basis=BasisSpec("polynomial", 1), n_terms=4, max_output_lag=1, max_input_lag=1
        )
        with pytest.raises(NoViableModelError):
            grid_search(pairs, (), [impossible])

    def test_no_recordings(self):
        with pytest.raises(NoViableModelError):
            grid_search([], (), small_grid())

    def test_workers_do_not_change_the_answer(self):
        rng = np.random.default_rng(13)
        pairs = arx_pairs(rng, 3, n=500)
        grid = small_grid()[:6]
        serial = grid_search(pairs, (), grid, workers=1)
        threaded = grid_search(pairs, (), grid, workers=4)
        assert serial.best.config == threaded.best.config
        for a, b in zip(serial.scores, threaded.scores):
            assert a == b


class TestScoresCsv:
    def test_rows_and_inf_formatting(self, tmp_path):
        rng = np.random.default_rng(9)
        pairs = arx_pairs(rng, 2, n=300)
        impossible = FitConfig(
            basis=BasisSpec("polynomial", 1), n_terms=4, max_output_lag=1, max_input_lag=1
        )
        fine = FitConfig(basis=BasisSpec("polynomial", 1), n_terms=3, max_output_lag=1, max_input_lag=1)
        result = grid_search(pairs, (), [impossible, fine])
        path = write_scores_csv(result.scores, tmp_path / "scores.csv")
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2
        assert rows[0]["mean_test_rrse"] == "inf"
        assert rows[0]["failures"] == "2"
        assert float(rows[1]["mean_test_rrse"]) < 1.0
        assert rows[1]["els"] == "0"
        assert set(rows[0]) == {
            "basis", "degree", "n_terms", "els", "mean_test_rrse", "var_test_rrse",
            "mean_val_rrse", "var_val_rrse", "failures",
        }
