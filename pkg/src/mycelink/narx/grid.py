"""Configuration sweep: score many fit configs, keep the best one.

Each config is scored per training recording: fit on the first 80% of
that recording, free-run over the held-out tail, score by RRSE. The
winning config (lowest mean test RRSE; ties prefer fewer terms, then
lower degree) is refit on the complete training recordings stacked
together, and that stacked model is scored once more on any separate
validation recordings.

A config that fails anywhere (too few candidates, singular regression,
divergent free run) gets an infinite score instead of killing the
sweep; only all configs failing is an error.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import inf, nan
from pathlib import Path

import numpy as np

from ..errors import MycelinkError, NoViableModelError
from ..timeseries import split_train_test
from ..validation import check_fraction, check_positive_int
from .fit import fit_narx, fit_narx_multi, rrse
from .model import BasisSpec, FitConfig, NarxModel
from .simulate import free_run

DEFAULT_BASIS_KINDS = ("polynomial", "fourier")
DEFAULT_DEGREES = (1, 2, 3)
DEFAULT_N_TERMS = (3, 5, 8, 13, 21)


@dataclass(frozen=True)
class GridScore:
    config: FitConfig
    mean_test_rrse: float
    var_test_rrse: float
    mean_validation_rrse: float
    var_validation_rrse: float
    n_failures: int


@dataclass(frozen=True)
class GridSearchResult:
    best: GridScore
    model: NarxModel
    scores: tuple[GridScore, ...]


def default_grid(max_output_lag: int, max_input_lag: int, input_delay: int = 1) -> list[FitConfig]:
    """The standard sweep: both bases, degrees 1-3, several term counts, ELS on/off."""
    grid = []
    for kind in DEFAULT_BASIS_KINDS:
        for degree in DEFAULT_DEGREES:
            for n_terms in DEFAULT_N_TERMS:
                for use_els in (False, True):
                    grid.append(
                        FitConfig(
                            basis=BasisSpec(kind=kind, degree=degree),
                            n_terms=n_terms,
                            max_output_lag=max_output_lag,
                            max_input_lag=max_input_lag,
                            input_delay=input_delay,
                            use_els=use_els,
                        )
                    )
    return grid


def _free_run_rrse(model: NarxModel, x: np.ndarray | None, y: np.ndarray) -> float:
    k0 = model.min_history
    sim = free_run(model, x=x, y_init=y[:k0], n_steps=None if x is not None else y.size)
    return rrse(y[k0:], sim[k0:])


def _score_config(config: FitConfig, train_pairs, validation_pairs, train_fraction):
    test_scores = []
    failures = 0
    for pair in train_pairs:
        try:
            x_tr, x_te = split_train_test(pair.input, train_fraction)
            y_tr, y_te = split_train_test(pair.output, train_fraction)
            model = fit_narx(x_tr.samples, y_tr.samples, config)
            test_scores.append(_free_run_rrse(model, x_te.samples, y_te.samples))
        except MycelinkError:
            failures += 1

    if failures or not test_scores:
        return GridScore(config, inf, inf, nan, nan, failures), None

    mean_test = float(np.mean(test_scores))
    var_test = float(np.var(test_scores))

    try:
        stacked = fit_narx_multi(
            [(p.input.samples, p.output.samples) for p in train_pairs], config
        )
        val_scores = [
            _free_run_rrse(stacked, p.input.samples, p.output.samples)
            for p in validation_pairs
        ]
    except MycelinkError:
        return GridScore(config, inf, inf, nan, nan, 1), None

    mean_val = float(np.mean(val_scores)) if val_scores else nan
    var_val = float(np.var(val_scores)) if val_scores else nan
    return GridScore(config, mean_test, var_test, mean_val, var_val, 0), stacked


def grid_search(
    train_pairs,
    validation_pairs=(),
    grid=None,
    *,
    train_fraction: float = 0.8,
    workers: int = 1,
) -> GridSearchResult:
    """Score every config and return the winner with its stacked refit."""
    train_pairs = list(train_pairs)
    validation_pairs = list(validation_pairs)
    if not train_pairs:
        raise NoViableModelError("no training recordings given")
    check_fraction(train_fraction, "train_fraction")
    check_positive_int(workers, "workers")
    if grid is None:
        grid = default_grid(max_output_lag=2, max_input_lag=2)
    grid = list(grid)
    if not grid:
        raise NoViableModelError("empty config grid")

    def job(config):
        return _score_config(config, train_pairs, validation_pairs, train_fraction)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(job, grid))
    else:
        outcomes = [job(c) for c in grid]

    scores = tuple(score for score, _ in outcomes)
    ranked = sorted(
        range(len(scores)),
        key=lambda i: (
            scores[i].mean_test_rrse,
            scores[i].config.n_terms,
            scores[i].config.basis.degree,
            i,
        ),
    )
    best_i = ranked[0]
    best_score, best_model = outcomes[best_i]
    if not np.isfinite(best_score.mean_test_rrse) or best_model is None:
        raise NoViableModelError("every configuration in the grid failed or diverged")
    return GridSearchResult(best=best_score, model=best_model, scores=scores)


def write_scores_csv(scores, path) -> Path:
    """One row per config with its test/validation free-run scores."""
    path = Path(path)

    def fmt(v):
        return f"{v:.6g}" if np.isfinite(v) else ("inf" if v == inf else "nan")

    with open(path, "w", newline="") as fh:
        fh.write(
            "basis,degree,n_terms,els,mean_test_rrse,var_test_rrse,"
            "mean_val_rrse,var_val_rrse,failures\n"
        )
        for s in scores:
            c = s.config
            fh.write(
                f"{c.basis.kind},{c.basis.degree},{c.n_terms},{int(c.use_els)},"
                f"{fmt(s.mean_test_rrse)},{fmt(s.var_test_rrse)},"
                f"{fmt(s.mean_validation_rrse)},{fmt(s.var_validation_rrse)},{s.n_failures}\n"
            )
    return path
