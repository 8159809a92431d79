"""Candidate construction, FROLS term selection, and ELS refinement.

The fitting pipeline is: enumerate a candidate term library from the
basis and lag budget, pick the few terms that explain the most output
energy (forward-regression orthogonal least squares, ranking candidates
by error-reduction ratio against a running Gram-Schmidt deflation), and
optionally polish the coefficients with extended least squares so
colored equation noise stops biasing them.

Multi-recording fits stack the per-recording design rows; lagged values
never cross a recording boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb

import numpy as np

from ..errors import (
    DegenerateDataError,
    DivergenceError,
    InvalidSpecError,
    SingularRegressionError,
)
from ..validation import as_float_array
from .model import BasisSpec, FitConfig, NarxModel, RegressorTerm, TermFactor

# Keep candidate libraries enumerable and their design matrices in RAM.
MAX_CANDIDATES = 1_000_000
MAX_DESIGN_BYTES = 512 * 1024 * 1024

# A deflated candidate whose remaining energy is this small relative to
# its original norm is inside the span of what's already selected.
_IN_SPAN_RTOL = 1e-12

_DIVERGENCE_LIMIT = 1e6


@dataclass(frozen=True)
class CandidateSet:
    """Design matrix rows k0.. for every candidate term, plus the target."""

    matrix: np.ndarray
    target: np.ndarray
    terms: tuple[RegressorTerm, ...]
    offset: int
    scaling: dict[str, tuple[float, float]] | None


@dataclass(frozen=True)
class FrolsSelection:
    indices: tuple[int, ...]
    err_values: tuple[float, ...]
    coefficients: np.ndarray
    exhausted: bool


def enumerate_terms(config: FitConfig) -> tuple[RegressorTerm, ...]:
    """All candidate terms for a config, constant first, deterministic order."""
    base: list[TermFactor] = [
        TermFactor("y", lag) for lag in range(1, config.max_output_lag + 1)
    ]
    base += [
        TermFactor("x", lag)
        for lag in range(config.input_delay, config.input_delay + config.max_input_lag)
    ]
    kind, degree = config.basis.kind, config.basis.degree

    if kind == "polynomial":
        total = comb(len(base) + degree, degree)
        if total > MAX_CANDIDATES:
            raise InvalidSpecError(
                f"{total} polynomial candidates exceed the {MAX_CANDIDATES} cap; "
                "reduce degree or lag budget"
            )
        terms: list[RegressorTerm] = [RegressorTerm()]
        for j in range(1, degree + 1):
            terms.extend(RegressorTerm(c) for c in combinations_with_replacement(base, j))
        return tuple(terms)

    total = 1 + 2 * len(base) * degree
    if total > MAX_CANDIDATES:
        raise InvalidSpecError(
            f"{total} trigonometric candidates exceed the {MAX_CANDIDATES} cap"
        )
    terms = [RegressorTerm()]
    for f in base:
        for h in range(1, degree + 1):
            terms.append(RegressorTerm((TermFactor(f.variable, f.lag, "cos", h),)))
            terms.append(RegressorTerm((TermFactor(f.variable, f.lag, "sin", h),)))
    return tuple(terms)


def _scaled(arr: np.ndarray, bounds: tuple[float, float]) -> np.ndarray:
    lo, hi = bounds
    return (arr - lo) / (hi - lo)


def compute_scaling(pairs, basis: BasisSpec) -> dict[str, tuple[float, float]] | None:
    """Per-variable min-max over all recordings; only the trig basis needs it."""
    if basis.kind != "fourier":
        return None
    ys = np.concatenate([y for _, y in pairs])
    scaling = {}
    if np.ptp(ys) == 0.0:
        raise DegenerateDataError("output is constant, cannot scale for the trig basis")
    scaling["y"] = (float(ys.min()), float(ys.max()))
    xs = [x for x, _ in pairs if x is not None]
    if xs:
        xc = np.concatenate(xs)
        if np.ptp(xc) == 0.0:
            raise DegenerateDataError("input is constant, cannot scale for the trig basis")
        scaling["x"] = (float(xc.min()), float(xc.max()))
    return scaling


def _factor_values(
    factor: TermFactor,
    rows: np.ndarray,
    x: np.ndarray | None,
    y: np.ndarray,
    scaling,
    e: np.ndarray | None,
) -> np.ndarray:
    if factor.variable == "y":
        series = y
    elif factor.variable == "x":
        if x is None:
            raise InvalidSpecError("model uses input terms but no input was given")
        series = x
    else:
        if e is None:
            raise InvalidSpecError("residual factors need a residual series")
        series = e
    vals = series[rows - factor.lag]
    if factor.transform == "identity":
        return vals
    vals = _scaled(vals, scaling[factor.variable])
    angle = 2.0 * np.pi * factor.harmonic * vals
    return np.cos(angle) if factor.transform == "cos" else np.sin(angle)


def evaluate_terms(
    terms,
    rows: np.ndarray,
    x: np.ndarray | None,
    y: np.ndarray,
    scaling=None,
    e: np.ndarray | None = None,
) -> np.ndarray:
    """Design matrix columns for ``terms`` at sample indices ``rows``."""
    out = np.empty((rows.size, len(terms)))
    cache: dict[TermFactor, np.ndarray] = {}
    for j, term in enumerate(terms):
        col = np.ones(rows.size)
        for factor in term.factors:
            vals = cache.get(factor)
            if vals is None:
                vals = _factor_values(factor, rows, x, y, scaling, e)
                cache[factor] = vals
            col = col * vals
        out[:, j] = col
    return out


def _as_pair(x, y) -> tuple[np.ndarray | None, np.ndarray]:
    ya = as_float_array(y, "y")
    if x is None:
        return None, ya
    xa = as_float_array(x, "x")
    if xa.size != ya.size:
        raise InvalidSpecError("x and y must have equal length")
    return xa, ya


def build_candidates(x, y, config: FitConfig, *, scaling=None) -> CandidateSet:
    """Candidate design matrix for one recording.

    Rows run from the config's lag depth to the end of the series; the
    target is the output over those same rows. ``scaling`` overrides the
    per-recording min-max when a caller is stacking recordings that must
    share one scaling.
    """
    xa, ya = _as_pair(x, y)
    if config.max_input_lag > 0 and xa is None:
        raise InvalidSpecError("config declares input lags but x is None")
    terms = enumerate_terms(config)

    k0 = config.max_output_lag
    if config.max_input_lag > 0:
        k0 = max(k0, config.input_delay + config.max_input_lag - 1)
    n_rows = ya.size - k0
    if n_rows < 8:
        raise DegenerateDataError(
            f"{ya.size} samples leave only {max(n_rows, 0)} usable rows past lag depth {k0}"
        )
    if n_rows * len(terms) * 8 > MAX_DESIGN_BYTES:
        raise InvalidSpecError(
            f"design matrix of {n_rows} x {len(terms)} would exceed the memory cap; "
            "reduce degree, lag budget, or series length"
        )

    if scaling is None:
        scaling = compute_scaling([(xa, ya)], config.basis)
    rows = np.arange(k0, ya.size)
    matrix = evaluate_terms(terms, rows, xa, ya, scaling)
    return CandidateSet(matrix=matrix, target=ya[rows], terms=terms, offset=k0, scaling=scaling)


def frols_select(matrix: np.ndarray, target: np.ndarray, n_terms: int) -> FrolsSelection:
    """Pick ``n_terms`` candidates by error-reduction ratio.

    Greedy forward selection: each step scores every unselected candidate
    by the fraction of target energy its deflated (orthogonalized)
    version explains, takes the best, and deflates the rest against it.
    Candidates whose deflated energy has collapsed relative to their
    original norm are inside the selected span and are skipped; if that
    exhausts the pool early the selection stops short and says so.

    Coefficients come from ordinary least squares on the selected
    original columns, so they are exactly the usual regression weights.
    """
    P = np.asarray(matrix, dtype=float)
    y = np.asarray(target, dtype=float)
    if P.ndim != 2 or y.ndim != 1 or P.shape[0] != y.size:
        raise InvalidSpecError("matrix and target shapes are inconsistent")
    n_rows, n_cand = P.shape
    if n_terms > n_cand:
        raise InvalidSpecError(f"cannot select {n_terms} terms from {n_cand} candidates")
    if n_rows < n_terms:
        raise DegenerateDataError(f"{n_rows} rows cannot support {n_terms} terms")
    yty = float(y @ y)
    if yty == 0.0:
        raise DegenerateDataError("target is identically zero")

    Q = P.copy()
    norms0 = np.einsum("ij,ij->j", P, P)
    available = norms0 > 0.0
    selected: list[int] = []
    errs: list[float] = []

    for _ in range(n_terms):
        nrm = np.einsum("ij,ij->j", Q, Q)
        viable = available & (nrm > _IN_SPAN_RTOL * norms0)
        if not np.any(viable):
            break
        proj = y @ Q
        err = np.where(viable, proj * proj / np.where(viable, nrm, 1.0) / yty, -1.0)
        best = int(np.argmax(err))
        selected.append(best)
        errs.append(float(err[best]))
        available[best] = False

        w = Q[:, best]
        wn = nrm[best]
        idx = np.flatnonzero(available)
        if idx.size:
            Q[:, idx] -= np.outer(w, (w @ Q[:, idx]) / wn)

    if not selected:
        raise DegenerateDataError("no viable candidate columns (all zero or in-span)")
    coefs, _, rank, _ = np.linalg.lstsq(P[:, selected], y, rcond=None)
    if rank < len(selected):
        raise SingularRegressionError("selected columns collapsed to rank deficiency")
    return FrolsSelection(
        indices=tuple(selected),
        err_values=tuple(errs),
        coefficients=coefs,
        exhausted=len(selected) < n_terms,
    )


def _els_refine(model: NarxModel, pairs, *, iterations: int, noise_lag: int, tol: float = 1e-8) -> NarxModel:
    """Iteratively refit with lagged-residual regressors on stacked recordings."""
    noise_terms = tuple(RegressorTerm((TermFactor("e", j),)) for j in range(1, noise_lag + 1))
    k0 = model.min_history
    k0e = max(k0, noise_lag)

    blocks = []
    for xa, ya in pairs:
        rows = np.arange(k0, ya.size)
        rows_e = np.arange(k0e, ya.size)
        P = evaluate_terms(model.terms, rows, xa, ya, model.scaling)
        P_e = P[k0e - k0 :]
        blocks.append((xa, ya, rows, rows_e, P, P_e))

    theta = np.array(model.coefficients)
    gamma = np.zeros(noise_lag)
    # bootstrap residuals from the process-only model
    residuals = []
    for xa, ya, rows, _, P, _ in blocks:
        e = np.zeros(ya.size)
        e[rows] = ya[rows] - P @ theta
        residuals.append(e)
    if all(np.max(np.abs(e)) == 0.0 for e in residuals):
        return model  # exact fit, nothing for the noise model to do

    for _ in range(iterations):
        # pseudo-linear regression: lagged residuals from the previous
        # iteration enter as fixed regressor columns
        noise_cols = [
            evaluate_terms(noise_terms, rows_e, xa, ya, model.scaling, e=e)
            for (xa, ya, _, rows_e, _, _), e in zip(blocks, residuals)
        ]
        X = np.vstack([np.hstack([b[5], E]) for b, E in zip(blocks, noise_cols)])
        t = np.concatenate([ya[rows_e] for _, ya, _, rows_e, _, _ in blocks])
        coefs, _, rank, _ = np.linalg.lstsq(X, t, rcond=None)
        if rank < X.shape[1]:
            raise SingularRegressionError("extended design is rank deficient")
        if np.max(np.abs(coefs)) > _DIVERGENCE_LIMIT:
            raise DivergenceError("ELS coefficients diverged past the magnitude bound")
        new_theta, new_gamma = coefs[: theta.size], coefs[theta.size :]

        delta = max(
            float(np.max(np.abs(new_theta - theta))),
            float(np.max(np.abs(new_gamma - gamma))),
        )
        theta, gamma = new_theta, new_gamma

        new_residuals = []
        for (xa, ya, rows, rows_e, P, _), E in zip(blocks, noise_cols):
            e = np.zeros(ya.size)
            e[rows] = ya[rows] - P @ theta
            e[rows_e] -= E @ gamma
            new_residuals.append(e)
        residuals = new_residuals

        if delta < tol:
            break

    return NarxModel(
        basis=model.basis,
        terms=model.terms,
        coefficients=tuple(theta),
        err_values=model.err_values,
        scaling=model.scaling,
        max_output_lag=model.max_output_lag,
        max_input_lag=model.max_input_lag,
        input_delay=model.input_delay,
        noise_terms=noise_terms,
        noise_coefficients=tuple(gamma),
    )


def estimate_els(model: NarxModel, x, y, *, iterations: int = 10, noise_lag: int | None = None, tol: float = 1e-8) -> NarxModel:
    """Extended least squares refinement of a fitted model on one recording.

    Lagged one-step residuals join the regression so that colored
    equation noise is modeled instead of leaking into the process
    coefficients. Residual terms are recorded on the returned model but
    are never used by simulation. Zero iterations returns the model
    unchanged.
    """
    if iterations == 0:
        return model
    if noise_lag is None:
        noise_lag = model.max_output_lag
    pairs = [_as_pair(x, y)]
    return _els_refine(model, pairs, iterations=iterations, noise_lag=noise_lag, tol=tol)


def fit_narx_multi(pairs, config: FitConfig) -> NarxModel:
    """Fit one model to several recordings by stacking their design rows."""
    pairs = [_as_pair(x, y) for x, y in pairs]
    if not pairs:
        raise InvalidSpecError("need at least one recording to fit")
    scaling = compute_scaling(pairs, config.basis)
    sets = [build_candidates(x, y, config, scaling=scaling) for x, y in pairs]
    matrix = sets[0].matrix if len(sets) == 1 else np.vstack([s.matrix for s in sets])
    target = sets[0].target if len(sets) == 1 else np.concatenate([s.target for s in sets])

    sel = frols_select(matrix, target, config.n_terms)
    terms = tuple(sets[0].terms[i] for i in sel.indices)
    model = NarxModel(
        basis=config.basis,
        terms=terms,
        coefficients=tuple(sel.coefficients),
        err_values=sel.err_values,
        scaling=scaling,
        max_output_lag=config.max_output_lag,
        max_input_lag=config.max_input_lag,
        input_delay=config.input_delay,
    )
    if config.use_els and config.els_iterations > 0:
        model = _els_refine(
            model, pairs, iterations=config.els_iterations, noise_lag=config.effective_noise_lag
        )
    return model


def fit_narx(x, y, config: FitConfig) -> NarxModel:
    """Fit one model to one recording (x may be None for pure autoregression)."""
    return fit_narx_multi([(x, y)], config)


def rrse(y_true, y_pred) -> float:
    """Root relative squared error against the mean-predictor baseline."""
    yt = as_float_array(y_true, "y_true")
    yp = as_float_array(y_pred, "y_pred")
    if yt.size != yp.size:
        raise InvalidSpecError("y_true and y_pred must have equal length")
    denom = float(np.sum((yt - yt.mean()) ** 2))
    if denom == 0.0:
        raise DegenerateDataError("y_true is constant, relative error undefined")
    return float(np.sqrt(np.sum((yt - yp) ** 2) / denom))
