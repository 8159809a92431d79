"""Scikit-learn style front door for the identification pipeline.

The functional layer (build_candidates / frols_select / estimate_els)
stays importable on its own; this estimator packages it with parameter
handling so it composes with sklearn tooling (get_params, set_params,
clone) and reads like the other estimators in the ecosystem.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ..errors import InvalidSpecError
from ..validation import as_float_array
from .fit import enumerate_terms, fit_narx, rrse
from .model import BasisSpec, FitConfig
from .simulate import free_run, predict_one_step


def _column_or_1d(values, name):
    if values is None:
        return None
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    return as_float_array(arr, name)


class FrolsNarx(BaseEstimator):
    """Nonlinear ARX regressor with FROLS structure selection.

    Parameters
    ----------
    n_terms : int
        How many regressor terms to keep.
    basis : str
        "polynomial" or "fourier".
    degree : int
        Polynomial degree, or highest trig harmonic.
    max_output_lag, max_input_lag : int
        Lag budgets for past outputs and inputs. A zero input budget
        fits a pure autoregression.
    input_delay : int
        Dead time before the input can act.
    use_els : bool
        Refine coefficients with extended least squares after selection.
    els_iterations : int
        Iteration cap for the refinement.
    noise_lag : int or None
        Residual lag depth for ELS; defaults to max_output_lag.

    Attributes
    ----------
    model_ : NarxModel
        The fitted model structure.
    terms_ : list of str
        Labels of the selected terms, in selection order.
    coefficients_ : ndarray
        Weights aligned with ``terms_``.
    err_ : ndarray
        Error-reduction ratio of each selected term.
    n_candidates_ : int
        Size of the candidate library the terms were chosen from.
    """

    def __init__(
        self,
        n_terms: int = 5,
        basis: str = "polynomial",
        degree: int = 1,
        max_output_lag: int = 2,
        max_input_lag: int = 2,
        input_delay: int = 1,
        use_els: bool = False,
        els_iterations: int = 10,
        noise_lag: int | None = None,
    ):
        self.n_terms = n_terms
        self.basis = basis
        self.degree = degree
        self.max_output_lag = max_output_lag
        self.max_input_lag = max_input_lag
        self.input_delay = input_delay
        self.use_els = use_els
        self.els_iterations = els_iterations
        self.noise_lag = noise_lag

    def _config(self) -> FitConfig:
        return FitConfig(
            basis=BasisSpec(kind=self.basis, degree=self.degree),
            n_terms=self.n_terms,
            max_output_lag=self.max_output_lag,
            max_input_lag=self.max_input_lag,
            input_delay=self.input_delay,
            use_els=self.use_els,
            els_iterations=self.els_iterations,
            noise_lag=self.noise_lag,
        )

    def fit(self, X, y):
        """Select terms and estimate coefficients from one recording.

        X is the input series (1-d, or a single column; None for pure
        autoregression), y the output series of equal length.
        """
        config = self._config()
        xa = _column_or_1d(X, "X")
        ya = _column_or_1d(y, "y")
        self.model_ = fit_narx(xa, ya, config)
        self.terms_ = self.model_.term_labels()
        self.coefficients_ = np.array(self.model_.coefficients)
        self.err_ = np.array(self.model_.err_values)
        self.n_candidates_ = len(enumerate_terms(config))
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise InvalidSpecError("this estimator is not fitted yet; call fit first")

    def predict(self, X, y):
        """One-step-ahead predictions over a measured recording."""
        self._check_fitted()
        return predict_one_step(
            self.model_, _column_or_1d(y, "y"), _column_or_1d(X, "X")
        )

    def simulate(self, X=None, y_init=None, n_steps: int | None = None):
        """Free-run simulation seeded with ``y_init``."""
        self._check_fitted()
        return free_run(self.model_, x=_column_or_1d(X, "X"), y_init=y_init, n_steps=n_steps)

    def score_free_run(self, X, y) -> float:
        """Free-run RRSE over a recording (lower is better), seeded from y's head."""
        self._check_fitted()
        xa = _column_or_1d(X, "X")
        ya = _column_or_1d(y, "y")
        k0 = self.model_.min_history
        sim = free_run(
            self.model_,
            x=xa,
            y_init=ya[:k0],
            n_steps=ya.size if xa is None else None,
        )
        return rrse(ya[k0:], sim[k0:])
