"""One-step prediction and free-run simulation of fitted models.

Both paths evaluate only the process terms. Residual terms exist purely
for coefficient estimation: at prediction time future noise is unknown
and its best estimate is zero, so those columns drop out.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateDataError, DivergenceError, InvalidSpecError
from ..validation import as_float_array, check_positive_int
from .fit import evaluate_terms
from .model import NarxModel

FREE_RUN_LIMIT = 1e9


def predict_one_step(model: NarxModel, y, x=None) -> np.ndarray:
    """One-step-ahead predictions from measured history.

    Returns predictions for sample indices ``model.min_history`` through
    ``len(y) - 1``; each uses only measured values of y (and x) before
    it. The result is shorter than ``y`` by ``model.min_history``.
    """
    ya = as_float_array(y, "y")
    xa = None
    if model.has_input_terms:
        if x is None:
            raise InvalidSpecError("model has input terms, x is required")
        xa = as_float_array(x, "x")
        if xa.size != ya.size:
            raise InvalidSpecError("x and y must have equal length")
    k0 = model.min_history
    if ya.size <= k0:
        raise DegenerateDataError(
            f"need more than {k0} samples of history, got {ya.size}"
        )
    rows = np.arange(k0, ya.size)
    design = evaluate_terms(model.terms, rows, xa, ya, model.scaling)
    return design @ np.array(model.coefficients)


def _linear_step_plan(model: NarxModel):
    """Constant plus (is_output, lag, coef) triples, if the model is that simple."""
    constant = 0.0
    triples = []
    for term, coef in zip(model.terms, model.coefficients):
        if term.degree == 0:
            constant += coef
            continue
        if term.degree != 1 or term.factors[0].transform != "identity":
            return None
        f = term.factors[0]
        triples.append((f.variable == "y", f.lag, coef))
    return constant, triples


def free_run(model: NarxModel, x=None, y_init=None, n_steps: int | None = None) -> np.ndarray:
    """Recursive simulation: every output past the seed is model-generated.

    ``y_init`` must cover the model's history depth and is copied into
    the head of the returned trajectory. With input terms, ``x`` sets
    the trajectory length; otherwise pass ``n_steps``. Any sample whose
    magnitude passes 1e9 aborts the run as divergent, reporting the step.
    """
    if y_init is None:
        raise InvalidSpecError("y_init seed values are required")
    seed = as_float_array(y_init, "y_init")
    k0 = model.min_history
    if seed.size < k0:
        raise DegenerateDataError(
            f"y_init must cover {k0} samples of history, got {seed.size}"
        )

    xa = None
    if model.has_input_terms:
        if x is None:
            raise InvalidSpecError("model has input terms, x is required")
        xa = as_float_array(x, "x")
        if n_steps is None:
            n_steps = xa.size
        elif n_steps != xa.size:
            raise InvalidSpecError("n_steps must match len(x) when x is given")
    else:
        if n_steps is None:
            raise InvalidSpecError("n_steps is required for a model with no input terms")
        if x is not None:
            xa = as_float_array(x, "x")
            if xa.size != n_steps:
                raise InvalidSpecError("n_steps must match len(x) when x is given")
    n_steps = check_positive_int(n_steps, "n_steps")
    if n_steps <= seed.size:
        raise InvalidSpecError(
            f"n_steps={n_steps} does not extend past the {seed.size}-sample seed"
        )

    out = np.empty(n_steps)
    out[: seed.size] = seed
    start = seed.size

    plan = _linear_step_plan(model)
    if plan is not None:
        constant, triples = plan
        buf = out  # direct indexing is fastest in the plain-python loop
        xbuf = xa
        for k in range(start, n_steps):
            acc = constant
            for is_output, lag, coef in triples:
                acc += coef * (buf[k - lag] if is_output else xbuf[k - lag])
            if acc > FREE_RUN_LIMIT or acc < -FREE_RUN_LIMIT or acc != acc:
                raise DivergenceError(f"free run diverged at step {k}", step=k)
            buf[k] = acc
        return out

    coefs = np.array(model.coefficients)
    rows = np.empty(1, dtype=int)
    for k in range(start, n_steps):
        rows[0] = k
        val = float(evaluate_terms(model.terms, rows, xa, out, model.scaling)[0] @ coefs)
        if not np.isfinite(val) or abs(val) > FREE_RUN_LIMIT:
            raise DivergenceError(f"free run diverged at step {k}", step=k)
        out[k] = val
    return out


def ar_fixed_point(model: NarxModel) -> float:
    """Equilibrium of a linear autoregressive model: c / (1 - sum of lag gains).

    Only defined for models whose terms are a constant plus identity
    output lags (no input terms, no nonlinearities).
    """
    plan = _linear_step_plan(model)
    if plan is None:
        raise InvalidSpecError("fixed point is only defined for linear lag models")
    constant, triples = plan
    if any(not is_output for is_output, _, _ in triples):
        raise InvalidSpecError("fixed point is only defined for autonomous models")
    gain = sum(coef for _, _, coef in triples)
    if abs(1.0 - gain) < 1e-12:
        raise InvalidSpecError("lag gains sum to 1, no unique fixed point")
    return constant / (1.0 - gain)
