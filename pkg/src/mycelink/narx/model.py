"""Model structure types for nonlinear ARX identification.

A model is a weighted sum of regressor terms. Each term is a product of
factors; a factor is one lagged variable, optionally passed through a
cosine or sine of its min-max-scaled value (the trigonometric basis).
An empty factor tuple is the constant term.

Three variables exist: "y" (past outputs), "x" (past inputs, subject to
a pure delay), and "e" (past one-step residuals). Residual terms only
ever arise from extended least squares and never drive a simulation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import InvalidSpecError
from ..validation import check_nonnegative_int, check_positive_int

VARIABLES = ("y", "x", "e")
TRANSFORMS = ("identity", "cos", "sin")
BASIS_KINDS = ("polynomial", "fourier")


@dataclass(frozen=True)
class TermFactor:
    """One lagged variable inside a regressor term."""

    variable: str
    lag: int
    transform: str = "identity"
    harmonic: int = 0

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise InvalidSpecError(f"variable must be one of {VARIABLES}, got {self.variable!r}")
        check_positive_int(self.lag, "lag")
        if self.transform not in TRANSFORMS:
            raise InvalidSpecError(f"transform must be one of {TRANSFORMS}, got {self.transform!r}")
        if self.transform == "identity":
            if self.harmonic != 0:
                raise InvalidSpecError("identity factors take no harmonic")
        else:
            check_positive_int(self.harmonic, "harmonic")

    def label(self) -> str:
        base = f"{self.variable}(k-{self.lag})"
        if self.transform == "identity":
            return base
        # the _s marks min-max scaling applied before the trig transform
        return f"{self.transform}(2pi*{self.harmonic}*{self.variable}_s(k-{self.lag}))"


@dataclass(frozen=True)
class RegressorTerm:
    """Product of factors; an empty product is the constant term."""

    factors: tuple[TermFactor, ...] = ()

    def __post_init__(self):
        factors = tuple(self.factors)
        for f in factors:
            if not isinstance(f, TermFactor):
                raise InvalidSpecError("factors must be TermFactor instances")
        object.__setattr__(self, "factors", factors)

    @property
    def degree(self) -> int:
        return len(self.factors)

    def variables_used(self) -> frozenset[str]:
        return frozenset(f.variable for f in self.factors)

    def label(self) -> str:
        if not self.factors:
            return "1"
        parts: list[str] = []
        i = 0
        while i < len(self.factors):
            j = i
            while j < len(self.factors) and self.factors[j] == self.factors[i]:
                j += 1
            power = j - i
            parts.append(self.factors[i].label() + (f"^{power}" if power > 1 else ""))
            i = j
        return "*".join(parts)

    def __str__(self) -> str:
        return self.label()


@dataclass(frozen=True)
class BasisSpec:
    """Which nonlinearity family candidate terms are drawn from."""

    kind: str = "polynomial"
    degree: int = 1

    def __post_init__(self):
        if self.kind not in BASIS_KINDS:
            raise InvalidSpecError(f"basis kind must be one of {BASIS_KINDS}, got {self.kind!r}")
        check_positive_int(self.degree, "degree")


@dataclass(frozen=True)
class FitConfig:
    """Everything a single identification run needs besides the data.

    ``max_input_lag`` of zero drops input terms entirely (pure
    autoregression). ``input_delay`` is the dead time: input lags run
    from input_delay to input_delay + max_input_lag - 1. ``noise_lag``
    defaults to ``max_output_lag`` when extended least squares is on.
    """

    basis: BasisSpec = field(default_factory=BasisSpec)
    n_terms: int = 5
    max_output_lag: int = 2
    max_input_lag: int = 2
    input_delay: int = 1
    use_els: bool = False
    els_iterations: int = 10
    noise_lag: int | None = None

    def __post_init__(self):
        if not isinstance(self.basis, BasisSpec):
            raise InvalidSpecError("basis must be a BasisSpec")
        check_positive_int(self.n_terms, "n_terms")
        check_positive_int(self.max_output_lag, "max_output_lag")
        check_nonnegative_int(self.max_input_lag, "max_input_lag")
        check_positive_int(self.input_delay, "input_delay")
        check_nonnegative_int(self.els_iterations, "els_iterations")
        if self.noise_lag is not None:
            check_positive_int(self.noise_lag, "noise_lag")

    @property
    def effective_noise_lag(self) -> int:
        return self.max_output_lag if self.noise_lag is None else self.noise_lag


@dataclass(frozen=True)
class NarxModel:
    """A fitted (or hand-specified) model ready to predict or simulate.

    ``err_values`` holds each term's error-reduction ratio in selection
    order for fitted models, and is None for hand-built ones.
    ``scaling`` maps variable name to its (min, max) over the training
    data; present exactly when the basis needs scaled variables.
    Residual terms picked up by extended least squares live apart from
    the process terms so simulation can ignore them wholesale.
    """

    basis: BasisSpec
    terms: tuple[RegressorTerm, ...]
    coefficients: tuple[float, ...]
    max_output_lag: int
    max_input_lag: int
    input_delay: int = 1
    err_values: tuple[float, ...] | None = None
    scaling: dict[str, tuple[float, float]] | None = None
    noise_terms: tuple[RegressorTerm, ...] = ()
    noise_coefficients: tuple[float, ...] = ()

    def __post_init__(self):
        if not isinstance(self.basis, BasisSpec):
            raise InvalidSpecError("basis must be a BasisSpec")
        terms = tuple(self.terms)
        coefs = tuple(float(c) for c in self.coefficients)
        if not terms:
            raise InvalidSpecError("a model needs at least one term")
        if len(terms) != len(coefs):
            raise InvalidSpecError(
                f"{len(terms)} terms but {len(coefs)} coefficients"
            )
        if not all(np.isfinite(coefs)):
            raise InvalidSpecError("coefficients must be finite")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "coefficients", coefs)

        check_positive_int(self.max_output_lag, "max_output_lag")
        check_nonnegative_int(self.max_input_lag, "max_input_lag")
        check_positive_int(self.input_delay, "input_delay")

        if self.err_values is not None:
            err = tuple(float(e) for e in self.err_values)
            if len(err) != len(terms):
                raise InvalidSpecError("err_values must align with terms")
            object.__setattr__(self, "err_values", err)

        noise_terms = tuple(self.noise_terms)
        noise_coefs = tuple(float(c) for c in self.noise_coefficients)
        if len(noise_terms) != len(noise_coefs):
            raise InvalidSpecError("noise terms and coefficients must align")
        object.__setattr__(self, "noise_terms", noise_terms)
        object.__setattr__(self, "noise_coefficients", noise_coefs)

        for term in terms:
            for f in term.factors:
                if f.variable == "e":
                    raise InvalidSpecError("residual factors belong in noise_terms")
                if f.variable == "y" and f.lag > self.max_output_lag:
                    raise InvalidSpecError(
                        f"term {term.label()} exceeds max_output_lag={self.max_output_lag}"
                    )
                if f.variable == "x":
                    if self.max_input_lag == 0:
                        raise InvalidSpecError("model declares no input lags but uses x")
                    hi = self.input_delay + self.max_input_lag - 1
                    if not (self.input_delay <= f.lag <= hi):
                        raise InvalidSpecError(
                            f"term {term.label()} outside input lag window "
                            f"[{self.input_delay}, {hi}]"
                        )
                if f.transform != "identity":
                    sc = (self.scaling or {}).get(f.variable)
                    if sc is None:
                        raise InvalidSpecError(
                            f"term {term.label()} needs scaling for {f.variable!r}"
                        )

        if self.scaling is not None:
            cleaned = {}
            for var, pair in self.scaling.items():
                lo, hi = float(pair[0]), float(pair[1])
                if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
                    raise InvalidSpecError(f"bad scaling for {var!r}: ({lo}, {hi})")
                cleaned[var] = (lo, hi)
            object.__setattr__(self, "scaling", cleaned)

    @property
    def has_input_terms(self) -> bool:
        return any("x" in t.variables_used() for t in self.terms)

    @property
    def min_history(self) -> int:
        """Samples of past data needed before the first prediction."""
        depth = self.max_output_lag
        if self.max_input_lag > 0:
            depth = max(depth, self.input_delay + self.max_input_lag - 1)
        return depth

    def term_labels(self) -> list[str]:
        return [t.label() for t in self.terms]

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        def factor_dict(f: TermFactor) -> dict:
            d = {"variable": f.variable, "lag": f.lag}
            if f.transform != "identity":
                d["transform"] = f.transform
                d["harmonic"] = f.harmonic
            return d

        def term_dict(t: RegressorTerm) -> dict:
            return {"label": t.label(), "factors": [factor_dict(f) for f in t.factors]}

        out = {
            "basis": {"kind": self.basis.kind, "degree": self.basis.degree},
            "terms": [term_dict(t) for t in self.terms],
            "coefficients": list(self.coefficients),
            "err": None if self.err_values is None else list(self.err_values),
            "scaling": None
            if self.scaling is None
            else {k: [v[0], v[1]] for k, v in self.scaling.items()},
            "max_lags": {
                "output": self.max_output_lag,
                "input": self.max_input_lag,
                "delay": self.input_delay,
            },
        }
        if self.noise_terms:
            out["noise_terms"] = [term_dict(t) for t in self.noise_terms]
            out["noise_coefficients"] = list(self.noise_coefficients)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "NarxModel":
        def parse_term(d: dict) -> RegressorTerm:
            return RegressorTerm(
                tuple(
                    TermFactor(
                        variable=f["variable"],
                        lag=f["lag"],
                        transform=f.get("transform", "identity"),
                        harmonic=f.get("harmonic", 0),
                    )
                    for f in d["factors"]
                )
            )

        try:
            lags = data["max_lags"]
            return cls(
                basis=BasisSpec(**data["basis"]),
                terms=tuple(parse_term(t) for t in data["terms"]),
                coefficients=tuple(data["coefficients"]),
                err_values=None if data.get("err") is None else tuple(data["err"]),
                scaling=None
                if data.get("scaling") is None
                else {k: (v[0], v[1]) for k, v in data["scaling"].items()},
                max_output_lag=lags["output"],
                max_input_lag=lags["input"],
                input_delay=lags.get("delay", 1),
                noise_terms=tuple(parse_term(t) for t in data.get("noise_terms", [])),
                noise_coefficients=tuple(data.get("noise_coefficients", [])),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidSpecError(f"malformed model dictionary: {exc!r}") from None

    def save(self, path) -> Path:
        path = Path(path)
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")
        return path

    @classmethod
    def load(cls, path) -> "NarxModel":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidSpecError(f"{path}: not valid JSON ({exc})") from None
        return cls.from_dict(data)
