"""Nonlinear ARX identification: model types, FROLS fitting, simulation."""

from .model import BasisSpec, FitConfig, NarxModel, RegressorTerm, TermFactor
from .fit import (
    CandidateSet,
    FrolsSelection,
    build_candidates,
    estimate_els,
    fit_narx,
    fit_narx_multi,
    frols_select,
    rrse,
)
from .simulate import ar_fixed_point, free_run, predict_one_step
from .estimator import FrolsNarx
from .grid import GridScore, GridSearchResult, default_grid, grid_search, write_scores_csv

__all__ = [
    "BasisSpec",
    "FitConfig",
    "NarxModel",
    "RegressorTerm",
    "TermFactor",
    "CandidateSet",
    "FrolsSelection",
    "build_candidates",
    "estimate_els",
    "fit_narx",
    "fit_narx_multi",
    "frols_select",
    "rrse",
    "ar_fixed_point",
    "free_run",
    "predict_one_step",
    "FrolsNarx",
    "GridScore",
    "GridSearchResult",
    "default_grid",
    "grid_search",
    "write_scores_csv",
]
