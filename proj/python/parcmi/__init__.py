"""Parametric conditional mean imputation for a censored covariate."""

import json as _json

from ._core import (
    Family,
    FamilySpec,
    FittedModel,
    ParcmiError,
    Strategy,
    cm_interval,
    cm_loglogistic_analytic,
    cm_lognormal_analytic,
    cm_right,
    cm_weibull_analytic,
    fit,
    impute,
)
from . import _core


def analyze(y, w, delta, z=None, *, family="lognormal", strategy=None, B=1, seed=0,
            flavor="bootstrap", confidence=0.95):
    """Impute, fit OLS of y on (1, w, z) per imputation and pool with Rubin's rules."""
    kwargs = dict(family=family, strategy=strategy, B=B, seed=seed, flavor=flavor,
                  confidence=confidence)
    if z is not None:
        kwargs["z"] = z
    return _json.loads(_core.analyze_json(y, w, delta, **kwargs))


def generate_replicate(design=None, index=0):
    """(y, w, delta, z, x) for replicate `index` of a simulation design."""
    return _core.generate_replicate(_json.dumps(design or {}), index)


def run_cell(design=None):
    """Run one simulation cell; `design` uses the design-file keys."""
    return _json.loads(_core.run_cell_json(_json.dumps(design or {})))


__all__ = [
    "Family", "FamilySpec", "FittedModel", "ParcmiError", "Strategy", "analyze", "cm_interval",
    "cm_loglogistic_analytic", "cm_lognormal_analytic", "cm_right", "cm_weibull_analytic", "fit",
    "generate_replicate", "impute", "run_cell",
]
