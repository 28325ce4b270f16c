"""Spiral-scan acquisition with time-correlated pointing jitter.

Analytic failure probabilities for a 2-track model in which the radial beam
jitter on adjacent spiral revolutions is correlated, a Monte Carlo simulator
of the same scan, and the search-time figures of merit derived from both.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .analytic import (
    FailureEstimate,
    Method,
    delta_mean,
    p_fail_averaged,
    p_fail_delta_mean,
    p_fail_given_delta,
    p_fail_linearized,
    p_fail_uncorrelated,
)
from .config import MissionParams, ParamError, ValidityWarning, derive_scales, load_params

__all__ = [
    "FailureEstimate",
    "Method",
    "MissionParams",
    "ParamError",
    "ValidityWarning",
    "__version__",
    "delta_mean",
    "derive_scales",
    "load_params",
    "p_fail_averaged",
    "p_fail_delta_mean",
    "p_fail_given_delta",
    "p_fail_linearized",
    "p_fail_uncorrelated",
]
