"""Scalar quadrature, root finding and minimization.

Thin, tolerance-explicit wrappers over QUADPACK and Brent/golden routines
so that callers state their accuracy needs once via :class:`QuadratureSpec`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate as _integrate
from scipy import optimize as _optimize


class NoSignChange(ValueError):
    """Root bracket endpoints have the same sign."""


class QuadratureWarning(RuntimeWarning):
    """Adaptive quadrature stopped before reaching the requested tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureSpec()
INNER_QUAD = QuadratureSpec(rel_tol=1e-11, abs_tol=1e-14)


class QuadResult(NamedTuple):
    value: float
    abserr: float
    converged: bool


def _quad(f, a, b, spec, points=None) -> QuadResult:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", _integrate.IntegrationWarning)
        value, err = _integrate.quad(
            f, a, b,
            epsabs=spec.abs_tol, epsrel=spec.rel_tol,
            limit=max(spec.max_subdivisions, 4 * len(points or ()) + 50), points=points,
        )
    # roundoff warnings at tolerances near machine precision are benign
    # when the error estimate still meets the request
    ok = err <= max(spec.rel_tol * abs(value), spec.abs_tol) * 10
    failed = [w for w in caught if issubclass(w.category, _integrate.IntegrationWarning)]
    converged = not failed or ok
    if not converged:
        warnings.warn(
            f"quadrature on [{a:.6g}, {b:.6g}] unconverged: estimate {value:.6g} +/- {err:.2g}",
            QuadratureWarning,
            stacklevel=3,
        )
    return QuadResult(value, err, converged)


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_QUAD,
    *,
    points: list[float] | None = None,
    full_output: bool = False,
):
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[a, b]``.

    Returns the value, or a :class:`QuadResult` with ``full_output=True``.
    Non-convergence emits :class:`QuadratureWarning` and returns the best
    estimate. ``points`` are interior breakpoints (kinks, steep fronts).
    """
    if not a < b:
        if a == b:
            return QuadResult(0.0, 0.0, True) if full_output else 0.0
        raise ValueError(f"integration bounds must satisfy a < b, got [{a}, {b}]")
    if points is not None:
        points = [x for x in points if a < x < b] or None
    res = _quad(f, a, b, spec, points)
    return res if full_output else res.value


def integrate_semi_infinite(
    f: Callable[[float], float],
    a: float,
    spec: QuadratureSpec = DEFAULT_QUAD,
    *,
    span: float | None = None,
    full_output: bool = False,
):
    """Integral of ``f`` over ``[a, inf)``.

    With ``span`` the range is truncated to ``[a, a + span]``; callers pick the
    span from the decay scale of ``f`` (e.g. 10 sigma for a Gaussian factor).
    Without it QUADPACK's infinite-range transform is used, which is only
    reliable when ``f`` varies on a scale of order one.
    """
    if span is not None:
        if span <= 0:
            raise ValueError("span must be positive")
        return integrate(f, a, a + span, spec, full_output=full_output)
    res = _quad(f, a, math.inf, spec)
    return res if full_output else res.value


def find_root(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Root of ``f`` in a sign-changing bracket (Brent, bisection-safeguarded)."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise NoSignChange(f"no sign change in bracket [{lo}, {hi}]: f={flo:.3g}, {fhi:.3g}")
    return _optimize.brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)


def minimize_scalar(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-9) -> tuple[float, float]:
    """(argmin, min) of a unimodal ``f`` on ``[lo, hi]`` by golden-section/parabolic steps."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    res = _optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": tol, "maxiter": 500})
    x, fx = float(res.x), float(res.fun)
    # bounded Brent never evaluates the endpoints themselves
    for edge in (lo, hi):
        fe = f(edge)
        if fe < fx:
            x, fx = edge, fe
    return x, fx
