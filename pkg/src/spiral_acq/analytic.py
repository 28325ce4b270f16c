"""Analytic failure probabilities of the 2-track model with correlated jitter.

The spacecraft sits at offset ``x_t`` from track n (uniform on ``[0, D_t/2]``).
The beam misses it on track n when the radial jitter ``X_n`` exceeds
``R_d - x_t`` and on track n+1 when ``X_{n+1} < D_t - R_d - x_t``, with
``X_{n+1} = delta X_n + eps X_perp`` and ``eps = sqrt(1 - delta**2)``.
The correlation amplitude ``delta = exp(-beta r)`` decays with the spiral
radius ``r`` because a revolution takes ``2 pi r / gamma``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import erf, erfcx

from .config import TWO_PI, MissionParams, derive_scales
from .numerics import DEFAULT_QUAD, INNER_QUAD, QuadratureSpec, integrate

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Gaussian factor truncation, in units of sigma_n (tail mass < 1e-22)
GAUSS_SPAN = 10.0
# Rayleigh r-average truncation, in units of sigma_uc (tail mass e^-32)
RAYLEIGH_SPAN = 8.0
# above this correlation the exact full-correlation limit is used
DELTA_MAX = 1.0 - 1e-9
DELTA_GRID_NODES = 256


class Method(str, enum.Enum):
    CORRELATED_EXACT = "correlated-exact"
    CORRELATED_AT_DELTA_MEAN = "correlated-at-delta-mean"
    LINEARIZED = "linearized"
    UNCORRELATED_LIMIT = "uncorrelated-limit"
    FULL_CORRELATION_LIMIT = "full-correlation-limit"
    MONTE_CARLO = "monte-carlo"


@dataclass(frozen=True)
class FailureEstimate:
    p_fail: float
    method: Method
    ci_halfwidth: float = 0.0
    params_hash: str = ""
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not 0.0 <= self.p_fail <= 1.0:
            raise ValueError(f"p_fail {self.p_fail} outside [0, 1]")
        if self.ci_halfwidth < 0:
            raise ValueError("ci_halfwidth must be >= 0")


@dataclass(frozen=True)
class CorrelationState:
    delta_r: float
    epsilon_r: float
    r: float
    delta_mean: float


def rayleigh_pdf(r, sigma_uc: float):
    """Radial density of the spacecraft position (rad^-1)."""
    r = np.asarray(r, dtype=float)
    out = r / sigma_uc**2 * np.exp(-(r**2) / (2.0 * sigma_uc**2))
    return out if out.ndim else float(out)


def psd(f, p: MissionParams):
    """One-sided Lorentzian jitter PSD in rad^2/Hz."""
    f = np.asarray(f, dtype=float)
    out = p.psd_level / (1.0 + (f / p.f_r) ** 2)
    return out if out.ndim else float(out)


def autocorrelation(tau, p: MissionParams):
    """Normalized jitter autocorrelation exp(-|tau| / tau_0)."""
    tau = np.asarray(tau, dtype=float)
    out = np.exp(-np.abs(tau) * TWO_PI * p.f_r)
    return out if out.ndim else float(out)


def correlation_at_radius(r: float, p: MissionParams) -> CorrelationState:
    if r < 0:
        raise ValueError("radius must be >= 0")
    d = math.exp(-derive_scales(p).beta * r)
    return CorrelationState(delta_r=d, epsilon_r=math.sqrt(1.0 - d * d), r=r, delta_mean=delta_mean(p))


def delta_mean(p: MissionParams) -> float:
    """Rayleigh-average of exp(-beta r), via erfcx to stay finite for large beta."""
    x = p.sigma_uc * derive_scales(p).beta
    return float(1.0 - x * math.sqrt(math.pi / 2.0) * erfcx(x / SQRT2))


def _estimate(value: float, method: Method, p: MissionParams, flags=()) -> FailureEstimate:
    return FailureEstimate(min(max(value, 0.0), 1.0), method, 0.0, p.digest(), tuple(flags))


def full_correlation_limit(p: MissionParams) -> FailureEstimate:
    """Fully correlated jitter is a fixed bias: capture is certain iff the footprints overlap."""
    return _estimate(0.0 if p.overlap > 0 else 1.0, Method.FULL_CORRELATION_LIMIT, p)


def _uncorrelated(r_d: float, d_t: float, sigma_n: float, spec: QuadratureSpec) -> float:
    if sigma_n == 0.0:
        return 0.0 if d_t < 2 * r_d else 1.0
    s = SQRT2 * sigma_n
    half = 0.5 * d_t

    def f(v):
        x_t = v * half
        return 0.25 * math.erfc((r_d - x_t) / s) * math.erfc((r_d - d_t + x_t) / s)

    return integrate(f, 0.0, 1.0, spec)


def p_fail_uncorrelated(p: MissionParams, spec: QuadratureSpec = DEFAULT_QUAD) -> FailureEstimate:
    """Failure probability when jitter on adjacent tracks is independent.

    Defined up to and including touching footprints, d_t == 2 r_d.
    """
    p.require_overlap(allow_touching=True)
    return _estimate(_uncorrelated(p.r_d, p.d_t, p.sigma_n, spec), Method.UNCORRELATED_LIMIT, p)


def _given_delta(
    delta: float, r_d: float, d_t: float, sigma_n: float,
    spec: QuadratureSpec, inner: QuadratureSpec,
) -> float:
    if delta >= DELTA_MAX:
        return 0.0 if d_t < 2 * r_d else 1.0
    if sigma_n == 0.0:
        return 0.0 if d_t < 2 * r_d else 1.0
    eps = math.sqrt((1.0 - delta) * (1.0 + delta))
    scale = 1.0 / (eps * SQRT2)
    half = 0.5 * d_t
    erfc, exp = math.erfc, math.exp

    def outer(v):
        x_t = v * half
        lo = (r_d - x_t) / sigma_n        # X_n / sigma_n must exceed this
        k = (r_d - d_t + x_t) / sigma_n

        def g(u):
            return INV_SQRT_2PI * exp(-0.5 * u * u) * 0.5 * erfc((k + delta * u) * scale)

        # steep erfc front where its argument crosses zero
        pts = [-k / delta] if delta > 0 else None
        return integrate(g, lo, lo + GAUSS_SPAN, inner, points=pts)

    return integrate(outer, 0.0, 1.0, spec)


def p_fail_given_delta(
    delta: float,
    p: MissionParams,
    spec: QuadratureSpec = DEFAULT_QUAD,
    *,
    method: Method = Method.CORRELATED_EXACT,
) -> FailureEstimate:
    """Failure probability for a fixed correlation amplitude ``delta``."""
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    p.require_overlap()
    if delta >= DELTA_MAX:
        lim = full_correlation_limit(p)
        return _estimate(lim.p_fail, method, p, ("full-correlation-limit",))
    v = _given_delta(delta, p.r_d, p.d_t, p.sigma_n, spec, INNER_QUAD)
    return _estimate(v, method, p)


def p_fail_delta_mean(p: MissionParams, spec: QuadratureSpec = DEFAULT_QUAD) -> FailureEstimate:
    """Failure probability evaluated at the mean correlation amplitude."""
    return p_fail_given_delta(delta_mean(p), p, spec, method=Method.CORRELATED_AT_DELTA_MEAN)


class DeltaGrid:
    """Memo of ``P_fail(delta)`` on a fixed node set, interpolated monotonically.

    Nodes are cosine-spaced on [0, 1] so both ends are resolved; the value at
    ``delta = 1`` is the full-correlation limit. Depends only on (r_d, d_t,
    sigma_n), so one grid serves any speed, roll-off and uncertainty width.
    """

    def __init__(self, r_d: float, d_t: float, sigma_n: float,
                 n: int = DELTA_GRID_NODES, spec: QuadratureSpec = DEFAULT_QUAD):
        u = np.linspace(0.0, 1.0, n)
        nodes = 0.5 - 0.5 * np.cos(np.pi * u)
        nodes[0], nodes[-1] = 0.0, 1.0
        values = np.array([_given_delta(float(d), r_d, d_t, sigma_n, spec, INNER_QUAD) for d in nodes])
        self.nodes = nodes
        self.values = values
        # slopes between denormal neighbours overflow harmlessly to zero weight
        with np.errstate(over="ignore", divide="ignore"):
            self._interp = PchipInterpolator(nodes, values)
        self.nodes.setflags(write=False)
        self.values.setflags(write=False)

    def __call__(self, delta):
        out = self._interp(np.clip(delta, 0.0, 1.0))
        return out if np.ndim(out) else float(out)


@lru_cache(maxsize=64)
def delta_grid(r_d: float, d_t: float, sigma_n: float,
               n: int = DELTA_GRID_NODES, spec: QuadratureSpec = DEFAULT_QUAD) -> DeltaGrid:
    return DeltaGrid(r_d, d_t, sigma_n, n, spec)


def p_fail_averaged(
    p: MissionParams,
    spec: QuadratureSpec = DEFAULT_QUAD,
    *,
    precision: str = "fast",
) -> FailureEstimate:
    """Failure probability averaged over the Rayleigh uncertainty distribution.

    ``precision="fast"`` interpolates ``P_fail(delta)`` from a cached
    :class:`DeltaGrid`; ``"exact"`` runs the nested quadrature at every node
    of the radius integral.
    """
    p.require_overlap()
    if precision not in ("fast", "exact"):
        raise ValueError(f"precision must be 'fast' or 'exact', got {precision!r}")
    beta = derive_scales(p).beta
    s2 = 2.0 * p.sigma_uc**2
    norm = 1.0 / p.sigma_uc**2
    span = RAYLEIGH_SPAN * p.sigma_uc
    points = None
    if precision == "fast":
        pf = delta_grid(p.r_d, p.d_t, p.sigma_n, DELTA_GRID_NODES, spec)
        # interpolant knots mapped to radius; the integrand is only C1 there
        inner = pf.nodes[(pf.nodes > 0) & (pf.nodes < 1)]
        knots = -np.log(inner) / beta
        points = [float(r) for r in knots if 0.0 < r < span] or None
    else:
        def pf(d):
            return _given_delta(d, p.r_d, p.d_t, p.sigma_n, spec, INNER_QUAD)

    def f(r):
        return pf(math.exp(-beta * r)) * r * norm * math.exp(-r * r / s2)

    v = integrate(f, 0.0, span, spec, points=points)
    return _estimate(v, Method.CORRELATED_EXACT, p)


def linear_coefficient(p: MissionParams) -> float:
    """Slope -dP_fail/d(delta) at delta = 0."""
    if p.sigma_n == 0.0:
        return 0.0
    s = p.sigma_n
    return (
        s / (2.0 * math.sqrt(math.pi) * p.d_t)
        * math.exp(-((2.0 * p.r_d - p.d_t) ** 2) / (4.0 * s * s))
        * float(erf(p.d_t / (2.0 * s)))
    )


def p_fail_linearized(p: MissionParams, spec: QuadratureSpec = DEFAULT_QUAD) -> FailureEstimate:
    """First-order expansion in delta, averaged over the uncertainty distribution.

    The correction can overshoot for strong correlation; the result is then
    clamped at zero and flagged ``"clamped"``.
    """
    p.require_overlap()
    puc = _uncorrelated(p.r_d, p.d_t, p.sigma_n, spec)
    v = puc - delta_mean(p) * linear_coefficient(p)
    flags = ("clamped",) if v < 0 else ()
    return _estimate(v, Method.LINEARIZED, p, flags)
