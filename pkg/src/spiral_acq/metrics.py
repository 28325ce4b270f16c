"""Figures of merit built on the analytic failure probability.

Search-time convention: a failed outward scan is followed by a fly-back to
the centre before the next scan starts, so each failure costs two full scan
durations. ``flyback=False`` charges a single scan duration instead.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .analytic import p_fail_averaged, p_fail_uncorrelated
from .config import TWO_PI, MissionParams, ValidityWarning
from .numerics import NoSignChange, find_root, minimize_scalar


def eta(p: MissionParams) -> float:
    """Compound correlation parameter gamma / (sigma_uc f_r)."""
    return p.gamma / (p.sigma_uc * p.f_r)


def t_single_scan(p: MissionParams) -> float:
    """Mean time to reach a Rayleigh-distributed spacecraft in one scan."""
    return TWO_PI * p.sigma_uc**2 / (p.d_t * p.gamma)


def t_full_scan(p: MissionParams) -> float:
    """Duration of a complete scan out to r_uc."""
    return math.pi * p.r_uc**2 / (p.d_t * p.gamma)


def t_multi_scan(p: MissionParams, p_fail: float, *, flyback: bool = True) -> float:
    """Expected total search time when failed scans are repeated."""
    if not 0.0 <= p_fail < 1.0:
        raise ValueError(f"p_fail must lie in [0, 1), got {p_fail}")
    k = p.f_uc**2 if flyback else p.f_uc**2 / 2.0
    return t_single_scan(p) * (1.0 + k * p_fail / (1.0 - p_fail))


@dataclass(frozen=True)
class SearchTimeCurve:
    track_widths: np.ndarray
    t_ms_values: np.ndarray
    t_ms_min: float
    d_t_min: float
    overlap_min: float
    flags: tuple[str, ...] = field(default=())


def _local_minima(v: np.ndarray) -> list[int]:
    return [i for i in range(1, len(v) - 1) if v[i] <= v[i - 1] and v[i] <= v[i + 1]]


def optimize_track_width(
    p: MissionParams,
    d_t_range: tuple[float, float] | None = None,
    *,
    n_grid: int = 41,
    flyback: bool = True,
    precision: str = "fast",
    tol: float = 1e-9,
) -> SearchTimeCurve:
    """Track width minimizing the multi-scan search time.

    A grid scan precedes a bounded refinement around the grid minimum. If the
    grid shows several local minima the grid argmin is kept and the result
    is flagged ``"multimodal"``; a minimizer on the range edge is flagged
    ``"boundary"``.
    """
    if d_t_range is None:
        d_t_range = (max(2.0 * p.sigma_n, 0.5 * p.r_d), 2.0 * p.r_d * (1.0 - 1e-6))
    lo, hi = d_t_range
    if not 0 < lo < hi < 2.0 * p.r_d:
        raise ValueError("d_t_range must satisfy 0 < lo < hi < 2 r_d")

    def t_ms(d_t: float) -> float:
        q = p.with_(d_t=d_t)
        return t_multi_scan(q, p_fail_averaged(q, precision=precision).p_fail, flyback=flyback)

    grid = np.linspace(lo, hi, n_grid)
    values = np.array([t_ms(d) for d in grid])
    i = int(np.argmin(values))
    flags = []
    if len(_local_minima(values)) > 1:
        flags.append("multimodal")
        d_min, t_min = float(grid[i]), float(values[i])
    else:
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, n_grid - 1)]
        d_min, t_min = minimize_scalar(t_ms, a, b, tol)
    if abs(d_min - lo) <= 2 * tol or abs(d_min - hi) <= 2 * tol:
        flags.append("boundary")
    return SearchTimeCurve(grid, values, t_min, d_min, 2.0 * p.r_d - d_min, tuple(flags))


class TargetNotBracketed(ValueError):
    """The requested failure probability is not reachable inside the track-width bracket."""


def _solve_width(model, target: float, lo: float, hi: float, label: str) -> float:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            return find_root(lambda d: model(d) - target, lo, hi, tol=1e-13)
    except NoSignChange as exc:
        raise TargetNotBracketed(f"{label}: P_fail={target:g} not reachable for d_t in [{lo:.4g}, {hi:.4g}]") from exc


def efficiency_factor(
    p: MissionParams,
    target_p_fail: float,
    *,
    precision: str = "fast",
) -> tuple[float, float, float]:
    """Correlation efficiency factor at a target failure probability.

    Returns ``(F_eff, d_t_correlated, d_t_uncorrelated)``: the track widths at
    which the correlated and the uncorrelated model reach the target, and
    their ratio.
    """
    if not 0.0 < target_p_fail < 1.0:
        raise ValueError("target_p_fail must lie in (0, 1)")
    lo = p.sigma_n if p.sigma_n > 0 else 1e-3 * p.r_d
    hi = 2.0 * p.r_d * (1.0 - 1e-9)
    d_uc = _solve_width(lambda d: p_fail_uncorrelated(p.with_(d_t=d)).p_fail, target_p_fail, lo, hi, "uncorrelated")
    d_c = _solve_width(
        lambda d: p_fail_averaged(p.with_(d_t=d), precision=precision).p_fail, target_p_fail, lo, hi, "correlated"
    )
    return d_c / d_uc, d_c, d_uc
