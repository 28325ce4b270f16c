"""Monte Carlo spiral-scan acquisition with the hard-sphere detection rule.

Each trial places the spacecraft at a truncated-Rayleigh radius and uniform
azimuth, sweeps an Archimedean spiral at constant tangential speed and
declares detection the first time the jittered beam centre comes within R_d.

Only the stretch of the scan whose nominal radius lies within
``R_d + 10 sigma_n`` of the spacecraft radius is simulated; the jitter
process is stationary and Markov, so starting it from its stationary law at
the band entry is exact, and a beam outside the band misses with
probability below 1e-22.
"""
from __future__ import annotations

import csv
import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import TextIO

import numpy as np

from . import _kernels
from .analytic import FailureEstimate, Method
from .config import TWO_PI, MissionParams, derive_scales
from .jitter import ar_coefficient, substream, text_sink

BAND_SIGMAS = 10.0
Z95 = 1.959963984540054


class DofMode(str, enum.Enum):
    RADIAL = "radial-only"
    RADIAL_TANGENTIAL = "radial-and-tangential"

    @classmethod
    def parse(cls, value) -> "DofMode":
        aliases = {"1": cls.RADIAL, "1dof": cls.RADIAL, "2": cls.RADIAL_TANGENTIAL, "2dof": cls.RADIAL_TANGENTIAL}
        if isinstance(value, cls):
            return value
        return aliases.get(str(value).lower()) or cls(value)


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("SPIRAL_ACQ_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def spiral_arc_length(theta, b: float):
    """Arc length of r = b*theta from the origin."""
    theta = np.asarray(theta, dtype=float)
    return 0.5 * b * (theta * np.sqrt(1.0 + theta * theta) + np.arcsinh(theta))


def spiral_angle(s, b: float) -> np.ndarray:
    """Invert :func:`spiral_arc_length` by Newton iteration.

    The start value sqrt(2 s / b) lies right of the root and the arc length is
    convex in theta, so the iteration decreases monotonically onto it.
    """
    s = np.asarray(s, dtype=float)
    theta = np.sqrt(2.0 * s / b)
    for _ in range(100):
        step = (spiral_arc_length(theta, b) - s) / (b * np.sqrt(1.0 + theta * theta))
        theta = theta - step
        if np.all(np.abs(step) <= 1e-15 * (1.0 + theta)):
            break
    return theta


@dataclass(frozen=True)
class SpiralScan:
    """Archimedean spiral swept outward at constant tangential speed.

    The sweep continues ``overscan`` past ``r_max`` so that a spacecraft near
    the rim still has a track on either side; otherwise the outermost
    revolution leaves a crescent just inside ``r_max`` uncovered.
    """

    pitch: float
    speed: float
    r_max: float
    dt: float
    overscan: float = 0.0

    @classmethod
    def for_params(cls, p: MissionParams) -> "SpiralScan":
        # geometric resolution R_d/10 per sample, and 20 samples per tau_0
        dt = min(p.r_d / (10.0 * p.gamma), derive_scales(p).tau_0 / 20.0)
        return cls(pitch=p.d_t, speed=p.gamma, r_max=p.r_uc, dt=dt, overscan=p.r_d + BAND_SIGMAS * p.sigma_n)

    @property
    def b(self) -> float:
        return self.pitch / TWO_PI

    @property
    def r_end(self) -> float:
        return self.r_max + self.overscan

    @property
    def duration(self) -> float:
        """Nominal scan time out to ``r_max``."""
        return float(spiral_arc_length(self.r_max / self.b, self.b)) / self.speed

    @property
    def sweep_duration(self) -> float:
        """Scan time including the overscan."""
        return float(spiral_arc_length(self.r_end / self.b, self.b)) / self.speed

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.sweep_duration / self.dt)) + 1

    @cached_property
    def track(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(theta, r, cos theta, sin theta) at t_k = k dt."""
        s = np.arange(self.n_steps) * (self.speed * self.dt)
        theta = spiral_angle(s, self.b)
        arrays = (theta, self.b * theta, np.cos(theta), np.sin(theta))
        for arr in arrays:
            arr.setflags(write=False)
        return arrays

    def step_at_radius(self, r: float) -> int:
        """Index of the last sample whose nominal radius does not exceed ``r``."""
        r = min(max(r, 0.0), self.r_end)
        s = float(spiral_arc_length(r / self.b, self.b))
        return min(int(math.floor(s / (self.speed * self.dt))), self.n_steps - 1)


@dataclass(frozen=True)
class TrialRecord:
    trial_idx: int
    sc_position: tuple[float, float]
    detected: bool
    detection_time: float | None
    detection_track: int | None
    nearest_track_offset: float


@dataclass(frozen=True)
class McEstimate:
    n_trials: int
    n_failures: int
    p_fail: float
    ci95_halfwidth: float
    seed: int
    dof_mode: DofMode

    @property
    def sigma(self) -> float:
        """Standard error implied by the Wilson interval."""
        return self.ci95_halfwidth / Z95

    def to_failure_estimate(self, params_hash: str = "") -> FailureEstimate:
        return FailureEstimate(self.p_fail, Method.MONTE_CARLO, self.ci95_halfwidth, params_hash)


@dataclass(frozen=True)
class SearchTimeEstimate:
    t_ms: float
    ci95_halfwidth: float
    n_trials: int
    mean_scans: float
    seed: int


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("n must be positive")
    phat = k / n
    denom = 1.0 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z / denom * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n))
    # the bounds are exact at the edges; avoid roundoff residue there
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


class _Context:
    """Per-(params, scan, mode) constants shared by all trials."""

    def __init__(self, p: MissionParams, scan: SpiralScan, dof_mode: DofMode):
        self.p = p
        self.scan = scan
        self.two_dof = dof_mode is DofMode.RADIAL_TANGENTIAL
        self.theta, self.rad, self.cos_t, self.sin_t = scan.track
        self.a = ar_coefficient(scan.dt, p)
        self.r_det2 = p.r_d * p.r_d
        self.margin = p.r_d + BAND_SIGMAS * p.sigma_n
        self.trunc = -math.expm1(-p.r_uc**2 / (2 * p.sigma_uc**2))
        self._empty = np.empty(0)

    def place(self, rng: np.random.Generator) -> tuple[float, float]:
        u, v = rng.random(2)
        # inverse CDF of the Rayleigh law truncated at r_uc
        r = self.p.sigma_uc * math.sqrt(-2.0 * math.log1p(-u * self.trunc))
        return r, TWO_PI * v

    def scan_once(self, rng: np.random.Generator, r_sc: float, x: float, y: float) -> int:
        k0 = self.scan.step_at_radius(r_sc - self.margin)
        k1 = self.scan.step_at_radius(r_sc + self.margin) + 1
        n = k1 - k0
        xi_r = rng.standard_normal(n)
        xi_t = rng.standard_normal(n) if self.two_dof else self._empty
        return _kernels.scan(self.cos_t, self.sin_t, self.rad, k0, x, y,
                             self.r_det2, self.a, self.p.sigma_n, xi_r, xi_t)

    def nearest_track_offset(self, r_sc: float, phi: float) -> float:
        b = self.scan.b
        n = max(0, round((r_sc / b - phi) / TWO_PI))
        return abs(r_sc - b * (phi + TWO_PI * n))


def run_trial(
    p: MissionParams,
    scan: SpiralScan | None,
    seed: int,
    trial_idx: int,
    dof_mode: DofMode | str = DofMode.RADIAL,
    *,
    _ctx: _Context | None = None,
) -> TrialRecord:
    """One spacecraft placement and one full outward scan."""
    ctx = _ctx or _Context(p, scan or SpiralScan.for_params(p), DofMode.parse(dof_mode))
    rng = substream(seed, trial_idx)
    r_sc, phi = ctx.place(rng)
    x, y = r_sc * math.cos(phi), r_sc * math.sin(phi)
    k = ctx.scan_once(rng, r_sc, x, y)
    detected = k >= 0
    return TrialRecord(
        trial_idx=trial_idx,
        sc_position=(x, y),
        detected=detected,
        detection_time=k * ctx.scan.dt if detected else None,
        detection_track=int(ctx.theta[k] // TWO_PI) if detected else None,
        nearest_track_offset=ctx.nearest_track_offset(r_sc, phi),
    )


def _blocks(n: int, parts: int) -> list[range]:
    size = -(-n // parts)
    return [range(i, min(i + size, n)) for i in range(0, n, size)]


def _map_blocks(fn, n_trials: int, threads: int | None):
    threads = resolve_threads(threads)
    blocks = _blocks(n_trials, max(1, min(threads * 4, n_trials)))
    if threads == 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, blocks))


def simulate_trials(
    p: MissionParams,
    n_trials: int,
    seed: int,
    dof_mode: DofMode | str = DofMode.RADIAL,
    *,
    scan: SpiralScan | None = None,
    threads: int | None = None,
) -> list[TrialRecord]:
    """All trial records, ordered by trial index."""
    ctx = _Context(p, scan or SpiralScan.for_params(p), DofMode.parse(dof_mode))

    def block(idx):
        return [run_trial(p, None, seed, i, _ctx=ctx) for i in idx]

    return [rec for part in _map_blocks(block, n_trials, threads) for rec in part]


def estimate_p_fail(
    p: MissionParams,
    n_trials: int,
    seed: int,
    dof_mode: DofMode | str = DofMode.RADIAL,
    *,
    scan: SpiralScan | None = None,
    threads: int | None = None,
) -> McEstimate:
    """Single-scan failure probability with a Wilson 95% interval."""
    if n_trials < 100:
        raise ValueError("n_trials must be >= 100")
    mode = DofMode.parse(dof_mode)
    ctx = _Context(p, scan or SpiralScan.for_params(p), mode)

    def block(idx):
        fails = 0
        for i in idx:
            rng = substream(seed, i)
            r_sc, phi = ctx.place(rng)
            if ctx.scan_once(rng, r_sc, r_sc * math.cos(phi), r_sc * math.sin(phi)) < 0:
                fails += 1
        return fails

    n_fail = sum(_map_blocks(block, n_trials, threads))
    lo, hi = wilson_interval(n_fail, n_trials)
    return McEstimate(n_trials, n_fail, n_fail / n_trials, 0.5 * (hi - lo), seed, mode)


class ScanLimitError(RuntimeError):
    """A trial needed more repeated scans than allowed."""


def estimate_mean_search_time(
    p: MissionParams,
    n_trials: int,
    seed: int,
    dof_mode: DofMode | str = DofMode.RADIAL,
    *,
    flyback: bool = True,
    max_scans: int = 1000,
    scan: SpiralScan | None = None,
    threads: int | None = None,
) -> SearchTimeEstimate:
    """Mean time to detection when failed scans are repeated with fresh jitter.

    A failed scan costs the nominal scan duration out to ``r_max``, plus the
    same again for the return sweep to the centre when ``flyback`` is set.
    """
    if n_trials < 100:
        raise ValueError("n_trials must be >= 100")
    ctx = _Context(p, scan or SpiralScan.for_params(p), DofMode.parse(dof_mode))
    penalty = ctx.scan.duration * (2.0 if flyback else 1.0)

    def block(idx):
        times = np.empty(len(idx))
        scans = 0
        for j, i in enumerate(idx):
            rng = substream(seed, i)
            r_sc, phi = ctx.place(rng)
            x, y = r_sc * math.cos(phi), r_sc * math.sin(phi)
            for attempt in range(max_scans):
                k = ctx.scan_once(rng, r_sc, x, y)
                if k >= 0:
                    times[j] = attempt * penalty + k * ctx.scan.dt
                    scans += attempt + 1
                    break
            else:
                raise ScanLimitError(f"trial {i}: no detection within {max_scans} scans")
        return times, scans

    parts = _map_blocks(block, n_trials, threads)
    times = np.concatenate([t for t, _ in parts])
    n_scans = sum(s for _, s in parts)
    half = Z95 * float(np.std(times, ddof=1)) / math.sqrt(n_trials)
    return SearchTimeEstimate(float(times.mean()), half, n_trials, n_scans / n_trials, seed)


def write_trials_csv(records: list[TrialRecord], out: str | Path | TextIO) -> None:
    """Write one CSV row per trial to a path or an open text stream."""
    with text_sink(out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial_idx", "sc_x", "sc_y", "detected", "detection_time", "detection_track"])
        for rec in records:
            w.writerow([
                rec.trial_idx,
                repr(rec.sc_position[0]),
                repr(rec.sc_position[1]),
                int(rec.detected),
                "" if rec.detection_time is None else repr(rec.detection_time),
                "" if rec.detection_track is None else rec.detection_track,
            ])
