"""Correlated Gaussian beam jitter with a Lorentzian spectrum.

A first-order Gauss-Markov process has PSD ``S(0) / (1 + (f/f_r)^2)`` and
autocorrelation ``exp(-|tau|/tau_0)`` with ``tau_0 = 1/(2 pi f_r)``. Samples
are produced with the exact discretization, so the variance and lag
correlations are correct for any sample interval.
"""
from __future__ import annotations

import contextlib
import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np
from scipy import signal

from . import _kernels
from .config import MissionParams, derive_scales

DOF_LABELS = ("radial", "tangential")


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent, reproducible PCG64 stream for ``(seed, *key)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class JitterSeries:
    dt: float
    samples: np.ndarray
    dof_label: str = "radial"

    def __len__(self):
        return self.samples.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) * self.dt


def ar_coefficient(dt: float, p: MissionParams) -> float:
    """Lag-one correlation exp(-dt / tau_0) of the sampled process."""
    return math.exp(-dt / derive_scales(p).tau_0)


def synthesize(p: MissionParams, dt: float, n: int, seed: int, dof_label: str = "radial") -> JitterSeries:
    """Stationary jitter realization of ``n`` samples spaced ``dt`` apart.

    Radial and tangential series draw from separate substreams of ``seed``.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    if dof_label not in DOF_LABELS:
        raise ValueError(f"dof_label must be one of {DOF_LABELS}")
    rng = substream(seed, DOF_LABELS.index(dof_label))
    xi = rng.standard_normal(n)
    x = _kernels.ou_filter(xi, ar_coefficient(dt, p), p.sigma_n)
    return JitterSeries(dt, x, dof_label)


def estimate_acf(series: JitterSeries, max_lag: int) -> np.ndarray:
    """Biased, normalized sample autocorrelation for lags ``0..max_lag``."""
    x = np.asarray(series.samples, dtype=float)
    n = x.shape[0]
    if max_lag < 0 or max_lag >= n / 10:
        raise ValueError(f"max_lag must be < n/10 = {n / 10:g}")
    x = x - x.mean()
    var = np.dot(x, x)
    if var == 0.0:
        raise ValueError("series has zero variance; ACF undefined")
    nfft = 1 << (2 * n - 1).bit_length()
    spec = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(spec * np.conj(spec), nfft)[: max_lag + 1]
    return acov / var


def estimate_psd(series: JitterSeries, nperseg: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Welch-averaged one-sided periodogram (frequencies in Hz, density in rad^2/Hz)."""
    x = np.asarray(series.samples, dtype=float)
    n = x.shape[0]
    if n < 1024:
        raise ValueError("series too short for a PSD estimate (need >= 1024 samples)")
    if nperseg is None:
        nperseg = min(1 << 16, 1 << (n.bit_length() - 4))
    nperseg = min(nperseg, n)
    return signal.welch(x, fs=1.0 / series.dt, window="hann", nperseg=nperseg, detrend="constant")


@dataclass(frozen=True)
class JitterCheck:
    rms: float
    rms_target: float
    acf_tau0: float
    psd_plateau: float
    psd_target: float
    rms_ok: bool
    acf_ok: bool
    psd_ok: bool

    @property
    def passed(self) -> bool:
        return self.rms_ok and self.acf_ok and self.psd_ok


def validate(
    series: JitterSeries,
    p: MissionParams,
    *,
    rms_tol: float = 0.02,
    acf_tol: float = 0.02,
    psd_tol: float = 0.10,
) -> JitterCheck:
    """Compare RMS, ACF at tau_0 and the low-frequency PSD plateau to their targets."""
    tau0 = derive_scales(p).tau_0
    x = series.samples
    rms = float(np.sqrt(np.mean(x * x)))
    lag = tau0 / series.dt
    lo = int(math.floor(lag))
    acf = estimate_acf(series, lo + 1)
    frac = lag - lo
    acf_tau0 = float((1 - frac) * acf[lo] + frac * acf[lo + 1])
    # resolve f << f_r: at least 100 bins below the roll-off
    want = 100.0 / (p.f_r * series.dt)
    nperseg = min(1 << int(math.ceil(math.log2(want))), len(series) // 8)
    f, s = estimate_psd(series, nperseg=nperseg)
    band = (f > 0) & (f <= 0.1 * p.f_r)
    plateau = float(np.mean(s[band])) if band.any() else float("nan")
    target_psd = p.psd_level
    return JitterCheck(
        rms=rms,
        rms_target=p.sigma_n,
        acf_tau0=acf_tau0,
        psd_plateau=plateau,
        psd_target=target_psd,
        rms_ok=abs(rms - p.sigma_n) <= rms_tol * p.sigma_n,
        acf_ok=abs(acf_tau0 - math.exp(-1.0)) <= acf_tol * math.exp(-1.0),
        psd_ok=abs(plateau - target_psd) <= psd_tol * target_psd,
    )


@contextlib.contextmanager
def text_sink(out: str | Path | TextIO):
    """Yield ``out`` itself if it is a stream, else the file it names opened for writing."""
    if hasattr(out, "write"):
        yield out
    else:
        with open(out, "w", newline="") as fh:
            yield fh


def write_series_csv(series: JitterSeries, out: str | Path | TextIO) -> None:
    """Write the sampled series to a path or an open text stream."""
    with text_sink(out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_seconds", "x_radians"])
        for t, x in zip(series.times, series.samples):
            w.writerow([repr(float(t)), repr(float(x))])
