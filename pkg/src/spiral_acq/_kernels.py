"""Hot loops: Gauss-Markov recurrence and the per-trial scan/detection sweep.

Each kernel has a numba version and a vectorized numpy/scipy version with the
same signature. The numba path is used when numba imports and the environment
variable ``SPIRAL_ACQ_NO_JIT`` is unset (or "0").
"""
from __future__ import annotations

import os

import numpy as np
from scipy.signal import lfilter

_DISABLE = os.environ.get("SPIRAL_ACQ_NO_JIT", "0").strip().lower() not in ("", "0", "false", "no")

try:
    if _DISABLE:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def ou_filter_numpy(xi: np.ndarray, a: float, sigma: float) -> np.ndarray:
    """x0 = sigma*xi0, x_k = a*x_{k-1} + sigma*sqrt(1-a^2)*xi_k."""
    u = np.empty_like(xi, dtype=float)
    if xi.size == 0:
        return u
    c = sigma * np.sqrt(1.0 - a * a)
    u[0] = sigma * xi[0]
    np.multiply(xi[1:], c, out=u[1:])
    return lfilter([1.0], [1.0, -a], u)


def scan_numpy(cos_t, sin_t, rad, k0, sc_x, sc_y, r_det2, a, sigma, xi_r, xi_t):
    """First step index ``k >= k0`` at which the jittered beam is within R_d, else -1.

    ``xi_t`` of length zero selects radial-only jitter.
    """
    n = xi_r.shape[0]
    if n == 0:
        return -1
    sl = slice(k0, k0 + n)
    rr = rad[sl] + ou_filter_numpy(xi_r, a, sigma)
    c, s = cos_t[sl], sin_t[sl]
    if xi_t.shape[0]:
        jt = ou_filter_numpy(xi_t, a, sigma)
        bx = rr * c - jt * s
        by = rr * s + jt * c
    else:
        bx = rr * c
        by = rr * s
    dx = bx - sc_x
    dy = by - sc_y
    hit = np.flatnonzero(dx * dx + dy * dy < r_det2)
    return int(k0 + hit[0]) if hit.size else -1


if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def ou_filter_numba(xi, a, sigma):
        n = xi.shape[0]
        out = np.empty(n)
        if n == 0:
            return out
        c = sigma * np.sqrt(1.0 - a * a)
        x = sigma * xi[0]
        out[0] = x
        for i in range(1, n):
            x = c * xi[i] + a * x
            out[i] = x
        return out

    @njit(cache=True, nogil=True)
    def scan_numba(cos_t, sin_t, rad, k0, sc_x, sc_y, r_det2, a, sigma, xi_r, xi_t):
        n = xi_r.shape[0]
        if n == 0:
            return -1
        two_dof = xi_t.shape[0] > 0
        c = sigma * np.sqrt(1.0 - a * a)
        xr = sigma * xi_r[0]
        xt = sigma * xi_t[0] if two_dof else 0.0
        for i in range(n):
            if i > 0:
                xr = c * xi_r[i] + a * xr
                if two_dof:
                    xt = c * xi_t[i] + a * xt
            k = k0 + i
            rr = rad[k] + xr
            if two_dof:
                bx = rr * cos_t[k] - xt * sin_t[k]
                by = rr * sin_t[k] + xt * cos_t[k]
            else:
                bx = rr * cos_t[k]
                by = rr * sin_t[k]
            dx = bx - sc_x
            dy = by - sc_y
            if dx * dx + dy * dy < r_det2:
                return k
        return -1

    ou_filter = ou_filter_numba
    scan = scan_numba
else:
    ou_filter = ou_filter_numpy
    scan = scan_numpy
