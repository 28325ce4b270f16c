from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from spiral_acq import _kernels
from spiral_acq.config import MissionParams
from spiral_acq.simulator import SpiralScan

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not available")


def test_backend_label():
    assert _kernels.BACKEND in ("numba", "numpy")


def test_numpy_filter_recurrence():
    xi = np.random.default_rng(0).standard_normal(50)
    a, s = 0.9, 2.0
    out = _kernels.ou_filter_numpy(xi, a, s)
    x = s * xi[0]
    assert out[0] == x
    for i in range(1, 50):
        x = a * x + s * np.sqrt(1 - a * a) * xi[i]
        assert out[i] == pytest.approx(x, rel=1e-13)


@needs_numba
@pytest.mark.parametrize("n, a", [(0, 0.5), (1, 0.5), (1000, 0.0), (100_000, 0.999), (5000, 0.3)])
def test_filter_backends_agree_bitwise(n, a):
    xi = np.random.default_rng(n).standard_normal(n)
    assert np.array_equal(_kernels.ou_filter_numpy(xi, a, 1.5e-5), _kernels.ou_filter_numba(xi, a, 1.5e-5))


@needs_numba
@pytest.mark.parametrize("two_dof", [False, True])
def test_scan_backends_agree(two_dof):
    p = MissionParams(gamma=0.04)
    scan = SpiralScan.for_params(p)
    _, rad, cos_t, sin_t = scan.track
    rng = np.random.default_rng(42)
    a = 0.995
    hits = 0
    for _ in range(300):
        r = rng.uniform(0.0, 900e-6)
        phi = rng.uniform(0.0, 2 * np.pi)
        k0 = scan.step_at_radius(r - 200e-6)
        k1 = scan.step_at_radius(r + 200e-6) + 1
        xi_r = rng.standard_normal(k1 - k0)
        xi_t = rng.standard_normal(k1 - k0) if two_dof else np.empty(0)
        args = (cos_t, sin_t, rad, k0, r * np.cos(phi), r * np.sin(phi), p.r_d**2, a, 3 * p.sigma_n, xi_r, xi_t)
        k_np = _kernels.scan_numpy(*args)
        k_nb = _kernels.scan_numba(*args)
        assert k_np == k_nb
        hits += k_np >= 0
    # large jitter so both outcomes occur
    assert 0 < hits < 300


def test_scan_empty_span():
    e = np.empty(0)
    z = np.zeros(3)
    assert _kernels.scan_numpy(z, z, z, 0, 0.0, 0.0, 1.0, 0.5, 1.0, e, e) == -1
    if _kernels.HAVE_NUMBA:
        assert _kernels.scan_numba(z, z, z, 0, 0.0, 0.0, 1.0, 0.5, 1.0, e, e) == -1


def test_fallback_flag_gives_identical_estimate():
    code = (
        "from spiral_acq import simulator, _kernels; from spiral_acq.config import MissionParams;"
        "e = simulator.estimate_p_fail(MissionParams(gamma=0.01), 400, 9, '2dof');"
        "print(_kernels.BACKEND, e.n_failures)"
    )
    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, SPIRAL_ACQ_NO_JIT=flag)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, fails = res.stdout.split()
        out[backend] = int(fails)
    assert "numpy" in out
    assert len(set(out.values())) == 1
