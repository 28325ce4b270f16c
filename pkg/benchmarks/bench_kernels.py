"""Compare the numba kernels with their numpy/scipy fallbacks.

Run with ``python benchmarks/bench_kernels.py``. Both backends are imported
side by side, so no environment flag is needed; a full Monte Carlo run under
each backend is timed in a subprocess with ``SPIRAL_ACQ_NO_JIT`` toggled.
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from spiral_acq import _kernels
from spiral_acq.config import MissionParams
from spiral_acq.simulator import SpiralScan


def best_of(fn, *args, repeat: int = 5) -> float:
    fn(*args)  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_ou(n: int) -> None:
    xi = np.random.default_rng(1).standard_normal(n)
    args = (xi, 0.99, 15.85e-6)
    t_np = best_of(_kernels.ou_filter_numpy, *args)
    line = f"ou_filter   n={n:>9d}  numpy {t_np * 1e3:8.2f} ms"
    if _kernels.HAVE_NUMBA:
        t_nb = best_of(_kernels.ou_filter_numba, *args)
        same = np.array_equal(_kernels.ou_filter_numpy(*args), _kernels.ou_filter_numba(*args))
        line += f"  numba {t_nb * 1e3:8.2f} ms  speed-up {t_np / t_nb:5.1f}x  identical={same}"
    print(line)


def bench_scan(n: int) -> None:
    p = MissionParams()
    scan = SpiralScan.for_params(p)
    _, rad, cos_t, sin_t = scan.track
    n = min(n, rad.size)
    rng = np.random.default_rng(2)
    xi_r, xi_t = rng.standard_normal(n), rng.standard_normal(n)
    # a spacecraft far outside the band so the whole span is swept
    args = (cos_t, sin_t, rad, 0, 1.0, 1.0, p.r_d**2, 0.99, p.sigma_n, xi_r, xi_t)
    t_np = best_of(_kernels.scan_numpy, *args)
    line = f"scan (2dof) n={n:>9d}  numpy {t_np * 1e3:8.2f} ms"
    if _kernels.HAVE_NUMBA:
        t_nb = best_of(_kernels.scan_numba, *args)
        line += f"  numba {t_nb * 1e3:8.2f} ms  speed-up {t_np / t_nb:5.1f}x"
    print(line)


def bench_end_to_end(trials: int) -> None:
    code = (
        "import time; from spiral_acq.config import MissionParams; from spiral_acq import simulator, _kernels;"
        f"simulator.estimate_p_fail(MissionParams(), 100, 0, '1dof');"
        "t=time.perf_counter();"
        f"e=simulator.estimate_p_fail(MissionParams(), {trials}, 0, '1dof');"
        "print(_kernels.BACKEND, e.n_failures, time.perf_counter()-t)"
    )
    for flag in ("0", "1"):
        env = dict(os.environ, SPIRAL_ACQ_NO_JIT=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, fails, secs = out.stdout.split()
        print(f"estimate_p_fail {trials} trials  backend {backend:5s}  {float(secs):7.2f} s  failures {fails}")


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=5000)
    args = ap.parse_args(argv)
    print(f"numba available: {_kernels.HAVE_NUMBA}")
    for n in (10_000, 1_000_000, 10_000_000):
        bench_ou(n)
    for n in (1_000, 100_000):
        bench_scan(n)
    bench_end_to_end(args.trials)
    return 0


if __name__ == "__main__":
    sys.exit(main())
