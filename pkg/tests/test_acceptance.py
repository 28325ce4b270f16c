"""End-to-end acceptance checks at their stated tolerances.

Each test prints one ``[NN] PASS|FAIL`` line with the measured values and its
runtime, then asserts. Run alone with ``pytest tests/test_acceptance.py -v``.
"""
from __future__ import annotations

import math
import time

import numpy as np
import pytest

from spiral_acq.analytic import (
    delta_mean,
    p_fail_averaged,
    p_fail_given_delta,
    p_fail_uncorrelated,
    psd,
)
from spiral_acq.config import MissionParams, derive_scales
from spiral_acq.jitter import estimate_acf, estimate_psd, synthesize
from spiral_acq.metrics import efficiency_factor, optimize_track_width
from spiral_acq.numerics import integrate_semi_infinite
from spiral_acq.simulator import estimate_p_fail

SEED = 1
MC_TRIALS = 60_000
SPEEDS = (0.010, 0.040, 0.070)
# the analytic model needs d_t < 2 r_d, so the sweep stops just short of 80 urad
WIDTHS = tuple(float(w) * 1e-6 for w in np.linspace(45.0, 79.0, 5))


@pytest.fixture
def report(capsys):
    def _report(num: int, ok: bool, title: str, detail: str, seconds: float, limit: float):
        ok = ok and seconds < limit
        with capsys.disabled():
            print(f"\n[{num:02d}] {'PASS' if ok else 'FAIL'} {title}: {detail} ({seconds:.2f} s of {limit:g} s)")
        return ok

    return _report


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def test_01_rms_from_psd(report):
    p = MissionParams()
    with Timer() as t:
        rms = math.sqrt(integrate_semi_infinite(lambda f: psd(f, p) * 1e12, 0.0)) * 1e-6
    ok = abs(rms - 15.85e-6) < 0.01e-6
    assert report(1, ok, "RMS from PSD", f"{rms * 1e6:.6f} urad vs 15.85 +/- 0.01", t.seconds, 1)


def test_02_minimum_scan_speed(report):
    p = MissionParams()
    with Timer() as t:
        g = derive_scales(p).gamma_min
    ref = p.f_r * math.sqrt(math.pi / 2) * (2 * math.pi) ** 2 * p.sigma_uc
    ok = abs(g - ref) < 1e-12 and round(g * 1e3, 1) == 14.4 and round(g * 1e3) == 14
    assert report(2, ok, "gamma_min", f"{g * 1e3:.4f} mrad/s, |diff| {abs(g - ref):.1e}", t.seconds, 1)


def test_03_mean_correlation_amplitude(report):
    with Timer() as t:
        d10 = delta_mean(MissionParams(gamma=0.010))
        d40 = delta_mean(MissionParams(gamma=0.040))
    ok = abs(d10 - 0.30) <= 0.005 and abs(d40 - 0.71) <= 0.005
    assert report(3, ok, "delta_mean", f"{d10:.4f} at 10 mrad/s, {d40:.4f} at 40 mrad/s", t.seconds, 1)


def test_04_uncorrelated_plateau(report):
    with Timer() as t:
        v = p_fail_uncorrelated(MissionParams()).p_fail
    ok = abs(v - 0.045) <= 0.003
    assert report(4, ok, "uncorrelated plateau", f"{v:.4%} vs 4.5% +/- 0.3%", t.seconds, 1)


def test_05_fast_scan_limit(report):
    with Timer() as t:
        v = p_fail_averaged(MissionParams(gamma=0.100)).p_fail
    ok = 0.0005 <= v <= 0.002
    assert report(5, ok, "fast-scan limit", f"{v:.4%} at 100 mrad/s vs 0.1% within x2", t.seconds, 10)


def test_06_limit_convergence(report):
    p = MissionParams()
    with Timer() as t:
        puc = p_fail_uncorrelated(p).p_fail
        d0 = abs(p_fail_given_delta(0.0, p).p_fail - puc)
        slow = p.with_(gamma=1e-4)
        rel = abs(p_fail_averaged(slow).p_fail / p_fail_uncorrelated(slow).p_fail - 1)
        near1 = p_fail_given_delta(1 - 1e-9, p).p_fail
    ok = d0 <= 1e-10 and rel <= 1e-4 and near1 < 1e-6
    detail = f"|P(0)-P_uc| {d0:.1e}, slow-scan rel {rel:.1e}, P(1-1e-9) {near1:.1e}"
    assert report(6, ok, "limit convergence", detail, t.seconds, 30)


def test_07_eta_invariance(report):
    p = MissionParams()
    with Timer() as t:
        ref = p_fail_averaged(p).p_fail
        devs = []
        for k in (0.5, 2.0, 5.0):
            q = p.with_(sigma_uc=k * p.sigma_uc, gamma=k * p.gamma, r_uc=k * p.r_uc)
            devs.append(abs(p_fail_averaged(q).p_fail / ref - 1))
    ok = max(devs) <= 1e-6
    assert report(7, ok, "eta invariance", f"max relative deviation {max(devs):.1e}", t.seconds, 60)


@pytest.fixture(scope="module")
def mc_runs():
    """All Monte Carlo estimates shared by the cross-validation checks."""
    t0 = time.perf_counter()
    runs = {}
    for g in SPEEDS:
        p = MissionParams(gamma=g)
        runs[("speed", g)] = (
            p_fail_averaged(p).p_fail,
            estimate_p_fail(p, MC_TRIALS, SEED, "1dof"),
            estimate_p_fail(p, MC_TRIALS, SEED, "2dof"),
        )
    for w in WIDTHS:
        p = MissionParams(gamma=0.040, d_t=w)
        runs[("width", w)] = (p_fail_averaged(p).p_fail, estimate_p_fail(p, MC_TRIALS, SEED, "1dof"), None)
    # low-speed regime, recorded only
    p = MissionParams(gamma=0.002)
    runs["low"] = (p_fail_averaged(p).p_fail, p_fail_uncorrelated(p).p_fail, estimate_p_fail(p, MC_TRIALS, SEED, "1dof"))
    runs["seconds"] = time.perf_counter() - t0
    return runs


def test_08_monte_carlo_cross_validation(report, mc_runs, capsys):
    lines, ok = [], True
    for key, run in mc_runs.items():
        if not isinstance(key, tuple):
            continue
        analytic, mc, _ = run
        z = (mc.p_fail - analytic) / mc.sigma
        ok &= abs(z) <= 3
        label = f"gamma={key[1] * 1e3:g} mrad/s" if key[0] == "speed" else f"gamma=40, D_t={key[1] * 1e6:g} urad"
        lines.append(f"     {label:28s} analytic {analytic:.5f}  MC {mc.p_fail:.5f} +/- {mc.sigma:.5f}  z={z:+.2f}")
    a_low, uc_low, mc_low = mc_runs["low"]
    lines.append(f"     recorded: gamma=2 mrad/s analytic {a_low:.5f}, uncorrelated {uc_low:.5f}, "
                 f"MC {mc_low.p_fail:.5f} +/- {mc_low.sigma:.5f}")
    with capsys.disabled():
        print("\n" + "\n".join(lines), end="")
    assert report(8, ok, "MC vs analytic within 3 Wilson sigma", f"{MC_TRIALS} trials per point, seed {SEED}",
                  mc_runs["seconds"], 15 * 60)


def test_09_one_vs_two_dof(report, mc_runs):
    zs = []
    for g in SPEEDS:
        _, one, two = mc_runs[("speed", g)]
        zs.append((one.p_fail - two.p_fail) / math.hypot(one.sigma, two.sigma))
    ok = all(abs(z) <= 3 for z in zs)
    detail = ", ".join(f"z={z:+.2f}" for z in zs) + " at 10/40/70 mrad/s"
    assert report(9, ok, "1-dof vs 2-dof", detail, mc_runs["seconds"], 15 * 60)


def test_10_efficiency_factor(report):
    with Timer() as t:
        f40 = efficiency_factor(MissionParams(gamma=0.040), 0.01)[0]
        f100 = efficiency_factor(MissionParams(gamma=0.100), 0.01)[0]
    ok = abs(f40 - 1.51) <= 0.05 and abs(f100 - 1.67) <= 0.05
    assert report(10, ok, "F_eff at 1%", f"{f40:.4f} at 40 mrad/s, {f100:.4f} at 100 mrad/s", t.seconds, 120)


def test_11_search_time_optima(report):
    with Timer() as t:
        slow = optimize_track_width(MissionParams(gamma=0.010))
        fast = optimize_track_width(MissionParams(gamma=0.100))
    ok = (
        abs(slow.t_ms_min / 1.13 - 1) <= 0.05 and abs(slow.d_t_min - 58e-6) <= 2e-6
        and abs(fast.t_ms_min / 0.08 - 1) <= 0.10 and abs(fast.d_t_min - 70e-6) <= 2e-6
    )
    detail = (f"{slow.t_ms_min:.4f} s at {slow.d_t_min * 1e6:.2f} urad (10 mrad/s), "
              f"{fast.t_ms_min:.4f} s at {fast.d_t_min * 1e6:.2f} urad (100 mrad/s)")
    assert report(11, ok, "T_ms optima", detail, t.seconds, 300)


def test_12_jitter_synthesis(report):
    p = MissionParams()
    with Timer() as t:
        s = synthesize(p, 1e-3, 10_000_000, SEED)
        rms = float(np.sqrt(np.mean(s.samples**2)))
        lag = derive_scales(p).tau_0 / s.dt
        k = int(lag)
        acf = estimate_acf(s, k + 1)
        acf_tau0 = acf[k] + (lag - k) * (acf[k + 1] - acf[k])
        f, psd_est = estimate_psd(s, nperseg=1 << 17)
        plateau = float(psd_est[(f > 0) & (f <= 0.1 * p.f_r)].mean())
    ok = (abs(rms / p.sigma_n - 1) <= 0.02 and abs(acf_tau0 / math.exp(-1) - 1) <= 0.02
          and abs(plateau / 160e-12 - 1) <= 0.10)
    detail = (f"RMS {rms * 1e6:.3f} urad, ACF(tau_0) {acf_tau0:.4f}, "
              f"plateau {plateau * 1e12:.1f} urad^2/Hz")
    assert report(12, ok, "jitter synthesis", detail, t.seconds, 120)


def test_13_property_suite(report):
    checks = {}
    with Timer() as t:
        p = MissionParams(gamma=0.040)
        widths = np.linspace(41e-6, 79.5e-6, 12)
        pav = [p_fail_averaged(p.with_(d_t=float(w))).p_fail for w in widths]
        puc = [p_fail_uncorrelated(p.with_(d_t=float(w))).p_fail for w in widths]
        checks["monotone in D_t"] = bool(np.all(np.diff(pav) >= -1e-12) and np.all(np.diff(puc) >= -1e-12))
        deltas = np.linspace(0.0, 0.999, 30)
        pd = [p_fail_given_delta(float(d), p).p_fail for d in deltas]
        checks["monotone in -delta"] = bool(np.all(np.diff(pd) <= 1e-13))
        ordered = True
        for g in (0.002, 0.01, 0.04, 0.07, 0.1):
            for w in (45e-6, 62.8e-6, 75e-6):
                q = MissionParams(gamma=g, d_t=w)
                ordered &= p_fail_averaged(q).p_fail <= p_fail_uncorrelated(q).p_fail + 1e-12
        checks["P_av <= P_uc"] = ordered
        zero = [estimate_p_fail(MissionParams(sigma_n=0.0, gamma=g), 20_000, SEED, m)
                for g in (0.01, 0.07) for m in ("1dof", "2dof")]
        checks["zero-jitter completeness"] = all(z.n_failures == 0 for z in zero)
        q = MissionParams(gamma=0.02)
        det = [estimate_p_fail(q, 5_000, SEED, "2dof", threads=n) for n in (1, 2, 4, 8)]
        checks["thread-count determinism"] = all(d == det[0] for d in det)
    ok = all(checks.values())
    detail = ", ".join(f"{k} {'ok' if v else 'VIOLATED'}" for k, v in checks.items())
    assert report(13, ok, "property suite", detail, t.seconds, 600)
