"""Quick numerical self-checks run by ``cwt-spectra selftest``.

Each check returns ``(name, passed, detail)``.  Sizes are small enough to
finish in well under a minute.
"""

import numpy as np

from . import significance, synthetic, wavelet


def check_oracle(series_count=5, n=256, tol=1e-6):
    worst = 0.0
    for k in range(series_count):
        phi = 0.0 if k % 2 == 0 else 0.6
        x = synthetic.gen_ar1(n, phi, 1.0, seed=100 + k).values
        grid = wavelet.build_scale_grid(n)
        fast = wavelet.cwt(x, grid).coefficients
        direct = wavelet.cwt_direct(x, grid).coefficients
        inside = wavelet.power(wavelet.cwt(x, grid)).interior()
        err = np.abs(fast - direct)[inside].max() / np.abs(direct).max()
        worst = max(worst, err)
    return "oracle equivalence (cwt vs cwt_direct)", worst <= tol, f"max rel err {worst:.2e} <= {tol:g}"


def roundtrip_error(x, dj=1 / 12):
    x = np.asarray(x, dtype=float)
    grid = wavelet.build_scale_grid(x.size, dj=dj)
    rec = wavelet.inverse_cwt(wavelet.cwt(x, grid))
    xc = x - x.mean()
    return float(np.linalg.norm(rec - xc) / np.linalg.norm(xc))


def check_roundtrip_white(n=1024, tol=0.05):
    err = roundtrip_error(synthetic.gen_ar1(n, 0.0, 1.0, seed=7).values)
    return "round trip, white noise", err <= tol, f"rel L2 err {err:.4f} <= {tol}"


def check_roundtrip_sine(n=1024, period=32, tol=0.02):
    err = roundtrip_error(np.sin(2 * np.pi * np.arange(n) / period))
    return f"round trip, period-{period} sinusoid", err <= tol, f"rel L2 err {err:.4f} <= {tol}"


def check_calibration(surrogates=60, n=1024, phi=0.5, level=0.95, band=0.02):
    grid = wavelet.build_scale_grid(n)
    fractions = []
    for k in range(surrogates):
        x = synthetic.gen_ar1(n, phi, 1.0, seed=5000 + k)
        spec = wavelet.power(wavelet.cwt(x, grid))
        thr = significance.significance_thresholds(significance.fit_ar1(x), grid, level=level)
        res = significance.significance_mask(spec, thr, level)
        fractions.append(res.mask[res.reliable].mean())
    frac = float(np.mean(fractions))
    ok = abs(frac - (1 - level)) <= band
    return f"calibration, AR(1) phi={phi}", ok, f"significant fraction {frac:.4f} in {1 - level:.2f} +- {band}"


CHECKS = (check_oracle, check_roundtrip_white, check_roundtrip_sine, check_calibration)


def run_all(out=print):
    results = []
    for check in CHECKS:
        name, ok, detail = check()
        results.append((name, ok, detail))
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return results
