"""Synthetic return series with known spectral structure.

AR(1) red noise is the significance null; the burst generator adds a
window of band-limited noise at short periods, the pattern a crash leaves
in a wavelet power spectrum of daily returns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .data import ReturnSeries, business_days
from .errors import InputError

MODULE = "synthetic-bench"


def simulate_ar1(rng: np.random.Generator, n: int, phi: float, sigma: float, size=None) -> np.ndarray:
    """Draw AR(1) paths ``x[t] = phi*x[t-1] + e[t]`` after a 10/(1-phi) burn-in.

    With ``size`` the result has shape ``(size, n)``, one path per row.
    """
    burn = int(math.ceil(10.0 / (1.0 - phi)))
    shape = (n + burn,) if size is None else (size, n + burn)
    eps = rng.normal(0.0, sigma, shape)
    x = signal.lfilter([1.0], [1.0, -phi], eps, axis=-1)
    return x[..., burn:]


def _check_ar1(n, phi, sigma):
    if not (-1.0 < phi < 1.0):
        raise InputError(f"phi={phi} is not stationary (needs |phi| < 1)", MODULE)
    if not sigma > 0:
        raise InputError(f"sigma must be positive, got {sigma}", MODULE)
    if n < 32:
        raise InputError(f"n must be at least 32, got {n}", MODULE)


def gen_ar1(n: int, phi: float, sigma: float = 1.0, seed: int = 0, symbol: str = "AR1") -> ReturnSeries:
    _check_ar1(n, phi, sigma)
    rng = np.random.default_rng(seed)
    x = simulate_ar1(rng, n, phi, sigma)
    return ReturnSeries(x, business_days(n), symbol)


@dataclass(frozen=True)
class BurstSpec:
    start_index: int
    end_index: int
    min_period: float
    max_period: float
    amplitude_ratio: float

    def validate(self, n: int):
        if not (0 <= self.start_index < self.end_index <= n):
            raise InputError(f"burst window [{self.start_index}, {self.end_index}) outside [0, {n}]", MODULE)
        if not (2.0 <= self.min_period < self.max_period):
            raise InputError("burst band needs 2 <= min_period < max_period", MODULE)
        if not self.amplitude_ratio >= 1.0:
            raise InputError("amplitude_ratio must be at least 1", MODULE)

    @property
    def period_band(self):
        return (self.min_period, self.max_period)

    def scales_in_band(self, grid, params=None) -> np.ndarray:
        """Boolean flag per grid scale whose Fourier period lies in the band."""
        from .wavelet import MorletParams

        periods = grid.periods(params or MorletParams())
        return (periods >= self.min_period) & (periods <= self.max_period)

    def truth_mask(self, n: int, grid, params=None) -> np.ndarray:
        """Ground-truth ``(n_times, n_scales)`` mask of burst cells."""
        mask = np.zeros((n, grid.count), dtype=bool)
        mask[self.start_index : self.end_index, self.scales_in_band(grid, params)] = True
        return mask


def band_limited_noise(rng: np.random.Generator, n: int, min_period: float, max_period: float) -> np.ndarray:
    """Unit-variance white noise with all power outside the period band removed."""
    z = rng.standard_normal(n)
    zhat = np.fft.rfft(z)
    f = np.fft.rfftfreq(n)
    keep = (f >= 1.0 / max_period) & (f <= 1.0 / min_period)
    zhat[~keep] = 0.0
    out = np.fft.irfft(zhat, n)
    sd = out.std()
    if sd == 0:
        raise InputError("period band holds no Fourier frequency for this length", MODULE)
    return out / sd


def gen_burst_series(n: int, base, burst: BurstSpec, seed: int = 0, grid=None, params=None):
    """AR(1) baseline plus a band-limited burst.

    ``base`` is an :class:`~cwt_spectra.significance.Ar1Model`.  The baseline
    is exactly ``gen_ar1(n, base.phi, sqrt(base.sigma2), seed)``; the burst
    segment inside ``[start, end)`` has standard deviation
    ``(amplitude_ratio - 1) * sqrt(base.series_variance)``.

    Returns ``(series, truth_mask)``; the mask is laid out on ``grid``
    (default grid for ``n`` when omitted).
    """
    from .wavelet import build_scale_grid

    burst.validate(n)
    baseline = gen_ar1(n, base.phi, math.sqrt(base.sigma2), seed, symbol="BURST")
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    width = burst.end_index - burst.start_index
    # draw over the full length and cut the window so the band edges stay sharp
    noise = band_limited_noise(rng, n, burst.min_period, burst.max_period)
    seg = noise[burst.start_index : burst.end_index]
    seg = seg / seg.std() if width > 1 else seg
    amp = (burst.amplitude_ratio - 1.0) * math.sqrt(base.series_variance)
    values = baseline.values.copy()
    values[burst.start_index : burst.end_index] += amp * seg
    series = ReturnSeries(values, baseline.timestamps, "BURST")
    if grid is None:
        grid = build_scale_grid(n)
    return series, burst.truth_mask(n, grid, params)
