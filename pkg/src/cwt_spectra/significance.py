"""Pointwise significance of wavelet power against an AR(1) red-noise null.

Under the null the power at scale ``s`` is the background spectrum at the
scale's equivalent Fourier frequency times a chi-square variate with two
degrees of freedom, halved.  Scales near the Nyquist limit are the one
exception: there the sampled Morlet is close to real-valued, its real and
imaginary parts no longer carry equal variance, and the chi-square with two
equal halves is replaced by the exact two-term mixture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.fft
from scipy import optimize, stats

from . import wavelet
from .errors import InputError
from .synthetic import simulate_ar1
from .wavelet import MorletParams, PowerSpectrum, ScaleGrid

MODULE = "significance"
PHI_MAX = 0.99
MIN_MC_RUNS = 300


@dataclass(frozen=True)
class Ar1Model:
    phi: float
    sigma2: float
    series_variance: float

    def __post_init__(self):
        if not abs(self.phi) < 1:
            raise InputError(f"phi={self.phi} is not stationary", MODULE)
        if not self.sigma2 > 0:
            raise InputError("innovation variance must be positive", MODULE)
        if abs(self.series_variance - self.sigma2 / (1 - self.phi**2)) > 1e-9 * self.series_variance:
            raise InputError("series_variance inconsistent with phi and sigma2", MODULE)

    @classmethod
    def from_innovations(cls, phi: float, sigma2: float = 1.0) -> "Ar1Model":
        if not abs(phi) < 1:
            raise InputError(f"phi={phi} is not stationary", MODULE)
        return cls(phi, sigma2, sigma2 / (1.0 - phi * phi))

    @classmethod
    def from_variance(cls, phi: float, variance: float) -> "Ar1Model":
        if not abs(phi) < 1:
            raise InputError(f"phi={phi} is not stationary", MODULE)
        return cls(phi, variance * (1.0 - phi * phi), variance)


@dataclass
class SignificanceResult:
    level: float
    thresholds: np.ndarray
    mask: np.ndarray
    method: str = "analytic"
    mc_runs: int = 0
    reliable: Optional[np.ndarray] = None  # inside-cone cells


def fit_ar1(series) -> Ar1Model:
    """Lag-1 autocorrelation fit, clamped to [0, 0.99]."""
    x = np.asarray(getattr(series, "values", series), dtype=float)
    if x.size < 32:
        raise InputError(f"series too short to fit AR(1) (n={x.size} < 32)", MODULE)
    xc = x - x.mean()
    var = float(np.dot(xc, xc) / x.size)
    if not var > 0:
        raise InputError("constant series: zero sample variance", MODULE)
    phi = float(np.dot(xc[1:], xc[:-1]) / np.dot(xc, xc))
    phi = min(max(phi, 0.0), PHI_MAX)
    return Ar1Model.from_variance(phi, var)


def rednoise_spectrum(model, frequency):
    """AR(1) spectrum normalised to unit white-noise level; ``frequency`` in cycles per sample."""
    phi = getattr(model, "phi", model)
    f = np.asarray(frequency, dtype=float)
    if np.any((f < 0) | (f > 0.5)):
        raise InputError("frequency must lie in [0, 0.5] cycles per sample", MODULE)
    return (1.0 - phi * phi) / (1.0 + phi * phi - 2.0 * phi * np.cos(2.0 * np.pi * f))


def scale_frequencies(grid: ScaleGrid, params: MorletParams = MorletParams()) -> np.ndarray:
    """Equivalent Fourier frequency of each scale, cycles per sample."""
    return np.minimum(grid.dt / (params.fourier_factor * grid.scales), 0.5)


@lru_cache(maxsize=32)
def _imbalance(grid: ScaleGrid, omega0: float) -> np.ndarray:
    # |E[W^2]| / E|W^2| for white input: 0 for an analytic wavelet, ->1 as the
    # sampled wavelet becomes real near Nyquist.
    npad = max(4096, wavelet.padded_length(int(math.ceil(grid.scales[-1] / grid.dt))))
    ker = wavelet.scale_kernels(grid, npad, MorletParams(omega0))
    mirrored = np.roll(ker[:, ::-1], 1, axis=1)  # K(-omega)
    return np.abs((ker * mirrored).sum(axis=1)) / (ker * ker).sum(axis=1)


def power_quantile(level: float, imbalance: float = 0.0) -> float:
    """Level-quantile of null power in units of its mean.

    For a balanced complex coefficient this is ``chi2_2(level)/2``.  With
    real/imaginary variance shares ``(1 +- r)/2`` the CDF is
    ``1 - mean_theta exp(-q / (2 a(theta)))``, ``a = (1+r)/2 cos^2 + (1-r)/2 sin^2``.
    """
    if imbalance < 1e-9:
        return float(stats.chi2.ppf(level, 2) / 2.0)
    a, b = (1.0 + imbalance) / 2.0, (1.0 - imbalance) / 2.0
    theta = (np.arange(512) + 0.5) * (np.pi / 2) / 512  # periodic integrand: midpoint rule is spectral
    var = a * np.cos(theta) ** 2 + b * np.sin(theta) ** 2

    def cdf_gap(q):
        return 1.0 - np.mean(np.exp(-q / (2.0 * var))) - level

    hi = 2.0 * float(stats.chi2.ppf(level, 1))
    return float(optimize.brentq(cdf_gap, 0.0, hi, xtol=1e-14, rtol=1e-14))


def _check_level(level):
    if not (0.0 < level < 1.0):
        raise InputError(f"confidence level must lie in (0, 1), got {level}", MODULE)


def significance_thresholds(
    model: Ar1Model, grid: ScaleGrid, params: MorletParams = MorletParams(), level: float = 0.95
) -> np.ndarray:
    """Per-scale analytic power threshold at confidence ``level``."""
    _check_level(level)
    background = model.series_variance * rednoise_spectrum(model, scale_frequencies(grid, params))
    r = _imbalance(grid, float(params.omega0))
    q = np.array([power_quantile(level, ri) for ri in r])
    return background * q


def monte_carlo_thresholds(
    model: Ar1Model,
    grid: ScaleGrid,
    params: MorletParams = MorletParams(),
    level: float = 0.95,
    runs: int = 1000,
    seed: int = 0,
    *,
    n: int,
    batch: int = 50,
) -> np.ndarray:
    """Per-scale empirical power quantile over simulated AR(1) series.

    ``n`` is the length of the analysed series.  Each run ``i`` draws from its own stream spawned from ``seed``, so the
    pooled sample does not depend on batch order.  Inside-cone time points
    are pooled with a stride of one scale length (neighbouring coefficients
    within a scale are strongly correlated); scales with no inside-cone
    point pool all points.
    """
    _check_level(level)
    if runs < MIN_MC_RUNS:
        raise InputError(f"need at least {MIN_MC_RUNS} Monte Carlo runs, got {runs}", MODULE)
    wavelet._check_grid(n, grid)
    npad = wavelet.padded_length(n)
    ker = wavelet.scale_kernels(grid, npad, params)
    coi = wavelet.cone_of_influence(n, grid.dt, params)
    picks = []
    for s in grid.scales:
        idx = np.flatnonzero(coi >= s)
        if idx.size == 0:
            idx = np.arange(n)
        picks.append(idx[:: max(1, int(s / grid.dt))])
    pooled = [[] for _ in range(grid.count)]
    children = np.random.SeedSequence(seed).spawn(runs)
    sigma = math.sqrt(model.sigma2)
    workers = wavelet.thread_count()
    for start in range(0, runs, batch):
        block = children[start : start + batch]
        x = np.stack([simulate_ar1(np.random.default_rng(c), n, model.phi, sigma) for c in block])
        x -= x.mean(axis=1, keepdims=True)
        xhat = scipy.fft.fft(x, npad, axis=1)
        for j in range(grid.count):
            w = scipy.fft.ifft(xhat * ker[j], axis=1, workers=workers)[:, picks[j]]
            pooled[j].append((w.real * w.real + w.imag * w.imag).ravel())
    return np.array([np.quantile(np.concatenate(p), level) for p in pooled])


def significance_mask(
    spectrum: PowerSpectrum,
    thresholds,
    level: float = 0.95,
    method: str = "analytic",
    mc_runs: int = 0,
) -> SignificanceResult:
    """Strict per-cell comparison of power against its scale's threshold."""
    thr = np.asarray(thresholds, dtype=float)
    if thr.ndim != 1 or thr.size != spectrum.power.shape[1]:
        raise InputError(
            f"{thr.size} thresholds for a spectrum with {spectrum.power.shape[1]} scales", MODULE
        )
    if not np.all(thr > 0):
        raise InputError("thresholds must be strictly positive", MODULE)
    mask = spectrum.power > thr[None, :]
    return SignificanceResult(level, thr, mask, method, mc_runs, spectrum.interior())
