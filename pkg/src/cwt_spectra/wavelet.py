"""Morlet continuous wavelet transform.

The forward transform runs in the frequency domain: the demeaned series is
zero-padded, multiplied scale by scale with the conjugated Morlet Fourier
form and brought back with an inverse FFT.  ``cwt_direct`` evaluates the
same sum literally in the time domain and is kept as an oracle for small
inputs.

Conventions
-----------
* ``dt`` is the sampling interval in days; scales are in days.
* Coefficient matrices are laid out as ``(n_times, n_scales)``.
* Each scale is normalised by ``sqrt(2*pi*s/dt)`` in the frequency domain,
  which is the same as ``sqrt(dt/s)`` in front of the time-domain sum, so
  white noise of variance ``sigma**2`` has expected power ``sigma**2`` at
  every scale.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.fft
from scipy import integrate

from .errors import InputError, NumericalError

MODULE = "wavelet-core"
PI_M14 = math.pi ** -0.25
THREADS_ENV = "CWT_SPECTRA_THREADS"
DIRECT_MAX_LENGTH = 2048


@dataclass(frozen=True)
class MorletParams:
    omega0: float = 6.0

    def __post_init__(self):
        if not (math.isfinite(self.omega0) and self.omega0 > 0):
            raise InputError(f"omega0 must be finite and positive, got {self.omega0}", MODULE)

    @property
    def fourier_factor(self) -> float:
        """Scale to Fourier period conversion, ~1.033 for omega0 = 6."""
        w0 = self.omega0
        return 4.0 * math.pi / (w0 + math.sqrt(2.0 + w0 * w0))


def morlet_mother(t, params: MorletParams = MorletParams()):
    """Mother Morlet wavelet ``pi**-0.25 * exp(1j*omega0*t - t**2/2)``."""
    t = np.asarray(t, dtype=float)
    return PI_M14 * np.exp(1j * params.omega0 * t) * np.exp(-0.5 * t * t)


def morlet_fourier(omega, params: MorletParams = MorletParams()):
    """Fourier form of the mother wavelet, zero for non-positive frequency."""
    omega = np.asarray(omega, dtype=float)
    out = PI_M14 * np.exp(-0.5 * (omega - params.omega0) ** 2)
    return np.where(omega > 0, out, 0.0)


def _admissible_fourier(omega, omega0):
    # Morlet with the O(exp(-omega0**2/2)) zero-mean correction; vanishes
    # linearly at omega = 0 so |Psi|^2/omega is integrable there.
    return PI_M14 * (np.exp(-0.5 * (omega - omega0) ** 2) - np.exp(-0.5 * (omega * omega + omega0 * omega0)))


def admissibility_integrand(omega, params: MorletParams = MorletParams()):
    omega = np.asarray(omega, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = _admissible_fourier(omega, params.omega0) ** 2 / omega
    return np.where(omega > 0, val, 0.0)


@lru_cache(maxsize=32)
def _admissibility(omega0: float) -> float:
    params = MorletParams(omega0)
    upper = omega0 + 40.0
    # split at the peak so quad sees the narrow Gaussian
    pieces = [(0.0, omega0), (omega0, upper)]
    total = 0.0
    for a, b in pieces:
        val, err = integrate.quad(
            lambda w: float(admissibility_integrand(w, params)), a, b, epsabs=0.0, epsrel=1e-12, limit=200
        )
        if not math.isfinite(val) or err > 1e-10 * max(abs(val), 1e-300):
            raise NumericalError(f"admissibility quadrature did not converge on [{a}, {b}]", MODULE)
        total += val
    return total


def admissibility_constant(params: MorletParams = MorletParams()) -> float:
    """C_psi = integral over positive frequencies of |Psi(w)|^2 / w."""
    if params.omega0 < 5:
        raise InputError("admissibility constant needs omega0 >= 5 (analytic Morlet regime)", MODULE)
    return _admissibility(float(params.omega0))


@dataclass(frozen=True)
class WaveletBasis:
    params: MorletParams
    admissibility_constant: float
    mother: Callable = field(repr=False)
    fourier_form: Callable = field(repr=False)

    @classmethod
    def morlet(cls, params: MorletParams = MorletParams()) -> "WaveletBasis":
        return cls(
            params=params,
            admissibility_constant=admissibility_constant(params),
            mother=lambda t: morlet_mother(t, params),
            fourier_form=lambda w: morlet_fourier(w, params),
        )


@dataclass(frozen=True)
class ScaleGrid:
    s0: float
    dj: float
    count: int
    dt: float = 1.0

    def __post_init__(self):
        if not (self.dt > 0 and self.dj > 0):
            raise InputError("dt and dj must be positive", MODULE)
        if self.s0 < 2 * self.dt * (1 - 1e-12):
            raise InputError(f"s0={self.s0} is below 2*dt={2 * self.dt}; the grid would alias", MODULE)
        if self.count < 2:
            raise InputError("a scale grid needs at least two scales", MODULE)

    @property
    def scales(self) -> np.ndarray:
        return self.s0 * 2.0 ** (np.arange(self.count) * self.dj)

    def periods(self, params: MorletParams = MorletParams()) -> np.ndarray:
        return self.scales * params.fourier_factor


def build_scale_grid(n: int, dt: float = 1.0, s0: Optional[float] = None, dj: float = 1 / 12) -> ScaleGrid:
    """Fractional-dyadic scales ``s0 * 2**(j*dj)`` for j = 0..J.

    ``J = floor(log2(n*dt/s0)/dj)``, so the largest scale does not exceed the
    series duration.
    """
    if s0 is None:
        s0 = 2.0 * dt
    if n < 8:
        raise InputError(f"series too short for a scale grid (n={n} < 8)", MODULE)
    if not (dt > 0 and dj > 0):
        raise InputError("dt and dj must be positive", MODULE)
    if s0 < 2 * dt:
        raise InputError(f"s0={s0} is below 2*dt={2 * dt}; the grid would alias", MODULE)
    J = int(math.floor(math.log2(n * dt / s0) / dj + 1e-9))
    if J < 1:
        raise InputError(f"s0={s0} leaves fewer than two scales for n={n}", MODULE)
    return ScaleGrid(s0=float(s0), dj=float(dj), count=J + 1, dt=float(dt))


@dataclass
class WaveletTransform:
    coefficients: np.ndarray
    grid: ScaleGrid
    params: MorletParams
    series_length: int
    series_mean: float
    timestamps: Optional[Sequence] = None
    series_energy: float = float("nan")

    def __post_init__(self):
        if self.coefficients.shape != (self.series_length, self.grid.count):
            raise NumericalError(
                f"coefficient matrix {self.coefficients.shape} does not match "
                f"({self.series_length}, {self.grid.count})",
                MODULE,
            )


@dataclass
class PowerSpectrum:
    power: np.ndarray
    coi: np.ndarray
    grid: ScaleGrid
    timestamps: Optional[Sequence] = None

    @property
    def scales(self) -> np.ndarray:
        return self.grid.scales

    def interior(self) -> np.ndarray:
        """Boolean ``(n_times, n_scales)`` mask of cells inside the cone of influence."""
        return self.grid.scales[None, :] <= self.coi[:, None]


def _series_values(series):
    values = getattr(series, "values", series)
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise InputError("series must be one-dimensional", MODULE)
    if not np.all(np.isfinite(x)):
        raise InputError("series contains non-finite values", MODULE)
    return x, getattr(series, "timestamps", None)


def _check_grid(n, grid):
    if n < 8:
        raise InputError(f"series too short for the transform (n={n} < 8)", MODULE)
    if grid.scales[-1] > n * grid.dt * (1 + 1e-9):
        raise InputError(
            f"scale grid reaches {grid.scales[-1]:g} days, beyond the series duration {n * grid.dt:g}", MODULE
        )


def padded_length(n: int) -> int:
    """FFT length: next power of two at or above ``3*n``.

    Three lengths keep the circular wrap of the widest inside-cone wavelet
    clear of the data.
    """
    return 1 << int(math.ceil(math.log2(3 * n)))


def scale_kernels(grid: ScaleGrid, npad: int, params: MorletParams = MorletParams()) -> np.ndarray:
    """Read-only ``(n_scales, npad)`` matrix of real scale-normalised kernels."""
    return _cached_kernels(grid, int(npad), float(params.omega0))


@lru_cache(maxsize=16)
def _cached_kernels(grid, npad, omega0):
    ker = _kernels(grid.scales, grid.dt, npad, omega0)
    ker.setflags(write=False)
    return ker


def _kernels(scales, dt, npad, omega0):
    """Scale-normalised Fourier transform of the sampled wavelet, one row per scale.

    This is the full Gaussian of the plain Morlet, including its ~1e-8 tail
    at negative frequencies, summed over the 2*pi/dt aliases, so the FFT
    product equals the sampled time-domain sum even near the Nyquist limit.
    """
    omega = 2.0 * np.pi * np.fft.fftfreq(npad, dt)
    s = np.asarray(scales, dtype=float)[:, None]
    acc = np.zeros((s.shape[0], npad))
    for m in (-1, 0, 1, 2):
        arg = s * (omega[None, :] + 2.0 * np.pi * m / dt)
        acc += PI_M14 * np.exp(-0.5 * (arg - omega0) ** 2)
    return np.sqrt(2.0 * np.pi * s / dt) * acc


def thread_count(threads: Optional[int] = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"{THREADS_ENV} must be an integer, got {env!r}", MODULE) from None
    return os.cpu_count() or 1


def cwt(series, grid: ScaleGrid, params: MorletParams = MorletParams(), threads: Optional[int] = None) -> WaveletTransform:
    """Forward Morlet CWT through the FFT.

    ``series`` is a :class:`~cwt_spectra.data.ReturnSeries` or any 1-D array.
    The series mean is removed first and stored on the result.
    """
    x, stamps = _series_values(series)
    n = x.size
    _check_grid(n, grid)
    mean = float(x.mean())
    npad = padded_length(n)
    xhat = scipy.fft.fft(x - mean, npad)
    workers = thread_count(threads)
    # rows are transformed independently, so the worker count never changes the bits
    ker_all = scale_kernels(grid, npad, params)
    block = 32
    coeffs = np.empty((n, grid.count), dtype=complex)
    for start in range(0, grid.count, block):
        ker = ker_all[start : start + block]
        # kernels are real, so the conjugate is the kernel itself
        w = scipy.fft.ifft(xhat[None, :] * ker, axis=1, workers=workers)
        coeffs[:, start : start + block] = w[:, :n].T
    if not np.all(np.isfinite(coeffs)):
        raise NumericalError("transform produced non-finite coefficients", MODULE)
    return WaveletTransform(coeffs, grid, params, n, mean, stamps, _energy(x - mean, grid.dt))


def _energy(xc, dt):
    return float(dt * np.dot(xc, xc))


def cwt_direct(series, grid: ScaleGrid, params: MorletParams = MorletParams()) -> WaveletTransform:
    """Time-domain Riemann sum of the transform integral (oracle, O(n^2 J)).

    ``W[u, j] = sqrt(dt/s_j) * sum_t x[t] * conj(psi((t - u) * dt / s_j))``
    """
    x, stamps = _series_values(series)
    n = x.size
    if n > DIRECT_MAX_LENGTH:
        raise InputError(f"direct transform limited to n <= {DIRECT_MAX_LENGTH}, got {n}", MODULE)
    _check_grid(n, grid)
    mean = float(x.mean())
    xc = x - mean
    lags = np.arange(-(n - 1), n) * grid.dt
    coeffs = np.empty((n, grid.count), dtype=complex)
    for j, s in enumerate(grid.scales):
        c = np.conj(morlet_mother(lags / s, params)) * math.sqrt(grid.dt / s)
        # row r of the window view holds lags r-(n-1) .. r, i.e. position u = n-1-r
        windows = np.lib.stride_tricks.sliding_window_view(c, n)
        coeffs[:, j] = windows[::-1] @ xc
    return WaveletTransform(coeffs, grid, params, n, mean, stamps, _energy(xc, grid.dt))


def cone_of_influence(n: int, dt: float = 1.0, params: MorletParams = MorletParams()) -> np.ndarray:
    """Largest reliable scale at each time index.

    Morlet power decays by e**-2 over sqrt(2)*s, so a cell at distance d from
    the nearer edge is trusted up to scale d*dt/sqrt(2).
    """
    if n < 2:
        raise InputError("cone of influence needs n >= 2", MODULE)
    t = np.arange(n)
    return dt / math.sqrt(2.0) * np.minimum(t, n - 1 - t).astype(float)


def power(transform: WaveletTransform) -> PowerSpectrum:
    c = transform.coefficients
    p = c.real * c.real + c.imag * c.imag
    coi = cone_of_influence(transform.series_length, transform.grid.dt, transform.params)
    return PowerSpectrum(p, coi, transform.grid, transform.timestamps)


@lru_cache(maxsize=32)
def _delta_constant(omega0: float) -> float:
    # Real-part reconstruction gain in the band the grid resolves:
    #   R = sqrt(2 pi) / (2 psi0(0) ln2 C) * int_0^inf Psi0(x)/x dx,
    # solved for C at R = 1.  Equals ~0.776 for omega0 = 6.
    # corrected form: the plain Morlet leaves an exp(-omega0**2/2)/x tail at 0
    f = lambda x: float(_admissible_fourier(x, omega0)) / x if x > 0 else 0.0
    val, err = integrate.quad(f, 0.0, omega0, epsabs=0.0, epsrel=1e-12, limit=200)
    val2, err2 = integrate.quad(f, omega0, omega0 + 40.0, epsabs=0.0, epsrel=1e-12, limit=200)
    total = val + val2
    if not math.isfinite(total) or err + err2 > 1e-10 * total:
        raise NumericalError("reconstruction constant quadrature did not converge", MODULE)
    return math.sqrt(2.0 * math.pi) / (2.0 * PI_M14 * math.log(2.0)) * total


def reconstruction_constant(params: MorletParams = MorletParams()) -> float:
    """Delta-function reconstruction constant C_delta (~0.776 for omega0 = 6).

    This is the inverse gain of the real-part scale sum for a unit impulse
    when the scale range is unbounded; frequencies the finite grid fully
    resolves come back with unit gain.
    """
    return _delta_constant(float(params.omega0))


def inverse_cwt(transform: WaveletTransform, basis: Optional[WaveletBasis] = None) -> np.ndarray:
    """Rebuild the demeaned series by summing the real part over scales."""
    grid = transform.grid
    if grid.dj > 0.25 + 1e-12:
        raise InputError(f"dj={grid.dj} is too coarse for reconstruction (needs dj <= 1/4)", MODULE)
    if basis is not None and basis.params != transform.params:
        raise InputError("basis parameters differ from the transform's", MODULE)
    cdelta = reconstruction_constant(transform.params)
    weights = grid.dj * math.sqrt(grid.dt) / (cdelta * PI_M14 * np.sqrt(grid.scales))
    return transform.coefficients.real @ weights


def energy(transform: WaveletTransform):
    """Return ``(wavelet_energy, series_energy)``.

    The wavelet energy discretises the double integral of the power over
    time and log-scale, ``dj*dt/C_delta * sum_j sum_t |W|^2 / s_j``.  The
    series energy is ``dt * sum_t x_t**2`` of the demeaned input.
    """
    grid = transform.grid
    cdelta = reconstruction_constant(transform.params)
    c = transform.coefficients
    p = c.real * c.real + c.imag * c.imag
    wavelet = grid.dj * grid.dt / cdelta * float(np.sum(p.sum(axis=0) / grid.scales))
    return wavelet, transform.series_energy
