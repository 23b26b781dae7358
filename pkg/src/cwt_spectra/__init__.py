"""Morlet wavelet power spectra of daily returns with red-noise significance."""

__version__ = "0.1.0"

from .data import ColumnSchema, OhlcRecord, ReturnSeries, fetch_csv, log_returns, parse_ohlc_csv  # noqa: E402
from .errors import CwtSpectraError, InputError, NetworkError, NumericalError  # noqa: E402
from .significance import (  # noqa: E402
    Ar1Model,
    SignificanceResult,
    fit_ar1,
    monte_carlo_thresholds,
    rednoise_spectrum,
    significance_mask,
    significance_thresholds,
)
from .synthetic import BurstSpec, gen_ar1, gen_burst_series  # noqa: E402
from .wavelet import (  # noqa: E402
    MorletParams,
    PowerSpectrum,
    ScaleGrid,
    WaveletBasis,
    WaveletTransform,
    admissibility_constant,
    build_scale_grid,
    cone_of_influence,
    cwt,
    cwt_direct,
    energy,
    inverse_cwt,
    morlet_fourier,
    morlet_mother,
    power,
)
