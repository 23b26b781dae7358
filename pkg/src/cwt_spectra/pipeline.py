"""End-to-end analysis run: ingest, transform, test, export, render."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields
from datetime import date
from pathlib import Path
from typing import Optional

import matplotlib
import numpy as np
import scipy
from scipy import ndimage

from . import __version__, artifacts, data, render, significance, wavelet
from .errors import InputError, NumericalError

MODULE = "cli-render"
log = logging.getLogger(__name__)

FILES = {
    "returns": "returns.csv",
    "power": "power.csv",
    "thresholds": "thresholds.csv",
    "mask": "mask.csv",
    "coi": "coi.csv",
    "heatmap": "heatmap.png",
    "figure": "spectrum.png",
    "manifest": "manifest.json",
}


@dataclass
class AnalysisConfig:
    input: str
    out: str
    symbol: str = ""
    schema: data.ColumnSchema = field(default_factory=data.ColumnSchema)
    date_from: Optional[date] = None
    date_to: Optional[date] = None
    omega0: float = 6.0
    s0: float = 2.0
    dj: float = 1 / 12
    level: float = 0.95
    null: str = "analytic"
    mc_runs: int = 1000
    seed: int = 0
    dt: float = 1.0

    def validate(self):
        if self.null not in ("analytic", "mc"):
            raise InputError(f"null must be 'analytic' or 'mc', got {self.null!r}", MODULE)
        if not (0 < self.level < 1):
            raise InputError(f"level must lie in (0, 1), got {self.level}", MODULE)
        if not (self.dj > 0 and math.isfinite(self.dj)):
            raise InputError(f"dj must be positive, got {self.dj}", MODULE)
        if self.s0 < 2 * self.dt:
            raise InputError(f"s0 must be at least 2*dt = {2 * self.dt}, got {self.s0}", MODULE)
        if self.omega0 < 5:
            raise InputError(f"omega0 must be at least 5, got {self.omega0}", MODULE)
        if self.null == "mc" and self.mc_runs < significance.MIN_MC_RUNS:
            raise InputError(f"--mc-runs must be at least {significance.MIN_MC_RUNS}", MODULE)
        if self.date_from and self.date_to and self.date_from > self.date_to:
            raise InputError("date_from is after date_to", MODULE)

    def to_dict(self):
        d = asdict(self)
        d["date_from"] = self.date_from.isoformat() if self.date_from else None
        d["date_to"] = self.date_to.isoformat() if self.date_to else None
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["schema"] = data.ColumnSchema(**d.get("schema", {}))
        for key in ("date_from", "date_to"):
            if d.get(key):
                d[key] = date.fromisoformat(d[key])
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


@dataclass
class AnalysisResult:
    series: data.ReturnSeries
    transform: wavelet.WaveletTransform
    spectrum: wavelet.PowerSpectrum
    model: significance.Ar1Model
    significance: significance.SignificanceResult
    manifest: dict
    out: Path


def load_input(source: str, schema: data.ColumnSchema):
    """Raw bytes from a local path or an http(s) URL."""
    if source.startswith(("http://", "https://")):
        return data.fetch_csv(source)
    path = Path(source)
    if not path.is_file():
        raise InputError(f"input file not found: {source}", "data-io")
    return path.read_bytes()


def analyze_series(series, config: AnalysisConfig):
    """Transform, fit the null and test one return series."""
    n = len(series)
    if n < 32:
        raise InputError(f"series too short for analysis (n={n} < 32)", MODULE)
    params = wavelet.MorletParams(config.omega0)
    grid = wavelet.build_scale_grid(n, config.dt, config.s0, config.dj)
    transform = wavelet.cwt(series, grid, params)
    spectrum = wavelet.power(transform)
    model = significance.fit_ar1(series)
    if config.null == "mc":
        thr = significance.monte_carlo_thresholds(
            model, grid, params, config.level, config.mc_runs, config.seed, n=n
        )
        method, runs = "monte-carlo", config.mc_runs
    else:
        thr = significance.significance_thresholds(model, grid, params, config.level)
        method, runs = "analytic", 0
    result = significance.significance_mask(spectrum, thr, config.level, method, runs)
    if not (np.all(np.isfinite(spectrum.power)) and np.all(spectrum.power >= 0)):
        raise NumericalError("power spectrum is not finite and non-negative", "wavelet-core")
    return transform, spectrum, model, result


def run_analysis(config: AnalysisConfig, render_figure: bool = True) -> AnalysisResult:
    config.validate()
    raw = load_input(config.input, config.schema)
    symbol = config.symbol or Path(config.input).stem
    if data.is_returns_csv(raw):
        series, dropped = data.parse_returns_csv(raw, symbol), 0
        if series.timestamps is None:
            raise InputError("returns file needs a date on every row", "data-io")
    else:
        parsed = data.parse_ohlc_csv(raw, config.schema)
        series, dropped = data.log_returns(parsed.records, symbol), parsed.dropped
    if config.date_from or config.date_to:
        series = series.between(config.date_from, config.date_to)
    transform, spectrum, model, result = analyze_series(series, config)

    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {k: out / v for k, v in FILES.items()}
    write_outputs(paths, series, transform, spectrum, result, config, render_figure)

    grid = transform.grid
    manifest = {
        "config": config.to_dict(),
        "input_sha256": artifacts.sha256_bytes(raw),
        "software": {
            "cwt_spectra": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "matplotlib": matplotlib.__version__,
        },
        "series": {
            "symbol": series.source_symbol,
            "n": len(series),
            "first_date": series.timestamps[0].isoformat(),
            "last_date": series.timestamps[-1].isoformat(),
            "dropped_rows": dropped,
            "mean": transform.series_mean,
        },
        "grid": {"s0": grid.s0, "dj": grid.dj, "count": grid.count, "dt": grid.dt},
        "ar1": {"phi": model.phi, "sigma2": model.sigma2, "series_variance": model.series_variance},
        "significance": {
            "method": result.method,
            "level": result.level,
            "mc_runs": result.mc_runs,
            "significant_fraction_inside_coi": float(result.mask[result.reliable].mean())
            if result.reliable.any()
            else 0.0,
        },
        "render": render.RenderOptions().as_dict(),
        "files": {
            k: artifacts.sha256_file(p) for k, p in sorted(paths.items()) if k != "manifest" and p.exists()
        },
    }
    artifacts.write_json(paths["manifest"], manifest)
    return AnalysisResult(series, transform, spectrum, model, result, manifest, out)


def write_outputs(paths, series, transform, spectrum, result, config, render_figure=True):
    grid = transform.grid
    params = transform.params
    stamps = series.timestamps
    data.write_returns_csv(series, paths["returns"])
    artifacts.write_matrix(
        paths["power"],
        spectrum.power,
        grid.scales,
        stamps,
        "power",
        comment=[f"omega0={params.omega0!r} dt={grid.dt!r} s0={grid.s0!r} dj={grid.dj!r}"],
    )
    artifacts.write_matrix(
        paths["mask"], result.mask, grid.scales, stamps, "significance-mask", comment=[f"level={result.level!r}"]
    )
    artifacts.write_thresholds(paths["thresholds"], grid.scales, grid.periods(params), result.thresholds)
    artifacts.write_coi(paths["coi"], spectrum.coi, stamps)
    paths["heatmap"].write_bytes(render.render_heatmap(spectrum, result))
    if render_figure:
        render.plot_spectrum_figure(spectrum, result, paths["figure"], series, title=series.source_symbol)


def load_outputs(directory):
    """Rebuild ``(spectrum, result)`` from an analysis directory."""
    d = Path(directory)
    power, scales, dates = artifacts.read_matrix(d / FILES["power"])
    mask, mscales, _ = artifacts.read_matrix(d / FILES["mask"], as_mask=True)
    coi, _ = artifacts.read_coi(d / FILES["coi"])
    _, _, thr = artifacts.read_thresholds(d / FILES["thresholds"])
    if not np.array_equal(scales, mscales):
        raise InputError("power and mask files disagree on scales", MODULE)
    manifest = artifacts.read_json(d / FILES["manifest"])
    g = manifest["grid"]
    grid = wavelet.ScaleGrid(g["s0"], g["dj"], g["count"], g["dt"])
    spectrum = wavelet.PowerSpectrum(power, coi, grid, dates)
    sig = manifest["significance"]
    result = significance.SignificanceResult(
        sig["level"], thr, mask, sig["method"], sig["mc_runs"], spectrum.interior()
    )
    return spectrum, result, manifest


def window_fraction(spectrum, result, date_from=None, date_to=None, max_scale=None, min_scale=None, inside_coi=True):
    """Fraction of significant cells in a date window and scale band.

    Dates are inclusive; scales in days.  Cells outside the cone of
    influence are skipped unless ``inside_coi`` is False.
    """
    _, _, cells = _window(spectrum, date_from, date_to, max_scale, min_scale, inside_coi)
    return float(result.mask[cells].mean())


def _window(spectrum, date_from, date_to, max_scale, min_scale, inside_coi):
    stamps = spectrum.timestamps
    if stamps is None:
        raise InputError("spectrum has no dates", MODULE)
    t = np.array([(date_from is None or d >= date_from) and (date_to is None or d <= date_to) for d in stamps])
    s = np.ones(spectrum.scales.size, dtype=bool)
    if max_scale is not None:
        s &= spectrum.scales <= max_scale
    if min_scale is not None:
        s &= spectrum.scales >= min_scale
    cells = t[:, None] & s[None, :]
    if inside_coi:
        cells &= spectrum.interior()
    if not cells.any():
        raise InputError("window selects no cells", MODULE)
    return t, s, cells


def region_coverage(spectrum, result, date_from=None, date_to=None, max_scale=None, min_scale=None):
    """Share of days in the window touched by its largest connected significant region.

    Regions are 4-connected groups of significant inside-cone cells within
    the scale band; 1.0 means one unbroken region spans the whole window.
    """
    t, _, cells = _window(spectrum, date_from, date_to, max_scale, min_scale, True)
    band = np.zeros_like(cells)
    band[:, cells.any(axis=0)] = True
    labels, _ = ndimage.label(result.mask & spectrum.interior() & band)
    ids = labels[t][labels[t] > 0]
    if ids.size == 0:
        return 0.0
    biggest = np.bincount(ids).argmax()
    return float(np.mean((labels[t] == biggest).any(axis=1)))
