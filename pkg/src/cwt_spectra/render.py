"""Raster and figure rendering of wavelet power spectra.

The raster is built cell by cell in numpy, so its bytes depend only on the
data: one pixel per (time, scale) cell, time left to right, the smallest
scale on the bottom row.  Colour comes from a piecewise-linear cold-to-hot
gradient applied to log power normalised per image; the boundary of the
significance mask is black; cells above the cone of influence are blended
toward white, keeping 40% of their colour.

``plot_spectrum_figure`` wraps the raster in a matplotlib figure with date
and scale axes and the price (or return) panel underneath.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.dates as mdates  # noqa: E402
import matplotlib.image as mimage  # noqa: E402
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import InputError  # noqa: E402

MODULE = "cli-render"

# (position, RGB) stops, cold to hot
GRADIENT: Tuple[Tuple[float, Tuple[int, int, int]], ...] = (
    (0.0, (0, 0, 128)),
    (0.125, (0, 0, 255)),
    (0.375, (0, 255, 255)),
    (0.625, (255, 255, 0)),
    (0.875, (255, 0, 0)),
    (1.0, (128, 0, 0)),
)
BOUNDARY_RGB = (0, 0, 0)

# Agg PNGs carry a Software tag with the matplotlib version unless told not to
PNG_METADATA = {"Software": None}


@dataclass(frozen=True)
class RenderOptions:
    gradient: Tuple[Tuple[float, Tuple[int, int, int]], ...] = GRADIENT
    pale_strength: float = 0.4
    floor_percentile: float = 1.0  # log-power below this percentile maps to the coldest colour
    cell_width: int = 1
    cell_height: int = 1

    def as_dict(self):
        return {
            "gradient": [[pos, list(rgb)] for pos, rgb in self.gradient],
            "pale_strength": self.pale_strength,
            "floor_percentile": self.floor_percentile,
            "boundary_rgb": list(BOUNDARY_RGB),
            "cell_width": self.cell_width,
            "cell_height": self.cell_height,
        }


def apply_gradient(values, gradient=GRADIENT) -> np.ndarray:
    """Map values in [0, 1] to uint8 RGB by linear interpolation between stops."""
    v = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    pos = np.array([g[0] for g in gradient])
    rgb = np.array([g[1] for g in gradient], dtype=float)
    out = np.stack([np.interp(v, pos, rgb[:, k]) for k in range(3)], axis=-1)
    return np.rint(out).astype(np.uint8)


def normalized_log_power(power, floor_percentile: float = 1.0) -> np.ndarray:
    """Log power scaled to [0, 1] for this image alone; zero power maps to 0."""
    p = np.asarray(power, dtype=float)
    out = np.zeros(p.shape)
    pos = p > 0
    if not pos.any():
        return out
    lp = np.log2(p[pos])
    hi = lp.max()
    lo = max(np.percentile(lp, floor_percentile), lp.min())
    if hi > lo:
        out[pos] = np.clip((lp - lo) / (hi - lo), 0.0, 1.0)
    return out


def mask_boundary(mask) -> np.ndarray:
    """Mask cells with at least one 4-neighbour outside the mask (or outside the image)."""
    m = np.asarray(mask, dtype=bool)
    padded = np.pad(m, 1, constant_values=False)
    inner = padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    return m & ~inner


def _check_dims(spectrum, result):
    if result.mask.shape != spectrum.power.shape:
        raise InputError(
            f"mask shape {result.mask.shape} does not match power shape {spectrum.power.shape}", MODULE
        )
    if spectrum.coi.shape != (spectrum.power.shape[0],):
        raise InputError("cone of influence length does not match the time axis", MODULE)


def _to_image(cells, options):
    # (n_times, n_scales, ...) -> image rows from largest scale down to smallest
    img = np.swapaxes(cells, 0, 1)[::-1]
    if options.cell_height > 1:
        img = np.repeat(img, options.cell_height, axis=0)
    if options.cell_width > 1:
        img = np.repeat(img, options.cell_width, axis=1)
    return np.ascontiguousarray(img)


def render_raster(spectrum, result, options: RenderOptions = RenderOptions(), pale: bool = True) -> np.ndarray:
    """``(n_scales*cell_height, n_times*cell_width, 3)`` uint8 image."""
    _check_dims(spectrum, result)
    rgb = apply_gradient(normalized_log_power(spectrum.power, options.floor_percentile), options.gradient)
    rgb[mask_boundary(result.mask)] = BOUNDARY_RGB
    if pale:
        outside = ~spectrum.interior()
        keep = options.pale_strength
        rgb[outside] = np.rint(keep * rgb[outside] + (1.0 - keep) * 255.0).astype(np.uint8)
    return _to_image(rgb, options)


def cell_image(cells, options: RenderOptions = RenderOptions()) -> np.ndarray:
    """Lay a per-cell ``(n_times, n_scales)`` array out like the raster."""
    return _to_image(np.asarray(cells), options)


def encode_png(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    mimage.imsave(buf, image, format="png", metadata=PNG_METADATA)
    return buf.getvalue()


def render_heatmap(spectrum, result, options: RenderOptions = RenderOptions()) -> bytes:
    """PNG bytes of :func:`render_raster`."""
    return encode_png(render_raster(spectrum, result, options))


def _date_nums(timestamps: Optional[Sequence], n: int):
    if timestamps is None:
        return np.arange(n, dtype=float), False
    return mdates.date2num(list(timestamps)), True


def plot_spectrum_figure(
    spectrum,
    result,
    path,
    series=None,
    title: str = "",
    options: RenderOptions = RenderOptions(),
    dpi: int = 100,
):
    """Save a two-panel figure: the power raster over date and scale, then the price path."""
    image = render_raster(spectrum, result, options)
    n = spectrum.power.shape[0]
    x, is_date = _date_nums(spectrum.timestamps, n)
    log_s = np.log2(spectrum.scales)
    half = (log_s[1] - log_s[0]) / 2 if log_s.size > 1 else 0.5

    fig, (ax, ax2) = plt.subplots(
        2, 1, figsize=(11, 6.5), sharex=True, gridspec_kw={"height_ratios": [3, 1]}
    )
    # fixed margins: a layout pass costs as much as drawing the figure
    fig.subplots_adjust(left=0.08, right=0.98, bottom=0.06, top=0.94, hspace=0.06)
    ax.imshow(
        image,
        aspect="auto",
        interpolation="nearest",
        extent=(x[0], x[-1], log_s[0] - half, log_s[-1] + half),
        origin="upper",
    )
    coi = np.log2(np.maximum(spectrum.coi, spectrum.scales[0] / 2))
    ax.plot(x, np.minimum(coi, log_s[-1] + half), color="white", lw=0.8, ls="--")
    ticks = np.arange(math.ceil(log_s[0]), math.floor(log_s[-1]) + 1)
    ax.set_yticks(ticks)
    ax.set_yticklabels([f"{2.0 ** t:g}" for t in ticks])
    ax.set_ylim(log_s[0] - half, log_s[-1] + half)
    ax.set_ylabel("scale (days)")
    if title:
        ax.set_title(title)

    if series is not None and getattr(series, "prices", None) is not None:
        ax2.plot(x, series.prices, color="black", lw=0.7)
        ax2.set_ylabel("close")
    elif series is not None:
        ax2.plot(x, series.values, color="black", lw=0.5)
        ax2.set_ylabel("log return")
    if is_date:
        ax2.xaxis.set_major_locator(mdates.YearLocator())
        ax2.xaxis.set_major_formatter(mdates.DateFormatter("%Y"))
    else:
        ax2.set_xlabel("time index")
    fig.savefig(path, dpi=dpi, metadata=PNG_METADATA)
    plt.close(fig)
