"""Command-line front end: ``analyze``, ``simulate``, ``render``, ``selftest``.

Exit status: 0 success, 2 input error, 3 numerical-invariant failure,
4 network error.
"""

import argparse
import logging
import sys
from datetime import date
from pathlib import Path

import numpy as np

from . import __version__, artifacts, data, pipeline, render, selftest, synthetic, wavelet
from .errors import CwtSpectraError, InputError
from .significance import Ar1Model


def _date(text):
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a YYYY-MM-DD date: {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="cwt-spectra", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="wavelet power spectrum of an OHLC or returns CSV")
    a.add_argument("--input", help="CSV path or http(s) URL")
    a.add_argument("--manifest", help="rerun the configuration stored in a manifest.json")
    a.add_argument("--symbol", default="")
    a.add_argument("--date-from", type=_date)
    a.add_argument("--date-to", type=_date)
    a.add_argument("--omega0", type=float, default=6.0)
    a.add_argument("--s0", type=float, default=2.0)
    a.add_argument("--dj", type=float, default=0.0833333)
    a.add_argument("--level", type=float, default=0.95)
    a.add_argument("--null", choices=("analytic", "mc"), default="analytic")
    a.add_argument("--mc-runs", type=int, default=1000)
    a.add_argument("--seed", type=int, default=0)
    for col in ("date", "open", "high", "low", "close"):
        a.add_argument(f"--col-{col}", default=col.capitalize(), help=f"{col} column name")
    a.add_argument("--no-figure", action="store_true", help="skip the annotated matplotlib figure")
    a.add_argument("--out", help="output directory")

    s = sub.add_parser("simulate", help="write a synthetic return series")
    s.add_argument("--kind", choices=("ar1", "burst"), default="ar1")
    s.add_argument("--n", type=int, default=2048)
    s.add_argument("--phi", type=float, default=0.0)
    s.add_argument("--sigma", type=float, default=0.01)
    s.add_argument("--burst-start", type=int, default=1000)
    s.add_argument("--burst-end", type=int, default=1060)
    s.add_argument("--band-min", type=float, default=2.0)
    s.add_argument("--band-max", type=float, default=8.0)
    s.add_argument("--ratio", type=float, default=4.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    r = sub.add_parser("render", help="re-render the heatmap from an analysis directory")
    r.add_argument("--from", dest="source", required=True, help="directory written by analyze")
    r.add_argument("--out", help="PNG path for the raster (default: <from>/heatmap.png)")
    r.add_argument("--figure", help="also save the annotated figure here")

    sub.add_parser("selftest", help="oracle, round-trip and calibration checks")
    return p


def _config(args):
    if args.manifest:
        cfg = pipeline.AnalysisConfig.from_dict(artifacts.read_json(args.manifest)["config"])
        if args.out:
            cfg.out = args.out
        return cfg
    if not args.input or not args.out:
        raise InputError("analyze needs --input and --out (or --manifest)", "cli-render")
    schema = data.ColumnSchema(args.col_date, args.col_open, args.col_high, args.col_low, args.col_close)
    return pipeline.AnalysisConfig(
        input=args.input,
        out=args.out,
        symbol=args.symbol,
        schema=schema,
        date_from=args.date_from,
        date_to=args.date_to,
        omega0=args.omega0,
        s0=args.s0,
        dj=args.dj,
        level=args.level,
        null=args.null,
        mc_runs=args.mc_runs,
        seed=args.seed,
    )


def cmd_analyze(args):
    res = pipeline.run_analysis(_config(args), render_figure=not args.no_figure)
    m = res.manifest
    print(
        f"{m['series']['symbol']}: n={m['series']['n']} scales={m['grid']['count']} "
        f"phi={m['ar1']['phi']:.4f} significant(inside COI)={m['significance']['significant_fraction_inside_coi']:.4f}"
    )
    print(f"wrote {res.out}")
    return 0


def _synthetic_ohlc(series, start=100.0):
    close = start * np.exp(np.cumsum(series.values))
    open_ = close / np.exp(series.values)
    return [
        data.OhlcRecord(d, float(o), float(max(o, c)), float(min(o, c)), float(c))
        for d, o, c in zip(series.timestamps, open_, close)
    ]


def cmd_simulate(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "ar1":
        series = synthetic.gen_ar1(args.n, args.phi, args.sigma, args.seed)
        mask = None
    else:
        base = Ar1Model.from_innovations(args.phi, args.sigma**2)
        spec = synthetic.BurstSpec(args.burst_start, args.burst_end, args.band_min, args.band_max, args.ratio)
        grid = wavelet.build_scale_grid(args.n)
        series, mask = synthetic.gen_burst_series(args.n, base, spec, args.seed, grid)
    data.write_returns_csv(series, out / "returns.csv")
    if mask is not None:
        artifacts.write_matrix(out / "truth_mask.csv", mask, grid.scales, series.timestamps, "burst-truth")
    if np.all(np.abs(series.values) < data.RETURN_BOUND):
        (out / "ohlc.csv").write_bytes(data.serialize_ohlc_csv(_synthetic_ohlc(series)))
    print(f"wrote {out}")
    return 0


def cmd_render(args):
    spectrum, result, manifest = pipeline.load_outputs(args.source)
    target = Path(args.out) if args.out else Path(args.source) / pipeline.FILES["heatmap"]
    target.write_bytes(render.render_heatmap(spectrum, result))
    if args.figure:
        render.plot_spectrum_figure(spectrum, result, args.figure, title=manifest["series"]["symbol"])
    print(f"wrote {target}")
    return 0


def cmd_selftest(args):
    results = selftest.run_all()
    return 0 if all(ok for _, ok, _ in results) else 3


COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate, "render": cmd_render, "selftest": cmd_selftest}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CwtSpectraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: [cli-render] {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
