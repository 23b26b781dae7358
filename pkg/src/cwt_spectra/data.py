"""OHLC ingestion and daily open-to-close log returns.

Returns are ``log(close) - log(open)`` of the same trading day, not the
close-to-close convention most tools default to.  Missing trading days are
not imputed: the series is treated as evenly spaced in trading time.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import socket
import time
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from .errors import InputError, NetworkError

MODULE = "data-io"
log = logging.getLogger(__name__)

RETURN_BOUND = 1.0  # |log return| >= 1 is a >170% daily move: a data error


@dataclass(frozen=True)
class ColumnSchema:
    date: str = "Date"
    open: str = "Open"
    high: str = "High"
    low: str = "Low"
    close: str = "Close"

    def columns(self):
        return [self.date, self.open, self.high, self.low, self.close]


@dataclass(frozen=True)
class OhlcRecord:
    date: date
    open: float
    high: float
    low: float
    close: float

    def is_valid(self) -> bool:
        prices = (self.open, self.high, self.low, self.close)
        if not all(math.isfinite(p) and p > 0 for p in prices):
            return False
        return self.low <= min(self.open, self.close) and self.high >= max(self.open, self.close)


class ParsedOhlc(NamedTuple):
    records: List[OhlcRecord]
    dropped: int


@dataclass
class ReturnSeries:
    """Evenly spaced (trading-time) series with optional dates."""

    values: np.ndarray
    timestamps: Optional[List[date]] = None
    source_symbol: str = ""
    prices: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise InputError("return series must be one-dimensional", MODULE)
        if self.timestamps is not None:
            self.timestamps = list(self.timestamps)
            if len(self.timestamps) != self.values.size:
                raise InputError("timestamps and values differ in length", MODULE)
            for a, b in zip(self.timestamps, self.timestamps[1:]):
                if not a < b:
                    raise InputError(f"timestamps not strictly increasing at {b}", MODULE)

    def __len__(self):
        return self.values.size

    def between(self, date_from: Optional[date] = None, date_to: Optional[date] = None) -> "ReturnSeries":
        """Inclusive date-range selection; raises on an empty result."""
        if self.timestamps is None:
            raise InputError("series has no dates to select on", MODULE)
        keep = [
            i
            for i, d in enumerate(self.timestamps)
            if (date_from is None or d >= date_from) and (date_to is None or d <= date_to)
        ]
        if not keep:
            raise InputError("empty series: no observations in the selected date range", MODULE)
        idx = np.asarray(keep)
        prices = None if self.prices is None else self.prices[idx]
        return ReturnSeries(self.values[idx], [self.timestamps[i] for i in keep], self.source_symbol, prices)


def parse_date(text: str) -> date:
    text = text.strip()
    try:
        return date.fromisoformat(text)
    except ValueError:
        return datetime.fromisoformat(text.replace("Z", "+00:00")).date()


def _price(text):
    if text is None:
        raise ValueError("missing")
    return float(text)


def parse_ohlc_csv(data: bytes, schema: ColumnSchema = ColumnSchema()) -> ParsedOhlc:
    """Parse a header-led OHLC CSV into date-sorted records.

    Rows with a missing or unparseable field, or with inconsistent prices
    (low above the body, high below it, non-positive), are dropped and
    counted.  A repeated date is an error.
    """
    if isinstance(data, str):
        text = data
    else:
        text = bytes(data).decode("utf-8-sig")
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header or all(not h.strip() for h in header):
        raise InputError("CSV has no header row", MODULE)
    header = [h.strip() for h in header]
    missing = [c for c in schema.columns() if c not in header]
    if missing:
        raise InputError(f"CSV header lacks column(s) {', '.join(missing)}", MODULE)
    idx = [header.index(c) for c in schema.columns()]

    records = {}
    dropped = 0
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            cells = [row[i] if i < len(row) else None for i in idx]
            d = parse_date(cells[0])
            rec = OhlcRecord(d, *(_price(c) for c in cells[1:]))
        except (ValueError, TypeError):
            dropped += 1
            continue
        if not rec.is_valid():
            dropped += 1
            continue
        if d in records:
            raise InputError(f"duplicate date {d.isoformat()} in CSV", MODULE)
        records[d] = rec
    if not records:
        raise InputError("CSV contains no parsable rows", MODULE)
    if dropped:
        log.info("dropped %d unparseable OHLC rows", dropped)
    return ParsedOhlc([records[d] for d in sorted(records)], dropped)


def serialize_ohlc_csv(records: Sequence[OhlcRecord], schema: ColumnSchema = ColumnSchema()) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(schema.columns())
    for r in records:
        w.writerow([r.date.isoformat(), repr(r.open), repr(r.high), repr(r.low), repr(r.close)])
    return buf.getvalue().encode("utf-8")


def log_returns(records: Sequence[OhlcRecord], symbol: str = "") -> ReturnSeries:
    """Open-to-close log return of each trading day, in date order."""
    if not records:
        raise InputError("empty series: no records", MODULE)
    recs = sorted(records, key=lambda r: r.date)
    o = np.array([r.open for r in recs], dtype=float)
    c = np.array([r.close for r in recs], dtype=float)
    if np.any(~(o > 0)) or np.any(~(c > 0)):
        bad = next(r.date for r in recs if not (r.open > 0 and r.close > 0))
        raise InputError(f"non-positive price on {bad.isoformat()}", MODULE)
    r = np.log(c) - np.log(o)
    big = np.flatnonzero(np.abs(r) >= RETURN_BOUND)
    if big.size:
        raise InputError(f"implausible daily return {r[big[0]]:.3f} on {recs[big[0]].date.isoformat()}", MODULE)
    return ReturnSeries(r, [x.date for x in recs], symbol, prices=c)


def business_days(n: int, start: date = date(2000, 1, 3)) -> List[date]:
    """``n`` consecutive Monday-Friday dates from ``start``; labels for synthetic series."""
    first = np.busday_offset(np.datetime64(start, "D"), 0, roll="forward")
    days = np.busday_offset(first, np.arange(n))
    return [d.item() for d in days]


def write_returns_csv(series: ReturnSeries, path) -> None:
    stamps = series.timestamps or [None] * len(series)
    lines = ["date,log_return"]
    for d, v in zip(stamps, series.values):
        lines.append(f"{d.isoformat() if d is not None else ''},{v:.17g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_returns_csv(data: bytes, symbol: str = "") -> ReturnSeries:
    """Inverse of :func:`write_returns_csv`."""
    text = data.decode("utf-8-sig") if isinstance(data, bytes) else data
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["date", "log_return"]:
        raise InputError("expected header 'date,log_return'", MODULE)
    dates, values = [], []
    for row in reader:
        if not row:
            continue
        try:
            dates.append(parse_date(row[0]) if row[0] else None)
            values.append(float(row[1]))
        except (ValueError, IndexError):
            raise InputError(f"bad returns row {row!r}", MODULE) from None
    if not values:
        raise InputError("empty series: returns file has no rows", MODULE)
    stamps = None if any(d is None for d in dates) else dates
    return ReturnSeries(np.array(values), stamps, symbol)


def is_returns_csv(data: bytes) -> bool:
    head = data[:64].decode("utf-8-sig", errors="replace")
    return head.split("\n", 1)[0].strip() == "date,log_return"


def read_returns_csv(path, symbol: str = "") -> ReturnSeries:
    return parse_returns_csv(Path(path).read_bytes(), symbol)


def fetch_csv(url: str, timeout: float = 30.0, retries: int = 3, backoff: float = 0.5) -> bytes:
    """GET ``url`` and return the body of a 200 response.

    ``retries`` is the total number of attempts.  Timeouts, connection
    failures and 5xx responses are retried with exponential backoff; any
    other status fails at once.  Nothing is written to disk.
    """
    scheme = urllib.parse.urlparse(url).scheme
    if scheme not in ("http", "https"):
        raise InputError(f"unsupported URL scheme {scheme!r}", MODULE)
    if retries < 1:
        raise InputError("retries must be at least 1", MODULE)
    last = None
    for attempt in range(retries):
        if attempt:
            time.sleep(backoff * 2 ** (attempt - 1))
        try:
            with urllib.request.urlopen(url, timeout=timeout) as resp:
                status = resp.status
                body = resp.read()
            if status == 200:
                return body
            raise NetworkError(f"HTTP {status} from {url}", status=status)
        except urllib.error.HTTPError as exc:
            if exc.code < 500:
                raise NetworkError(f"HTTP {exc.code} from {url}", status=exc.code) from None
            last = NetworkError(f"HTTP {exc.code} from {url}", status=exc.code)
        except (urllib.error.URLError, socket.timeout, TimeoutError, ConnectionError) as exc:
            reason = getattr(exc, "reason", exc)
            last = NetworkError(f"fetching {url} failed: {reason}")
        log.warning("attempt %d/%d for %s failed", attempt + 1, retries, url)
    raise last
