"""Readers and writers for the files an analysis run leaves behind.

Matrix files (power, mask) are CSV with a short ``#`` comment block, a
header row ``date,<scale_1>,...,<scale_J>`` and one row per trading day.
Floats are written in their shortest round-trip form (``repr``), so every
file reads back bit-for-bit.
"""

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .data import parse_date
from .errors import InputError

MODULE = "cli-render"


def _fmt(v):
    return repr(float(v))


def _date_labels(dates, n):
    if dates is None:
        return [str(i) for i in range(n)]
    return [d.isoformat() for d in dates]


def write_matrix(path, matrix, scales, dates=None, kind="power", comment=()):
    matrix = np.asarray(matrix)
    n, J = matrix.shape
    if len(scales) != J:
        raise InputError(f"{len(scales)} scales for a matrix with {J} columns", MODULE)
    is_mask = matrix.dtype == bool
    lines = [f"# cwt-spectra {kind} matrix", "# rows: time; columns: scale in days"]
    lines += [f"# {c}" for c in comment]
    lines.append(",".join(["date"] + [_fmt(s) for s in scales]))
    if is_mask:
        body = [",".join(r) for r in np.where(matrix, "1", "0").tolist()]
    else:
        body = [",".join(map(repr, r)) for r in matrix.astype(float).tolist()]
    for label, row in zip(_date_labels(dates, n), body):
        lines.append(label + "," + row)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_label(label):
    try:
        return parse_date(label)
    except ValueError:
        return None


def read_matrix(path, as_mask=False):
    """Return ``(matrix, scales, dates)``; ``dates`` is None for index-labelled rows."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    if not rows or rows[0][0] != "date":
        raise InputError(f"{path}: missing 'date,<scales>' header", MODULE)
    scales = np.array([float(v) for v in rows[0][1:]])
    labels = [r[0] for r in rows[1:]]
    body = [r[1:] for r in rows[1:]]
    if as_mask:
        matrix = np.array([[v == "1" for v in r] for r in body], dtype=bool)
    else:
        matrix = np.array([[float(v) for v in r] for r in body], dtype=float)
    matrix = matrix.reshape(len(labels), scales.size)
    dates = [_parse_label(x) for x in labels]
    if any(d is None for d in dates):
        dates = None
    return matrix, scales, dates


def write_thresholds(path, scales, periods, thresholds):
    lines = ["scale,period,threshold"]
    lines += [f"{_fmt(s)},{_fmt(p)},{_fmt(t)}" for s, p, t in zip(scales, periods, thresholds)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_thresholds(path):
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return arr[:, 0], arr[:, 1], arr[:, 2]


def write_coi(path, coi, dates=None):
    labels = _date_labels(dates, len(coi))
    lines = ["date,coi"] + [f"{d},{_fmt(c)}" for d, c in zip(labels, coi)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_coi(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["date", "coi"]:
        raise InputError(f"{path}: expected header 'date,coi'", MODULE)
    dates = [_parse_label(r[0]) for r in rows[1:]]
    coi = np.array([float(r[1]) for r in rows[1:]])
    return coi, (None if any(d is None for d in dates) else dates)


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    return sha256_bytes(Path(path).read_bytes())
