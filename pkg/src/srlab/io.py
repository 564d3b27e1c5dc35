"""Flat-file output: CSV with 17 significant digits (round-trips doubles
exactly) and JSON documents."""

import csv
import io as _io
import json
import math
from fractions import Fraction

import numpy as np

from .curves import PlaneCurve
from .errors import ValidationError

CURVE_COLUMNS = ("t", "x1", "x2")
TRAJECTORY_COLUMNS = ("t", "x1", "x2", "x3", "p1", "p2", "p3", "H")
SWEEP_COLUMNS = ("a", "b", "c", "eps", "constructible", "margin", "rho", "delta",
                 "L_gamma", "L_omega", "gain_net", "residual", "optimizer_length", "error")


def fmt(v):
    """Decimal text for a CSV cell; None becomes an empty cell."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(rows, columns, dest=None):
    """Write ``rows`` (sequences or dicts keyed by column) to ``dest``
    (path or file object); returns the text when ``dest`` is None."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        vals = [r.get(c) for c in columns] if isinstance(r, dict) else list(r)
        if len(vals) != len(columns):
            raise ValidationError(f"row has {len(vals)} cells, expected {len(columns)}")
        w.writerow([fmt(v) for v in vals])
    text = buf.getvalue()
    if dest is None:
        return text
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def _cell(v):
    if v == "":
        return np.nan
    if v in ("true", "false"):
        return float(v == "true")
    return float(v)


def read_csv(src):
    """Header and float columns of a numeric CSV file."""
    fh = open(src, encoding="utf-8", newline="") if isinstance(src, str) else src
    try:
        rows = list(csv.reader(fh))
    finally:
        if isinstance(src, str):
            fh.close()
    header, body = rows[0], rows[1:]
    data = np.array([[_cell(v) for v in r] for r in body], float)
    return header, data.reshape(len(body), len(header))


def curve_rows(curve, x3=None):
    cols = np.column_stack([curve.params, curve.points] + ([np.asarray(x3)] if x3 is not None else []))
    return cols.tolist()


def write_curve(curve, dest=None, x3=None):
    cols = CURVE_COLUMNS + (("x3",) if x3 is not None else ())
    return write_csv(curve_rows(curve, x3), cols, dest)


def read_curve(src):
    """A polyline from a curve CSV, and its x3 column if present."""
    header, data = read_csv(src)
    if tuple(header[:3]) != CURVE_COLUMNS:
        raise ValidationError(f"not a curve file (header {header})")
    x3 = data[:, 3] if "x3" in header else None
    return PlaneCurve(data[:, 0], data[:, 1:3]), x3


def write_trajectory(traj, dest=None):
    rows = np.column_stack([traj.t, traj.y, traj.H]).tolist()
    return write_csv(rows, TRAJECTORY_COLUMNS, dest)


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        # JSON has no inf/nan
        return v if math.isfinite(v) else None
    if hasattr(v, "to_dict"):
        return _plain(v.to_dict())
    return v


def to_json(obj, dest=None):
    """One JSON document with sorted keys; ``obj`` may be a report with a
    ``to_dict`` method or plain data."""
    text = json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"
    if dest is None:
        return text
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
