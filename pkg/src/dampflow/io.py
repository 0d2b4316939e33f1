"""CSV and JSON serialization with reproducible float formatting."""

from __future__ import annotations

import csv
import io
import json
import re
from pathlib import Path

import numpy as np

from .scalarflow import EigenSignal, TimeGrid

FLOAT_FORMAT = "%.17g"
_DELTA_RE = re.compile(r"#\s*delta_weight=([^,]+),(.+)")


def fmt(value: float) -> str:
    return FLOAT_FORMAT % float(value)


def complex_pair(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def complex_array(arr) -> list:
    """Nested row-major lists of [re, im] pairs."""
    a = np.asarray(arr, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def array_from_pairs(data) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def signal_to_csv(sig: EigenSignal) -> str:
    buf = io.StringIO()
    dw = sig.delta_weight
    buf.write(f"# delta_weight={fmt(dw.real)},{fmt(dw.imag)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "re", "im"])
    for t, v in zip(sig.t, sig.samples):
        writer.writerow([fmt(t), fmt(v.real), fmt(v.imag)])
    return buf.getvalue()


def signal_from_csv(text: str) -> EigenSignal:
    lines = text.splitlines()
    delta = 0.0
    if lines and lines[0].startswith("#"):
        m = _DELTA_RE.match(lines[0])
        if m:
            delta = complex(float(m.group(1)), float(m.group(2)))
        lines = lines[1:]
    rows = list(csv.DictReader(lines))
    t = np.array([float(r["t"]) for r in rows])
    vals = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
    grid = TimeGrid(float(t[-1]), len(t) - 1)
    return EigenSignal(grid, vals, delta)


def write_signal(path, sig: EigenSignal) -> Path:
    path = Path(path)
    path.write_text(signal_to_csv(sig))
    return path


def read_signal(path) -> EigenSignal:
    return signal_from_csv(Path(path).read_text())


def write_table(path, header, rows) -> Path:
    """CSV with 17-significant-digit floats; ints and strings written as-is."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def _default(obj):
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, complex) or isinstance(obj, np.complexfloating):
        return complex_pair(obj)
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return complex_array(obj)
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(data) -> str:
    return json.dumps(data, default=_default, indent=2, sort_keys=True) + "\n"


def write_json(path, data) -> Path:
    path = Path(path)
    path.write_text(dumps(data))
    return path
