"""Signal files (CSV and WFS1 binary) and JSON-lines verdict reports."""
from __future__ import annotations

import csv
import io
import json
import math
import struct
from pathlib import Path
from typing import Iterable, List, Optional

import numpy as np

from .core import Grid, SampledSignal

MAGIC = b"WFS1"
_HEAD = struct.Struct("<4sII")
REPORT_FORMAT = "wfscope-report"
REPORT_VERSION = 1


class SignalFormatError(ValueError):
    """Malformed signal file; ``offset`` is a byte offset (binary) or line number (CSV)."""

    def __init__(self, message: str, offset: int, unit: str = "byte"):
        super().__init__(f"{message} (at {unit} {offset})")
        self.offset = offset
        self.unit = unit


# ---------------------------------------------------------------------------
# binary
# ---------------------------------------------------------------------------

def encode_binary(f: SampledSignal) -> bytes:
    g = f.grid
    head = _HEAD.pack(MAGIC, g.dimension, g.n)
    head += struct.pack(f"<{g.dimension}d", *g.origin) + struct.pack("<d", g.spacing)
    body = np.ascontiguousarray(f.samples.ravel(), dtype="<c16").tobytes()
    return head + body


def decode_binary(data: bytes, label: str = "") -> SampledSignal:
    if len(data) < _HEAD.size:
        raise SignalFormatError("truncated header", len(data))
    magic, dim, n = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise SignalFormatError(f"bad magic {magic!r}, expected {MAGIC!r}", 0)
    if dim not in (1, 2):
        raise SignalFormatError(f"dimension {dim} not in (1, 2)", 4)
    pos = _HEAD.size
    need = pos + 8 * (dim + 1)
    if len(data) < need:
        raise SignalFormatError("truncated grid description", len(data))
    origin = struct.unpack_from(f"<{dim}d", data, pos)
    (dx,) = struct.unpack_from("<d", data, pos + 8 * dim)
    try:
        grid = Grid(dim, origin, dx, n)
    except ValueError as err:
        raise SignalFormatError(str(err), 8) from None
    pos = need
    expected = pos + 16 * grid.size
    if len(data) != expected:
        raise SignalFormatError(f"expected {grid.size} complex samples ending at byte {expected}, "
                                f"file has {len(data)} bytes", min(len(data), expected))
    samples = np.frombuffer(data, dtype="<c16", offset=pos).astype(complex)
    return SampledSignal(grid, samples, label)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def encode_csv(f: SampledSignal) -> str:
    g = f.grid
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if g.dimension == 1:
        w.writerow(["t", "re", "im"])
        for t, v in zip(g.axis(0), f.samples):
            w.writerow([repr(float(t)), repr(float(v.real)), repr(float(v.imag))])
    else:
        w.writerow(["t1", "t2", "re", "im"])
        a1, a2 = g.axis(0), g.axis(1)
        for i in range(g.n):
            for j in range(g.n):
                v = f.samples[i, j]
                w.writerow([repr(float(a1[i])), repr(float(a2[j])), repr(float(v.real)), repr(float(v.imag))])
    return buf.getvalue()


def _infer_axis(t: np.ndarray, line0: int, name: str):
    n = len(t)
    if n < 2:
        raise SignalFormatError(f"need at least two distinct {name} values", line0, "line")
    dx = (t[-1] - t[0]) / (n - 1)
    if not dx > 0:
        raise SignalFormatError(f"{name} must increase", line0, "line")
    dev = np.abs(t - (t[0] + np.arange(n) * dx))
    bad = np.nonzero(dev > 1e-9 * max(dx, abs(t).max()))[0]
    if len(bad):
        raise SignalFormatError(f"{name} is not uniformly spaced", line0 + int(bad[0]), "line")
    # prefer the exact first difference when it agrees (keeps power-of-two spacings exact)
    d1 = t[1] - t[0]
    if abs(d1 - dx) <= 1e-12 * dx:
        dx = d1
    return float(t[0]), float(dx), n


def decode_csv(text: str, label: str = "") -> SampledSignal:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise SignalFormatError("empty file", 1, "line")
    header = [h.strip() for h in rows[0]]
    if header == ["t", "re", "im"]:
        dim = 1
    elif header == ["t1", "t2", "re", "im"]:
        dim = 2
    else:
        raise SignalFormatError(f"bad header {rows[0]!r}; expected t,re,im or t1,t2,re,im", 1, "line")
    vals = np.empty((len(rows) - 1, dim + 2))
    for i, row in enumerate(rows[1:]):
        line = i + 2
        if len(row) != dim + 2:
            raise SignalFormatError(f"expected {dim + 2} fields, got {len(row)}", line, "line")
        try:
            vals[i] = [float(x) for x in row]
        except ValueError:
            raise SignalFormatError(f"non-numeric field in {row!r}", line, "line") from None
    if dim == 1:
        o, dx, n = _infer_axis(vals[:, 0], 2, "t")
        origin = (o,)
    else:
        m = len(vals)
        n = int(round(math.sqrt(m)))
        if n * n != m:
            raise SignalFormatError(f"{m} rows is not a square grid", len(rows), "line")
        o1, dx1, _ = _infer_axis(vals[::n, 0], 2, "t1")
        o2, dx2, _ = _infer_axis(vals[:n, 1], 2, "t2")
        if abs(dx1 - dx2) > 1e-12 * dx1:
            raise SignalFormatError("t1 and t2 spacings differ", 2, "line")
        if not (np.all(vals[:, 0].reshape(n, n) == vals[::n, 0][:, None])
                and np.all(vals[:, 1].reshape(n, n) == vals[:n, 1][None, :])):
            raise SignalFormatError("rows are not in grid order (t1 outer, t2 inner)", 2, "line")
        origin, dx = (o1, o2), dx1
    try:
        grid = Grid(dim, origin, dx, n)
    except ValueError as err:
        raise SignalFormatError(str(err), 2, "line") from None
    return SampledSignal(grid, vals[:, -2] + 1j * vals[:, -1], label)


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------

def _is_csv(path: Path, fmt: Optional[str]) -> bool:
    if fmt is not None:
        if fmt not in ("csv", "binary"):
            raise ValueError(f"unknown signal format {fmt!r}")
        return fmt == "csv"
    return path.suffix.lower() == ".csv"


def write_signal(f: SampledSignal, path, fmt: Optional[str] = None) -> None:
    """Write ``f`` as CSV (``.csv`` suffix or ``fmt='csv'``) or WFS1 binary."""
    path = Path(path)
    if _is_csv(path, fmt):
        path.write_text(encode_csv(f))
    else:
        path.write_bytes(encode_binary(f))


def read_signal(path, fmt: Optional[str] = None) -> SampledSignal:
    """Read a signal file; the format is sniffed from the magic bytes unless given."""
    path = Path(path)
    data = path.read_bytes()
    if fmt is None:
        fmt = "binary" if data[:4] == MAGIC else "csv"
    if fmt == "binary":
        return decode_binary(data, path.stem)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as err:
        raise SignalFormatError("not UTF-8 text and no WFS1 magic", err.start) from None
    return decode_csv(text, path.stem)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def format_report(verdicts: Iterable, config: dict, config_hash: str, source: str = "") -> str:
    """JSON lines: one header then one record per verdict, sorted by (x, direction)."""
    verdicts = sorted(verdicts, key=lambda v: v.point.sort_key())
    lines = [_dump({"format": REPORT_FORMAT, "version": REPORT_VERSION, "source": source,
                    "config": config, "config_hash": config_hash})]
    for v in verdicts:
        rec = v.record()
        rec["config_hash"] = config_hash
        lines.append(_dump(_clean(rec)))
    return "\n".join(lines) + "\n"


def _clean(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def parse_report(text: str) -> tuple:
    """Return ``(header, records)`` from a report produced by :func:`format_report`."""
    lines = [json.loads(l) for l in text.splitlines() if l.strip()]
    if not lines or lines[0].get("format") != REPORT_FORMAT:
        raise ValueError("not a wfscope report")
    return lines[0], lines[1:]
