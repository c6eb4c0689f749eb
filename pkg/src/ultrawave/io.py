"""On-disk formats: binary signal container, JSON sidecars, CSV projections.

Container layout (all little-endian)::

    magic    8 bytes   b"UWAVE01\\0"
    rank     uint32    number of array axes
    reserved uint32    0
    per axis float64 origin, float64 spacing, uint64 extent
    payload  float64   interleaved (re, im), C order

Every write goes to a temporary file in the target directory and is moved
into place with :func:`os.replace`, so readers never see partial files.
"""
from __future__ import annotations

import csv
import io as _io
import json
import os
import struct
import tempfile

import numpy as np

from .signals import Grid, SampledSignal, window_from_dict

MAGIC = b"UWAVE01\0"
_HEAD = struct.Struct("<8sII")
_AXIS = struct.Struct("<ddQ")
MAX_CSV_SAMPLES = 1 << 16


def atomic_write(path, data) -> None:
    """Write ``data`` (str or bytes) to ``path`` via temp file + rename."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    raw = data.encode("utf-8") if isinstance(data, str) else bytes(data)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    atomic_write(path, dumps_json(obj))


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def sidecar_path(path) -> str:
    return os.fspath(path) + ".json"


# ----------------------------------------------------------------------------
# raw container


def encode_array(values: np.ndarray, origin, spacing) -> bytes:
    v = np.ascontiguousarray(values, dtype=np.complex128)
    if len(origin) != v.ndim or len(spacing) != v.ndim:
        raise ValueError("one origin and spacing per axis required")
    parts = [_HEAD.pack(MAGIC, v.ndim, 0)]
    for o, h, n in zip(origin, spacing, v.shape):
        parts.append(_AXIS.pack(float(o), float(h), int(n)))
    parts.append(v.astype("<c16").tobytes())
    return b"".join(parts)


def decode_array(raw: bytes):
    """Return ``(values, origin, spacing)`` from container bytes."""
    if len(raw) < _HEAD.size:
        raise ValueError("truncated container")
    magic, rank, _ = _HEAD.unpack_from(raw, 0)
    if magic != MAGIC:
        raise ValueError("not an ultrawave container")
    off = _HEAD.size
    origin, spacing, extent = [], [], []
    for _ in range(rank):
        o, h, n = _AXIS.unpack_from(raw, off)
        off += _AXIS.size
        origin.append(o)
        spacing.append(h)
        extent.append(n)
    count = int(np.prod(extent)) if extent else 0
    if len(raw) - off != 16 * count:
        raise ValueError("payload size does not match the header")
    vals = np.frombuffer(raw, dtype="<c16", count=count, offset=off).astype(np.complex128)
    return vals.reshape(extent), tuple(origin), tuple(spacing)


# ----------------------------------------------------------------------------
# signals


def signal_bytes(f: SampledSignal) -> bytes:
    return encode_array(f.values, f.grid.origin, f.grid.spacing)


def signal_sidecar(f: SampledSignal) -> dict:
    return {"type": "signal", "name": f.name, "grid": f.grid.to_dict(), "meta": _jsonable(f.meta),
            "format": "ultrawave-container-1"}


def save_signal(f: SampledSignal, path, extra: dict | None = None) -> None:
    """Container plus sidecar; ``extra`` entries are merged into the sidecar."""
    atomic_write(path, signal_bytes(f))
    write_json(sidecar_path(path), {**signal_sidecar(f), **_jsonable(extra or {})})


def load_signal(path) -> SampledSignal:
    with open(path, "rb") as fh:
        vals, origin, spacing = decode_array(fh.read())
    name, meta = os.path.basename(os.fspath(path)), {}
    side = sidecar_path(path)
    if os.path.exists(side):
        d = read_json(side)
        name, meta = d.get("name", name), d.get("meta", {})
    return SampledSignal(vals, Grid(vals.shape, spacing, origin), name, meta)


def signal_to_csv(f: SampledSignal) -> str:
    """Columns ``x`` (``x0, x1`` in 2D), ``re``, ``im``; small signals only."""
    if f.values.size > MAX_CSV_SAMPLES:
        raise ValueError("signal too large for CSV export")
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    axes = [f"x{k}" for k in range(f.dimension)] if f.dimension > 1 else ["x"]
    w.writerow(axes + ["re", "im"])
    coords = f.grid.coords()
    for idx in np.ndindex(*f.extent):
        v = f.values[idx]
        w.writerow([repr(float(coords[k][idx])) for k in range(f.dimension)]
                   + [repr(float(v.real)), repr(float(v.imag))])
    return buf.getvalue()


def signal_from_csv(text: str) -> SampledSignal:
    rows = list(csv.reader(_io.StringIO(text)))
    head, body = rows[0], rows[1:]
    d = len(head) - 2
    pts = np.array([[float(c) for c in r[:d]] for r in body])
    vals = np.array([float(r[d]) + 1j * float(r[d + 1]) for r in body])
    axes = [np.unique(pts[:, k]) for k in range(d)]
    extent = tuple(len(a) for a in axes)
    spacing = tuple(float(a[1] - a[0]) for a in axes)
    origin = tuple(float(a[0]) for a in axes)
    return SampledSignal(vals.reshape(extent), Grid(extent, spacing, origin), "csv")


# ----------------------------------------------------------------------------
# STFT arrays


def save_stft(V, path) -> None:
    """Positions then frequencies as container axes; the sidecar describes both grids."""
    d = V.dimension
    origin = [float(p[0]) for p in V.positions] + [float(V.freq.axis(k)[0]) for k in range(d)]
    spacing = [V.stride * h for h in V.grid.spacing] + list(V.freq.spacing)
    atomic_write(path, encode_array(V.values, origin, spacing))
    write_json(sidecar_path(path), dict(V.sidecar(), type="stft", rank=2 * d))


def load_stft(path):
    from .spectral import StftArray, dual_grid

    with open(path, "rb") as fh:
        vals, _, _ = decode_array(fh.read())
    side = read_json(sidecar_path(path))
    g = side["grid"]
    grid = Grid(tuple(g["extent"]), tuple(g["spacing"]), tuple(g["origin"]))
    stride = int(side["stride"])
    positions = tuple(grid.origin[k] + np.arange(0, grid.extent[k], stride) * grid.spacing[k]
                      for k in range(grid.dimension))
    return StftArray(vals, grid, stride, window_from_dict(side["window"]), positions, dual_grid(grid))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj
