"""File formats: weight/state containers, spike rasters, PPM images and raw
float32 tensors.

Binary container (little-endian)::

    b"TPAM"  u16 version=1  u16 ndim (1 state, 2 matrix)  u64 rows  u64 cols
    rows*cols complex values as interleaved float64 (re, im), row-major

Spike raster binary::

    b"SPKR"  u32 version=1  f64 duration  f64 T  u64 count
    count records of (u32 neuron id, f64 time), packed

Raw tensor::

    u32 D  u32 M  then D*M float32 values, row-major (D rows, M columns)
"""

from __future__ import annotations

import csv
import io
import struct
from pathlib import Path

import numpy as np

from .spiking import SpikeRaster

_HDR = struct.Struct("<4sHHQQ")
_RHDR = struct.Struct("<4sIddQ")
_EVENT = np.dtype([("id", "<u4"), ("t", "<f8")])


class FormatError(ValueError):
    pass


def save_complex(path, a: np.ndarray) -> None:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim not in (1, 2):
        raise FormatError("only vectors and matrices are supported")
    rows, cols = (1, a.shape[0]) if a.ndim == 1 else a.shape
    with open(path, "wb") as f:
        f.write(_HDR.pack(b"TPAM", 1, a.ndim, rows, cols))
        f.write(np.ascontiguousarray(a, dtype="<c16").tobytes())


def load_complex(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HDR.size:
        raise FormatError("file too short for header")
    magic, version, ndim, rows, cols = _HDR.unpack_from(data)
    if magic != b"TPAM" or version != 1 or ndim not in (1, 2):
        raise FormatError("not a TPAM container")
    body = data[_HDR.size:]
    if len(body) != rows * cols * 16:
        raise FormatError(f"expected {rows * cols} values, found {len(body) // 16}")
    a = np.frombuffer(body, dtype="<c16").astype(np.complex128)
    return a if ndim == 1 else a.reshape(rows, cols)


def weights_to_csv(W: np.ndarray, nonzero_only: bool = True) -> str:
    """``i,j,re,im`` lines; the header comment records the shape."""
    W = np.asarray(W, dtype=np.complex128)
    buf = io.StringIO()
    buf.write(f"# shape {W.shape[0]} {W.shape[1]}\ni,j,re,im\n")
    ii, jj = np.nonzero(W) if nonzero_only else np.indices(W.shape).reshape(2, -1)
    for i, j in zip(ii, jj):
        buf.write(f"{i},{j},{float(W[i, j].real)!r},{float(W[i, j].imag)!r}\n")
    return buf.getvalue()


def _split_comments(text: str) -> tuple[list[str], list[str]]:
    lines = text.splitlines()
    return [ln[1:].strip() for ln in lines if ln.startswith("#")], [ln for ln in lines if not ln.startswith("#")]


def weights_from_csv(text: str) -> np.ndarray:
    comments, body = _split_comments(text)
    shape = [c for c in comments if c.startswith("shape ")]
    if not shape:
        raise FormatError("missing shape header")
    r, c = map(int, shape[0].split()[1:3])
    W = np.zeros((r, c), dtype=np.complex128)
    for row in csv.DictReader(body):
        W[int(row["i"]), int(row["j"])] = complex(float(row["re"]), float(row["im"]))
    return W


def state_to_csv(z: np.ndarray) -> str:
    z = np.asarray(z, dtype=np.complex128)
    rows = [f"{i},{float(v.real)!r},{float(v.imag)!r}" for i, v in enumerate(z)]
    return "i,re,im\n" + "\n".join(rows) + "\n"


def state_from_csv(text: str) -> np.ndarray:
    rows = list(csv.DictReader(_split_comments(text)[1]))
    z = np.zeros(len(rows), dtype=np.complex128)
    for r in rows:
        z[int(r["i"])] = complex(float(r["re"]), float(r["im"]))
    return z


def raster_to_csv(raster: SpikeRaster) -> str:
    buf = io.StringIO()
    buf.write(f"# duration {float(raster.duration)!r} T {float(raster.T)!r}\nneuron_id,time_s\n")
    for i, t in zip(raster.ids, raster.times):
        buf.write(f"{i},{float(t)!r}\n")
    return buf.getvalue()


def raster_from_csv(text: str) -> SpikeRaster:
    comments, body = _split_comments(text)
    duration, T = 0.0, 0.2
    for c in comments:
        if c.startswith("duration "):
            parts = c.split()
            meta = dict(zip(parts[::2], map(float, parts[1::2])))
            duration, T = meta.get("duration", 0.0), meta.get("T", 0.2)
    rows = list(csv.DictReader(body))
    ids = np.array([int(r["neuron_id"]) for r in rows], dtype=np.int64)
    times = np.array([float(r["time_s"]) for r in rows])
    return SpikeRaster(ids, times, duration or (float(times.max()) if times.size else 0.0), T)


def save_raster(path, raster: SpikeRaster) -> None:
    ev = np.empty(len(raster), dtype=_EVENT)
    ev["id"], ev["t"] = raster.ids, raster.times
    with open(path, "wb") as f:
        f.write(_RHDR.pack(b"SPKR", 1, raster.duration, raster.T, len(raster)))
        f.write(ev.tobytes())


def load_raster(path) -> SpikeRaster:
    data = Path(path).read_bytes()
    if len(data) < _RHDR.size:
        raise FormatError("file too short for header")
    magic, version, duration, T, count = _RHDR.unpack_from(data)
    if magic != b"SPKR" or version != 1:
        raise FormatError("not a spike raster file")
    if len(data) - _RHDR.size != count * _EVENT.itemsize:
        raise FormatError("truncated raster body")
    ev = np.frombuffer(data, dtype=_EVENT, offset=_RHDR.size)
    return SpikeRaster(ev["id"].astype(np.int64), ev["t"].copy(), duration, T)


def _ppm_tokens(data: bytes, count: int):
    # header fields separated by whitespace, '#' starts a comment line
    out, pos = [], 0
    while len(out) < count:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        out.append(data[start:pos])
    return out, pos + 1


def read_ppm(path) -> np.ndarray:
    """Binary PPM (P6, maxval < 256) as an ``H x W x 3`` uint8 array."""
    data = Path(path).read_bytes()
    (magic, w, h, maxval), pos = _ppm_tokens(data, 4)
    if magic != b"P6":
        raise FormatError("only binary P6 PPM is supported")
    w, h, maxval = int(w), int(h), int(maxval)
    if not 0 < maxval < 256:
        raise FormatError("only 8-bit PPM is supported")
    body = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    return body.reshape(h, w, 3).copy()


def write_ppm(path, img: np.ndarray, comment: str | None = None) -> None:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise FormatError("need an H x W x 3 image")
    img = np.clip(np.rint(img), 0, 255).astype(np.uint8) if img.dtype != np.uint8 else img
    h, w, _ = img.shape
    with open(path, "wb") as f:
        note = "".join(f"# {ln}\n" for ln in comment.splitlines()) if comment else ""
        f.write(f"P6\n{note}{w} {h}\n255\n".encode())
        f.write(img.tobytes())


def save_tensor(path, P: np.ndarray) -> None:
    P = np.asarray(P, dtype="<f4")
    if P.ndim != 2:
        raise FormatError("need a D x M matrix")
    with open(path, "wb") as f:
        f.write(struct.pack("<II", *P.shape))
        f.write(np.ascontiguousarray(P).tobytes())


def load_tensor(path) -> np.ndarray:
    data = Path(path).read_bytes()
    D, M = struct.unpack_from("<II", data)
    if len(data) != 8 + 4 * D * M:
        raise FormatError(f"expected {D}x{M} float32 values")
    return np.frombuffer(data, dtype="<f4", offset=8).reshape(D, M).astype(float)
