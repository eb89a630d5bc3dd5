"""Plain-text and binary persistence of configurations, grids and sample matrices."""

from __future__ import annotations

import csv
import os
import struct
from typing import Sequence

import numpy as np

from .core import GasConfig, RodConfig

FLOAT_FMT = ".17g"


def fmt(value) -> str:
    """Format a number with 17 significant digits (integers stay integers)."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), FLOAT_FMT)


def write_csv(path, header: Sequence[str], rows) -> None:
    """Write a table; numbers get 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (int, float, np.integer, np.floating)) else v
                        for v in row])


def read_csv(path):
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        rows = [r for r in rd if r]
    return header, rows


# -- particle configurations ---------------------------------------------------


def write_config_csv(path, c) -> None:
    write_csv(path, ("x", "v", "r"), zip(c.x.tolist(), c.v.tolist(), c.r.tolist()))


def read_config_csv(path, kind: str = "gas"):
    header, rows = read_csv(path)
    if [h.strip() for h in header] != ["x", "v", "r"]:
        raise ValueError(f"{path}: expected header x,v,r, got {','.join(header)}")
    arr = np.array(rows, dtype=np.float64).reshape(-1, 3)
    return _build(arr[:, 0], arr[:, 1], arr[:, 2], kind)


def write_config_binary(path, c) -> None:
    """Little-endian int64 count followed by the x, v and r float64 arrays."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<q", len(c)))
        for col in (c.x, c.v, c.r):
            fh.write(np.ascontiguousarray(col, dtype="<f8").tobytes())


def read_config_binary(path, kind: str = "gas"):
    with open(path, "rb") as fh:
        (n,) = struct.unpack("<q", fh.read(8))
        data = np.frombuffer(fh.read(24 * n), dtype="<f8")
    if len(data) != 3 * n:
        raise ValueError(f"{path}: truncated file, expected {n} particles")
    return _build(data[:n], data[n:2 * n], data[2 * n:], kind)


def _build(x, v, r, kind):
    if kind == "gas":
        return GasConfig(x, v, r)
    if kind == "rod":
        # stored order is chain order, keep it
        return RodConfig(x, v, r, sort=False)
    raise ValueError(f"unknown configuration kind {kind!r}")


# -- tensors -------------------------------------------------------------------


def write_tensors(path, arrays) -> None:
    """Sequence of tensors, each as int64 ndim, int64 dims, row-major float64 data."""
    with open(path, "wb") as fh:
        for a in arrays:
            a = np.ascontiguousarray(a, dtype="<f8")
            fh.write(struct.pack("<q", a.ndim))
            fh.write(struct.pack(f"<{a.ndim}q", *a.shape))
            fh.write(a.tobytes())


def read_tensors(path) -> list:
    out = []
    size = os.path.getsize(path)
    with open(path, "rb") as fh:
        while fh.tell() < size:
            (ndim,) = struct.unpack("<q", fh.read(8))
            shape = struct.unpack(f"<{ndim}q", fh.read(8 * ndim))
            count = int(np.prod(shape)) if ndim else 1
            data = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(shape)
            out.append(data.copy())
    return out


# -- Monte Carlo sample matrices ------------------------------------------------


def write_samples_csv(path, samples) -> None:
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    rows = ((i, j, samples[i, j]) for i in range(samples.shape[0]) for j in range(samples.shape[1]))
    write_csv(path, ("replica", "point_index", "value"), rows)


def read_samples_csv(path) -> np.ndarray:
    _, rows = read_csv(path)
    if not rows:
        return np.zeros((0, 0))
    arr = np.array(rows, dtype=np.float64)
    m = int(arr[:, 0].max()) + 1
    p = int(arr[:, 1].max()) + 1
    out = np.full((m, p), np.nan)
    out[arr[:, 0].astype(int), arr[:, 1].astype(int)] = arr[:, 2]
    return out
